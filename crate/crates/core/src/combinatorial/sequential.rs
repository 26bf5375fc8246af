//! Sequential majority voting over binary issues.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::cpnet::{Assignment, CpNet, CpNetError, Issue};

/// A CP-net voter votes automatically; a live voter records one value per issue.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Voter {
    CpNet(CpNet),
    Live(Assignment),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiPollConfig {
    pub issues: Vec<Issue>,
    pub issue_order: Vec<String>,
    /// Value chosen on an exact tie. Issues without an entry fall back to their second value.
    #[serde(default)]
    pub tie_break: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SequentialError {
    #[error("issue order must list every issue exactly once")]
    BadIssueOrder,
    #[error("tie-break value `{value}` is not in the domain of `{issue}`")]
    BadTieBreak { issue: String, value: String },
    #[error("voter {voter}: CP-net is invalid")]
    InvalidNet { voter: usize },
    #[error("voter {voter}: CP-net issues differ from the poll's issues")]
    IssueMismatch { voter: usize },
    #[error("voter {voter}: CP-net is not legal for the issue order")]
    NotLegal { voter: usize },
    #[error("voter {voter} has no vote on `{issue}`")]
    MissingLiveVote { voter: usize, issue: String },
    #[error("voter {voter}: `{value}` is not a value of `{issue}`")]
    InvalidValue { voter: usize, issue: String, value: String },
    #[error("unknown issue `{0}`")]
    UnknownIssue(String),
    #[error(transparent)]
    Net(#[from] CpNetError),
}

/// Votes cast on one issue and its outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueTally {
    pub issue: String,
    /// Vote count per domain value, in domain order.
    pub counts: [u64; 2],
    pub outcome: String,
    pub tie_broken: bool,
    /// Voters that had not voted and were left out.
    #[serde(default)]
    pub abstained: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequentialOutcome {
    pub assignment: Assignment,
    /// In decision order.
    pub tallies: Vec<IssueTally>,
}

impl MultiPollConfig {
    pub fn issue(&self, id: &str) -> Option<&Issue> {
        self.issues.iter().find(|i| i.id == id)
    }

    pub fn validate(&self) -> Result<(), SequentialError> {
        let declared: BTreeSet<&str> = self.issues.iter().map(|i| i.id.as_str()).collect();
        let ordered: BTreeSet<&str> = self.issue_order.iter().map(String::as_str).collect();
        if declared.len() != self.issues.len()
            || ordered != declared
            || self.issue_order.len() != self.issues.len()
        {
            return Err(SequentialError::BadIssueOrder);
        }
        for (issue, value) in &self.tie_break {
            let ok = self.issue(issue).is_some_and(|i| i.has_value(value));
            if !ok {
                return Err(SequentialError::BadTieBreak {
                    issue: issue.clone(),
                    value: value.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn tie_value(&self, issue: &Issue) -> String {
        self.tie_break
            .get(&issue.id)
            .cloned()
            .unwrap_or_else(|| issue.values[1].clone())
    }

    /// Rejects a CP-net that is invalid, covers different issues, or is not legal for the order.
    pub fn check_net(&self, net: &CpNet, voter: usize) -> Result<(), SequentialError> {
        if !net.validate().is_valid() {
            return Err(SequentialError::InvalidNet { voter });
        }
        let same_issues = net.issues.len() == self.issues.len()
            && self
                .issues
                .iter()
                .all(|i| net.issue(&i.id).is_some_and(|n| n.values == i.values));
        if !same_issues {
            return Err(SequentialError::IssueMismatch { voter });
        }
        if !net.is_order_legal(&self.issue_order)? {
            return Err(SequentialError::NotLegal { voter });
        }
        Ok(())
    }
}

/// Decides one issue by majority given the already decided prefix.
/// With `allow_missing`, live voters without a vote abstain instead of failing.
pub fn decide_issue(
    voters: &[Voter],
    config: &MultiPollConfig,
    decided: &Assignment,
    issue_id: &str,
    allow_missing: bool,
) -> Result<IssueTally, SequentialError> {
    let issue = config
        .issue(issue_id)
        .ok_or_else(|| SequentialError::UnknownIssue(issue_id.to_string()))?;
    let mut counts = [0u64; 2];
    let mut abstained = 0;
    for (v, voter) in voters.iter().enumerate() {
        let value = match voter {
            Voter::CpNet(net) => net.local_vote(issue_id, decided)?.to_string(),
            Voter::Live(votes) => match votes.get(issue_id) {
                Some(value) => value.clone(),
                None if allow_missing => {
                    abstained += 1;
                    continue;
                }
                None => {
                    return Err(SequentialError::MissingLiveVote {
                        voter: v,
                        issue: issue_id.to_string(),
                    })
                }
            },
        };
        let slot = issue
            .values
            .iter()
            .position(|x| *x == value)
            .ok_or_else(|| SequentialError::InvalidValue {
                voter: v,
                issue: issue_id.to_string(),
                value: value.clone(),
            })?;
        counts[slot] += 1;
    }
    let (outcome, tie_broken) = match counts[0].cmp(&counts[1]) {
        std::cmp::Ordering::Greater => (issue.values[0].clone(), false),
        std::cmp::Ordering::Less => (issue.values[1].clone(), false),
        std::cmp::Ordering::Equal => (config.tie_value(issue), true),
    };
    Ok(IssueTally {
        issue: issue_id.to_string(),
        counts,
        outcome,
        tie_broken,
        abstained,
    })
}

/// Decides every issue in order; CP-net voters vote their table row given the decided prefix.
pub fn sequential_vote(
    voters: &[Voter],
    config: &MultiPollConfig,
) -> Result<SequentialOutcome, SequentialError> {
    config.validate()?;
    for (v, voter) in voters.iter().enumerate() {
        if let Voter::CpNet(net) = voter {
            config.check_net(net, v)?;
        }
    }
    let mut assignment = Assignment::new();
    let mut tallies = Vec::with_capacity(config.issue_order.len());
    for issue in &config.issue_order {
        let tally = decide_issue(voters, config, &assignment, issue, false)?;
        assignment.insert(issue.clone(), tally.outcome.clone());
        tallies.push(tally);
    }
    Ok(SequentialOutcome { assignment, tallies })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorial::cpnet::parse_cpnet;

    fn config(order: &[&str]) -> MultiPollConfig {
        MultiPollConfig {
            issues: vec![Issue::yes_no("x"), Issue::yes_no("y")],
            issue_order: order.iter().map(|s| s.to_string()).collect(),
            tie_break: BTreeMap::new(),
        }
    }

    fn cp(text: &str) -> Voter {
        Voter::CpNet(parse_cpnet(text).unwrap())
    }

    #[test]
    fn unanimous_yes() {
        let v = cp("issue x\nissue y\nrow x []: yes > no\nrow y []: yes > no\n");
        let out = sequential_vote(&[v.clone(), v.clone(), v], &config(&["x", "y"])).unwrap();
        assert_eq!(out.assignment["x"], "yes");
        assert_eq!(out.assignment["y"], "yes");
        assert_eq!(out.tallies[0].counts, [3, 0]);
    }

    #[test]
    fn split_uses_tie_break() {
        let yes = Voter::Live([("x".to_string(), "yes".to_string()), ("y".to_string(), "yes".to_string())].into());
        let no = Voter::Live([("x".to_string(), "no".to_string()), ("y".to_string(), "yes".to_string())].into());
        let mut c = config(&["x", "y"]);
        c.tie_break.insert("x".into(), "no".into());
        let out = sequential_vote(&[yes, no], &c).unwrap();
        assert_eq!(out.assignment["x"], "no");
        assert!(out.tallies[0].tie_broken);
    }

    #[test]
    fn conditional_rows_follow_decided_prefix() {
        let flips = "issue x\nissue y\nparents y: x\nrow x []: yes > no\nrow y [x=yes]: no > yes\nrow y [x=no]: yes > no\n";
        let contrarian = "issue x\nissue y\nrow x []: no > yes\nrow y []: yes > no\n";
        let voters = [cp(flips), cp(flips), cp(contrarian)];
        let out = sequential_vote(&voters, &config(&["x", "y"])).unwrap();
        assert_eq!(out.assignment["x"], "yes");
        // two flipping voters now say no, contrarian says yes.
        assert_eq!(out.assignment["y"], "no");
        assert_eq!(out.tallies[1].counts, [1, 2]);
    }

    #[test]
    fn rejects_illegal_nets_and_missing_votes() {
        let child_first = cp("issue x\nissue y\nparents x: y\nrow y []: yes > no\nrow x [y=yes]: yes > no\nrow x [y=no]: no > yes\n");
        assert_eq!(
            sequential_vote(&[child_first], &config(&["x", "y"])),
            Err(SequentialError::NotLegal { voter: 0 })
        );
        let partial = Voter::Live([("x".to_string(), "yes".to_string())].into());
        assert_eq!(
            sequential_vote(&[partial], &config(&["x", "y"])),
            Err(SequentialError::MissingLiveVote { voter: 0, issue: "y".into() })
        );
        assert_eq!(
            sequential_vote(&[], &config(&["x"])),
            Err(SequentialError::BadIssueOrder)
        );
    }

    #[test]
    fn empty_electorate_takes_tie_values() {
        let out = sequential_vote(&[], &config(&["y", "x"])).unwrap();
        assert_eq!(out.assignment["x"], "no");
        assert_eq!(out.tallies[0].issue, "y");
    }
}
