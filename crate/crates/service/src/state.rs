//! In-memory state rebuilt from the event log. `apply` is the only mutator
//! and never fails: events are validated before they are written.

use std::collections::BTreeMap;

use concord_core::combinatorial::{Assignment, Voter};
use concord_core::matching::apply_edits;
use serde::{Deserialize, Serialize};

use crate::model::{
    BallotRecord, IssueDecision, MatchingSession, Payload, Poll, PollStatus, ResultsSnapshot,
};
use crate::store::Event;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PollState {
    pub poll: Poll,
    /// Every revision in submission order.
    pub ballots: Vec<BallotRecord>,
    pub snapshots: Vec<ResultsSnapshot>,
    pub decisions: Vec<IssueDecision>,
}

impl PollState {
    /// Latest revision per voter, keyed by voter token.
    pub fn effective(&self) -> BTreeMap<&str, &BallotRecord> {
        let mut out = BTreeMap::new();
        for b in &self.ballots {
            out.insert(b.voter.as_str(), b);
        }
        out
    }

    pub fn revision_of(&self, voter: &str) -> u64 {
        self.ballots.iter().filter(|b| b.voter == voter).count() as u64
    }

    /// Voters of a multi-issue poll. A CP-net submission replaces whatever the
    /// voter had; live votes accumulate into one assignment per voter.
    pub fn sequential_voters(&self) -> BTreeMap<String, Voter> {
        let mut out: BTreeMap<String, Voter> = BTreeMap::new();
        for b in &self.ballots {
            match &b.payload {
                Payload::CpNet { net } => {
                    out.insert(b.voter.clone(), Voter::CpNet(net.clone()));
                }
                Payload::IssueVote { issue, value } => {
                    let entry = out
                        .entry(b.voter.clone())
                        .or_insert_with(|| Voter::Live(Assignment::new()));
                    if let Voter::CpNet(_) = entry {
                        *entry = Voter::Live(Assignment::new());
                    }
                    if let Voter::Live(votes) = entry {
                        votes.insert(issue.clone(), value.clone());
                    }
                }
                _ => {}
            }
        }
        out
    }

    pub fn decided(&self) -> Assignment {
        self.decisions
            .iter()
            .map(|d| (d.tally.issue.clone(), d.tally.outcome.clone()))
            .collect()
    }

    /// Issue open for live votes, if any.
    pub fn current_issue(&self) -> Option<&str> {
        if self.poll.status == PollStatus::Closed {
            return None;
        }
        let order = &self.poll.config.multipoll.as_ref()?.issue_order;
        order.get(self.decisions.len()).map(String::as_str)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub polls: BTreeMap<String, PollState>,
    pub matchings: BTreeMap<String, MatchingSession>,
}

impl State {
    pub fn next_poll_id(&self) -> String {
        format!("poll-{}", self.polls.len() + 1)
    }

    pub fn next_matching_id(&self) -> String {
        format!("match-{}", self.matchings.len() + 1)
    }

    pub fn apply(&mut self, event: &Event) {
        match event {
            Event::PollCreated { poll } => {
                self.polls.insert(
                    poll.id.clone(),
                    PollState {
                        poll: poll.clone(),
                        ballots: Vec::new(),
                        snapshots: Vec::new(),
                        decisions: Vec::new(),
                    },
                );
            }
            Event::BallotSubmitted { ballot } => {
                if let Some(p) = self.polls.get_mut(&ballot.poll) {
                    p.ballots.push(ballot.clone());
                }
            }
            Event::PollClosed { poll, .. } => {
                if let Some(p) = self.polls.get_mut(poll) {
                    p.poll.status = PollStatus::Closed;
                }
            }
            Event::SnapshotStored { snapshot } => {
                if let Some(p) = self.polls.get_mut(&snapshot.poll) {
                    p.snapshots.push(snapshot.clone());
                }
            }
            Event::IssueDecided { decision } => {
                if let Some(p) = self.polls.get_mut(&decision.poll) {
                    p.decisions.push(decision.clone());
                }
            }
            Event::MatchingCreated { session } => {
                self.matchings.insert(session.id.clone(), session.clone());
            }
            Event::InstanceReplaced { session, instance } => {
                if let Some(s) = self.matchings.get_mut(session) {
                    s.instance = Some(instance.clone());
                }
            }
            Event::InstanceEdited { session, edits } => {
                if let Some(s) = self.matchings.get_mut(session) {
                    if let Some(current) = &s.instance {
                        match apply_edits(current, edits) {
                            Ok(edited) => s.instance = Some(edited),
                            Err(e) => tracing::error!(%session, "logged edit no longer applies: {e}"),
                        }
                    }
                }
            }
            Event::MatchingRan { session, run } => {
                if let Some(s) = self.matchings.get_mut(session) {
                    s.runs.push(run.clone());
                }
            }
        }
    }
}
