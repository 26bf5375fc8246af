//! Voting rules: positional scoring rules and the all-winners (parallel
//! universe tie-breaking) searches for STV and ranked pairs.

mod positional;
mod ranked_pairs;
mod stv;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preference::{AltId, NormalizedProfile, PreferenceProfile};

pub use positional::{positional_scores, positional_scores_normalized, ScoreVector};
pub use ranked_pairs::{ranked_pairs_fixed_order, ranked_pairs_put_normalized};
pub use stv::{stv_fixed_order, stv_put_normalized, stv_round, StvRound};

/// Exact rational used for every score.
pub type Rational = Ratio<i128>;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("profile has no ballots")]
    EmptyProfile,
    #[error("profile has no alternatives")]
    NoAlternatives,
    #[error("k-approval needs 1 <= k <= m-1, got k={k} with m={m}")]
    InvalidK { k: usize, m: usize },
    #[error("score vector has length {got}, expected {expected}")]
    ScoreLength { got: usize, expected: usize },
    #[error("score vector must be non-increasing")]
    NotNonIncreasing,
    #[error("at most {max} alternatives are supported by this rule, got {got}")]
    TooManyAlternatives { got: usize, max: usize },
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
}

/// A configured voting rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Plurality,
    Borda,
    Veto,
    KApproval(usize),
    StvPut,
    RankedPairsPut,
}

impl Rule {
    /// plurality, borda, veto, 2-approval, STV (PUT), ranked pairs (PUT).
    pub fn default_set() -> Vec<Rule> {
        vec![
            Rule::Plurality,
            Rule::Borda,
            Rule::Veto,
            Rule::KApproval(2),
            Rule::StvPut,
            Rule::RankedPairsPut,
        ]
    }

    pub fn is_positional(&self) -> bool {
        !matches!(self, Rule::StvPut | Rule::RankedPairsPut)
    }

    pub fn score_vector(&self, m: usize) -> Result<Option<ScoreVector>, RuleError> {
        Ok(match *self {
            Rule::Plurality => Some(ScoreVector::plurality(m)),
            Rule::Borda => Some(ScoreVector::borda(m)),
            Rule::Veto => Some(ScoreVector::veto(m)),
            Rule::KApproval(k) => Some(ScoreVector::k_approval(m, k)?),
            Rule::StvPut | Rule::RankedPairsPut => None,
        })
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Plurality => f.write_str("plurality"),
            Rule::Borda => f.write_str("borda"),
            Rule::Veto => f.write_str("veto"),
            Rule::KApproval(k) => write!(f, "{k}_approval"),
            Rule::StvPut => f.write_str("stv_put"),
            Rule::RankedPairsPut => f.write_str("ranked_pairs_put"),
        }
    }
}

impl FromStr for Rule {
    type Err = RuleError;

    /// Accepts `plurality`, `borda`, `veto`, `stv_put` (or `stv`),
    /// `ranked_pairs_put` (or `ranked_pairs`), and k-approval as
    /// `2_approval`, `2-approval` or `k_approval:2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let rule = match lower.as_str() {
            "plurality" => Rule::Plurality,
            "borda" => Rule::Borda,
            "veto" | "antiplurality" => Rule::Veto,
            "stv" | "stv_put" => Rule::StvPut,
            "ranked_pairs" | "ranked_pairs_put" | "rp" => Rule::RankedPairsPut,
            other => {
                let k = other
                    .strip_prefix("k_approval:")
                    .or_else(|| other.strip_suffix("_approval"))
                    .or_else(|| other.strip_suffix("-approval"))
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| RuleError::UnknownRule(s.to_string()))?;
                Rule::KApproval(k)
            }
        };
        Ok(rule)
    }
}

impl Serialize for Rule {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rule {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A score rendered as `p/q` (or `p` when integral) in text and JSON.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Score(pub Rational);

impl Score {
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for Score {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let parse = |t: &str| t.trim().parse::<i128>().map_err(serde::de::Error::custom);
        let value = match s.split_once('/') {
            Some((n, d)) => {
                let d = parse(d)?;
                if d.is_zero() {
                    return Err(serde::de::Error::custom("zero denominator"));
                }
                Rational::new(parse(n)?, d)
            }
            None => Rational::from_integer(parse(&s)?),
        };
        Ok(Score(value))
    }
}

/// One row of the results table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleResult {
    pub rule: Rule,
    /// Winners in canonical alternative order.
    pub winners: Vec<AltId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<BTreeMap<AltId, Score>>,
    /// DFS node count for the PUT searches.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub universes_explored: Option<u64>,
}

/// Winner indices of `rule` on a normalized profile.
pub fn rule_winner_indices(
    profile: &NormalizedProfile,
    rule: Rule,
) -> Result<Vec<usize>, RuleError> {
    Ok(evaluate(profile, rule)?.0)
}

fn evaluate(
    profile: &NormalizedProfile,
    rule: Rule,
) -> Result<(Vec<usize>, Option<Vec<Rational>>, Option<u64>), RuleError> {
    let m = profile.alternative_count();
    if m == 0 {
        return Err(RuleError::NoAlternatives);
    }
    if profile.voter_count() == 0 {
        return Err(RuleError::EmptyProfile);
    }
    match rule {
        Rule::StvPut => {
            let put = stv_put_normalized(profile)?;
            Ok((put.winners, None, Some(put.nodes)))
        }
        Rule::RankedPairsPut => {
            let put = ranked_pairs_put_normalized(profile)?;
            Ok((put.winners, None, Some(put.nodes)))
        }
        positional => {
            let vector = positional
                .score_vector(m)?
                .expect("positional rules carry a score vector");
            let scores = positional_scores_normalized(profile, &vector)?;
            let best = scores.iter().max().copied().unwrap_or_default();
            let winners = (0..m).filter(|&i| scores[i] == best).collect();
            Ok((winners, Some(scores), None))
        }
    }
}

/// Applies one rule and reports all tied winners.
pub fn rule_winners(profile: &PreferenceProfile, rule: Rule) -> Result<RuleResult, RuleError> {
    rule_result(&profile.normalize(), rule)
}

pub(crate) fn rule_result(profile: &NormalizedProfile, rule: Rule) -> Result<RuleResult, RuleError> {
    let (winners, scores, nodes) = evaluate(profile, rule)?;
    Ok(RuleResult {
        rule,
        winners: winners.iter().map(|&i| profile.ids[i].clone()).collect(),
        scores: scores.map(|s| {
            s.into_iter()
                .enumerate()
                .map(|(i, v)| (profile.ids[i].clone(), Score(v)))
                .collect()
        }),
        universes_explored: nodes,
    })
}

/// All-winners STV: every alternative that wins in some elimination universe.
pub fn stv_put_winners(profile: &PreferenceProfile) -> Result<RuleResult, RuleError> {
    rule_winners(profile, Rule::StvPut)
}

/// All-winners ranked pairs: every source of some locking universe.
pub fn ranked_pairs_put_winners(profile: &PreferenceProfile) -> Result<RuleResult, RuleError> {
    rule_winners(profile, Rule::RankedPairsPut)
}

/// One row per rule in the order given.
pub fn results_table(
    profile: &PreferenceProfile,
    rules: &[Rule],
) -> Result<Vec<RuleResult>, RuleError> {
    let normalized = profile.normalize();
    rules.iter().map(|&r| rule_result(&normalized, r)).collect()
}

/// Outcome of a parallel-universe search over alternative indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PutOutcome {
    pub winners: Vec<usize>,
    pub nodes: u64,
}

/// Bitmask search state limit.
pub(crate) const MAX_PUT_ALTERNATIVES: usize = 64;
