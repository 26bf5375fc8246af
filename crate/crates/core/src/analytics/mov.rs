//! Margin of victory under ballot replacement.
//!
//! The margin is the smallest number of ballots that, replaced by arbitrary
//! strict orders, change the winner set (creating a co-winner counts).

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preference::{NormalizedProfile, PreferenceProfile, WeightedOrder};
use crate::rules::{
    positional_scores_normalized, rule_winner_indices, Rational, Rule, RuleError, ScoreVector,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MovMethod {
    ExactGreedy,
    BruteForce,
    Bounds,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MovReport {
    pub rule: Rule,
    /// Exact margin, or the upper bound when `method` is `bounds`.
    pub mov: u64,
    pub method: MovMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<(u64, u64)>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum MovError {
    #[error("margin of victory needs at least one ballot")]
    EmptyProfile,
    #[error("margin of victory needs at least two alternatives")]
    TooFewAlternatives,
    #[error("rule `{0}` is not supported for margin of victory")]
    UnsupportedRule(Rule),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MovConfig {
    /// Non-positional rules are solved exactly when the voter count is at most this.
    pub brute_force_max: u64,
    /// Cap on winner evaluations in the exhaustive search; past it, bounds are reported.
    pub evaluation_budget: u64,
}

impl Default for MovConfig {
    fn default() -> Self {
        MovConfig {
            brute_force_max: 6,
            evaluation_budget: 200_000,
        }
    }
}

pub fn margin_of_victory(profile: &PreferenceProfile, rule: Rule) -> Result<MovReport, MovError> {
    margin_of_victory_with(&profile.normalize(), rule, &MovConfig::default())
}

pub fn margin_of_victory_with(
    profile: &NormalizedProfile,
    rule: Rule,
    config: &MovConfig,
) -> Result<MovReport, MovError> {
    let m = profile.alternative_count();
    let n = profile.voter_count();
    if n == 0 {
        return Err(MovError::EmptyProfile);
    }
    if m < 2 {
        return Err(MovError::TooFewAlternatives);
    }
    if let Some(vector) = rule.score_vector(m)? {
        let mov = greedy_positional(profile, &vector)?;
        return Ok(MovReport {
            rule,
            mov,
            method: MovMethod::ExactGreedy,
            bounds: None,
        });
    }
    if n <= config.brute_force_max {
        if let Some(mov) = brute_force(profile, rule, config.evaluation_budget)? {
            return Ok(MovReport {
                rule,
                mov,
                method: MovMethod::BruteForce,
                bounds: None,
            });
        }
    }
    let upper = challenger_heuristic(profile, rule)?;
    Ok(MovReport {
        rule,
        mov: upper,
        method: MovMethod::Bounds,
        bounds: Some((1, upper)),
    })
}

/// Mean score of the group holding `x` on `ballot`.
fn position_score(ballot: &WeightedOrder, x: usize, s: &ScoreVector) -> Rational {
    let mut pos = 0;
    for group in &ballot.groups {
        if group.contains(&x) {
            return s.span_mean(pos, pos + group.len());
        }
        pos += group.len();
    }
    unreachable!("normalized ballots rank every alternative")
}

/// Exact margin for a positional rule.
///
/// With several tied winners one replacement always separates two of them.
/// With a unique winner `w`, each challenger `c` needs the fewest ballots whose
/// replacement by `c > ... > w` closes the gap; ballot `b` closes
/// `(s_1 - s(c, b)) + (s(w, b) - s_m)` of it.
pub fn greedy_positional(profile: &NormalizedProfile, s: &ScoreVector) -> Result<u64, MovError> {
    let scores = positional_scores_normalized(profile, s)?;
    let best = scores.iter().max().copied().unwrap_or_default();
    let winners: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] == best).collect();
    if winners.len() > 1 {
        return Ok(1);
    }
    let w = winners[0];
    let (top, bottom) = (s.top(), s.bottom());
    let mut mov = profile.voter_count();
    for c in (0..scores.len()).filter(|&c| c != w) {
        let deficit = scores[w] - scores[c];
        let mut gains: Vec<(Rational, u64)> = profile
            .ballots
            .iter()
            .map(|b| {
                let gain = (top - position_score(b, c, s)) + (position_score(b, w, s) - bottom);
                (gain, b.weight)
            })
            .filter(|(g, _)| !g.is_zero())
            .collect();
        gains.sort_by_key(|g| std::cmp::Reverse(g.0));
        let mut closed = Rational::zero();
        let mut used = 0u64;
        for (gain, weight) in gains {
            if closed >= deficit || used >= mov {
                break;
            }
            // Units of one ballot all carry the same gain.
            let still = deficit - closed;
            let needed = (still / gain).ceil().to_integer().max(1) as u64;
            let take = needed.min(weight);
            used += take;
            closed += gain * Rational::from_integer(take as i128);
        }
        if closed >= deficit {
            mov = mov.min(used);
        }
    }
    Ok(mov)
}

fn winners_of(profile: &NormalizedProfile, rule: Rule) -> Result<Vec<usize>, MovError> {
    Ok(rule_winner_indices(profile, rule)?)
}

/// All strict orders over `0..m` as singleton-group orders.
fn strict_orders(m: usize) -> Vec<Vec<Vec<usize>>> {
    fn permute(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
        if rest.is_empty() {
            out.push(prefix.iter().map(|&x| vec![x]).collect());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            permute(prefix, rest, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    permute(&mut Vec::new(), &mut (0..m).collect(), &mut out);
    out
}

/// Visits every vector `counts` with `counts[i] <= caps[i]` summing to `total`.
fn for_each_bounded(caps: &[u64], total: u64, f: &mut dyn FnMut(&[u64]) -> bool) -> bool {
    fn go(caps: &[u64], i: usize, left: u64, cur: &mut Vec<u64>, f: &mut dyn FnMut(&[u64]) -> bool) -> bool {
        if i == caps.len() {
            return left != 0 || f(cur);
        }
        let remaining_cap: u64 = caps[i + 1..].iter().sum();
        let lo = left.saturating_sub(remaining_cap);
        for take in lo..=caps[i].min(left) {
            cur.push(take);
            let keep_going = go(caps, i + 1, left - take, cur, f);
            cur.pop();
            if !keep_going {
                return false;
            }
        }
        true
    }
    go(caps, 0, total, &mut Vec::new(), f)
}

/// Exhaustive search over removed sub-multisets and added multisets of strict
/// orders, smallest size first. `None` when the evaluation budget runs out.
pub fn brute_force(
    profile: &NormalizedProfile,
    rule: Rule,
    budget: u64,
) -> Result<Option<u64>, MovError> {
    let m = profile.alternative_count();
    let n = profile.voter_count();
    if n == 0 {
        return Err(MovError::EmptyProfile);
    }
    let original = winners_of(profile, rule)?;
    let orders = strict_orders(m);
    let caps: Vec<u64> = profile.ballots.iter().map(|b| b.weight).collect();
    let mut evaluations = 0u64;
    let mut error = None;

    for k in 1..=n {
        let mut found = false;
        let mut exhausted = false;
        for_each_bounded(&caps, k, &mut |removed| {
            let mut base: Vec<WeightedOrder> = profile
                .ballots
                .iter()
                .zip(removed)
                .filter(|(b, &r)| b.weight > r)
                .map(|(b, &r)| WeightedOrder {
                    weight: b.weight - r,
                    groups: b.groups.clone(),
                })
                .collect();
            let keep = base.len();
            let order_caps = vec![k; orders.len()];
            for_each_bounded(&order_caps, k, &mut |added| {
                if evaluations >= budget {
                    exhausted = true;
                    return false;
                }
                evaluations += 1;
                base.truncate(keep);
                for (i, &count) in added.iter().enumerate() {
                    if count > 0 {
                        base.push(WeightedOrder {
                            weight: count,
                            groups: orders[i].clone(),
                        });
                    }
                }
                let modified = NormalizedProfile {
                    ids: profile.ids.clone(),
                    ballots: base.clone(),
                };
                match winners_of(&modified, rule) {
                    Ok(w) if w != original => {
                        found = true;
                        false
                    }
                    Ok(_) => true,
                    Err(e) => {
                        error = Some(e);
                        false
                    }
                }
            })
        });
        if let Some(e) = error {
            return Err(e);
        }
        if found {
            return Ok(Some(k));
        }
        if exhausted {
            return Ok(None);
        }
    }
    // Replacing every ballot always suffices for m >= 2; reaching here means m < 2.
    Err(MovError::TooFewAlternatives)
}

/// Upper bound: for each challenger, replace ballots one at a time (those
/// ranking the challenger lowest first) by `challenger > ... > winner` until
/// the winner set changes.
pub fn challenger_heuristic(profile: &NormalizedProfile, rule: Rule) -> Result<u64, MovError> {
    let m = profile.alternative_count();
    let n = profile.voter_count();
    let original = winners_of(profile, rule)?;
    let w = original[0];
    let mut best = n;
    for c in (0..m).filter(|&c| c != w) {
        let mut replacement: Vec<Vec<usize>> = vec![vec![c]];
        replacement.extend((0..m).filter(|&x| x != c && x != w).map(|x| vec![x]));
        replacement.push(vec![w]);

        // Units in order of how far the ballot is from the replacement.
        let mut units: Vec<(usize, usize)> = profile
            .ballots
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let pos = b.group_index(m);
                (i, pos[c] + (b.groups.len() - 1 - pos[w]))
            })
            .collect();
        units.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

        let mut ballots = profile.ballots.clone();
        ballots.push(WeightedOrder {
            weight: 0,
            groups: replacement,
        });
        let added = ballots.len() - 1;
        let mut used = 0u64;
        'outer: for (i, _) in units {
            while ballots[i].weight > 0 {
                if used + 1 >= best {
                    break 'outer;
                }
                ballots[i].weight -= 1;
                ballots[added].weight += 1;
                used += 1;
                let modified = NormalizedProfile {
                    ids: profile.ids.clone(),
                    ballots: ballots.iter().filter(|b| b.weight > 0).cloned().collect(),
                };
                if winners_of(&modified, rule)? != original {
                    best = best.min(used);
                    break 'outer;
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preference::parse_profile;

    fn mov(text: &str, rule: Rule) -> MovReport {
        margin_of_victory(&parse_profile(text).unwrap(), rule).unwrap()
    }

    #[test]
    fn single_ballot_any_rule() {
        let text = "alternatives: a,b,c\n1: a > b > c\n";
        for rule in Rule::default_set() {
            assert_eq!(mov(text, rule).mov, 1, "{rule}");
        }
    }

    #[test]
    fn four_unanimous_plurality_two_alternatives() {
        let r = mov("alternatives: a,b\n4: a > b\n", Rule::Plurality);
        assert_eq!((r.mov, r.method), (2, MovMethod::ExactGreedy));
        let n = parse_profile("alternatives: a,b\n4: a > b\n").unwrap().normalize();
        assert_eq!(brute_force(&n, Rule::Plurality, u64::MAX).unwrap(), Some(2));
    }

    #[test]
    fn exact_tie_needs_one() {
        assert_eq!(mov("alternatives: a,b\n1: a > b\n1: b > a\n", Rule::Plurality).mov, 1);
    }

    #[test]
    fn put_rules_use_brute_force_when_small() {
        let r = mov("alternatives: a,b,c\n3: a > b > c\n1: b > c > a\n", Rule::StvPut);
        assert_eq!(r.method, MovMethod::BruteForce);
        // One a-ballot turned into b>a leaves 2:2, which ties the final pair.
        assert_eq!(r.mov, 1);
    }

    #[test]
    fn put_rules_fall_back_to_bounds() {
        let r = mov("alternatives: a,b,c\n9: a > b > c\n", Rule::RankedPairsPut);
        assert_eq!(r.method, MovMethod::Bounds);
        let (lo, hi) = r.bounds.unwrap();
        assert_eq!(lo, 1);
        assert!(hi >= lo && hi <= 9 && r.mov == hi);
        // After 4 replacements a still beats everyone 5:4; 5 flips a pairwise contest.
        assert_eq!(hi, 5);
    }

    #[test]
    fn rejects_degenerate_input() {
        let p = parse_profile("alternatives: a\n1: a\n").unwrap();
        assert_eq!(margin_of_victory(&p, Rule::Plurality), Err(MovError::TooFewAlternatives));
        let p = parse_profile("alternatives: a,b\n").unwrap();
        assert_eq!(margin_of_victory(&p, Rule::Plurality), Err(MovError::EmptyProfile));
    }

    #[test]
    fn bounded_vectors_enumerated() {
        let mut seen = Vec::new();
        for_each_bounded(&[1, 2], 2, &mut |v| {
            seen.push(v.to_vec());
            true
        });
        assert_eq!(seen, [vec![0, 2], vec![1, 1]]);
    }
}
