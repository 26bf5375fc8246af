//! STV over weak orders with every tied-lowest elimination explored.
//!
//! Each round a ballot's unit mass is split equally across the remaining
//! members of its topmost group that still has a remaining member. An
//! alternative wins once it is alone or holds a strict majority of the mass.

use std::collections::HashSet;

use num_traits::Zero;

use super::{PutOutcome, Rational, RuleError, MAX_PUT_ALTERNATIVES};
use crate::preference::NormalizedProfile;

/// What happens in one round for a given remaining set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StvRound {
    Winner(usize),
    /// Every alternative tied for the lowest score.
    Eliminate(Vec<usize>),
}

fn check(profile: &NormalizedProfile) -> Result<(), RuleError> {
    let m = profile.alternative_count();
    if m == 0 {
        return Err(RuleError::NoAlternatives);
    }
    if m > MAX_PUT_ALTERNATIVES {
        return Err(RuleError::TooManyAlternatives {
            got: m,
            max: MAX_PUT_ALTERNATIVES,
        });
    }
    if profile.voter_count() == 0 {
        return Err(RuleError::EmptyProfile);
    }
    Ok(())
}

fn full_mask(m: usize) -> u64 {
    if m == 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

/// Fractional plurality scores of the alternatives in `remaining` (a bitmask).
pub fn round_scores(profile: &NormalizedProfile, remaining: u64) -> Vec<Rational> {
    let mut scores = vec![Rational::zero(); profile.alternative_count()];
    for ballot in &profile.ballots {
        let live = ballot.groups.iter().find_map(|g| {
            let alive: Vec<usize> = g.iter().copied().filter(|&x| remaining >> x & 1 == 1).collect();
            (!alive.is_empty()).then_some(alive)
        });
        if let Some(alive) = live {
            let share = Rational::new(ballot.weight as i128, alive.len() as i128);
            for x in alive {
                scores[x] += share;
            }
        }
    }
    scores
}

/// Decides one round for the alternatives in `remaining`.
pub fn stv_round(profile: &NormalizedProfile, remaining: u64) -> StvRound {
    let alive: Vec<usize> = (0..profile.alternative_count())
        .filter(|&x| remaining >> x & 1 == 1)
        .collect();
    if alive.len() == 1 {
        return StvRound::Winner(alive[0]);
    }
    let scores = round_scores(profile, remaining);
    let total: Rational = alive.iter().map(|&x| scores[x]).sum();
    let half = total / Rational::from_integer(2);
    if let Some(&w) = alive.iter().find(|&&x| scores[x] > half) {
        return StvRound::Winner(w);
    }
    let lowest = alive.iter().map(|&x| scores[x]).min().unwrap_or_default();
    StvRound::Eliminate(alive.into_iter().filter(|&x| scores[x] == lowest).collect())
}

/// Depth-first search over elimination universes, memoized on the remaining set.
pub fn stv_put_normalized(profile: &NormalizedProfile) -> Result<PutOutcome, RuleError> {
    check(profile)?;
    let m = profile.alternative_count();
    let mut winners = 0u64;
    let mut visited = HashSet::new();
    let mut stack = vec![full_mask(m)];
    while let Some(remaining) = stack.pop() {
        if !visited.insert(remaining) {
            continue;
        }
        match stv_round(profile, remaining) {
            StvRound::Winner(w) => winners |= 1 << w,
            StvRound::Eliminate(tied) => {
                for x in tied.into_iter().rev() {
                    let next = remaining & !(1 << x);
                    if !visited.contains(&next) {
                        stack.push(next);
                    }
                }
            }
        }
    }
    Ok(PutOutcome {
        winners: (0..m).filter(|&x| winners >> x & 1 == 1).collect(),
        nodes: visited.len() as u64,
    })
}

/// STV that always eliminates the lowest-index alternative among those tied.
pub fn stv_fixed_order(profile: &NormalizedProfile) -> Result<usize, RuleError> {
    check(profile)?;
    let mut remaining = full_mask(profile.alternative_count());
    loop {
        match stv_round(profile, remaining) {
            StvRound::Winner(w) => return Ok(w),
            StvRound::Eliminate(tied) => remaining &= !(1 << tied[0]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preference::parse_profile;

    fn put(text: &str) -> Vec<usize> {
        stv_put_normalized(&parse_profile(text).unwrap().normalize())
            .unwrap()
            .winners
    }

    #[test]
    fn first_round_majority() {
        assert_eq!(put("alternatives: a,b,c\n3: a > b > c\n1: b > a > c\n"), [0]);
    }

    #[test]
    fn symmetric_two_cycle() {
        assert_eq!(put("alternatives: a,b\n1: a > b\n1: b > a\n"), [0, 1]);
    }

    #[test]
    fn tied_top_group_splits_mass() {
        // a=b split 1/2 each; c has 1; b has 1 + 1/2 after the split, a has 1/2.
        let p = parse_profile("alternatives: a,b,c\n1: a = b > c\n1: c > a > b\n1: b > c > a\n").unwrap();
        let n = p.normalize();
        let scores = round_scores(&n, 0b111);
        assert_eq!(scores, [Rational::new(1, 2), Rational::new(3, 2), Rational::from_integer(1)]);
        assert_eq!(stv_round(&n, 0b111), StvRound::Eliminate(vec![0]));
        // without a: b gets the full first ballot, 2 of 3.
        assert_eq!(stv_round(&n, 0b110), StvRound::Winner(1));
    }

    #[test]
    fn memo_counts_distinct_states() {
        // Four-way symmetric tie: every subset of size >= 2 can be reached.
        let text = "alternatives: a,b,c,d\n1: a > b > c > d\n1: b > c > d > a\n1: c > d > a > b\n1: d > a > b > c\n";
        let n = parse_profile(text).unwrap().normalize();
        let out = stv_put_normalized(&n).unwrap();
        assert_eq!(out.winners, [0, 1, 2, 3]);
        assert!(out.nodes <= 15);
        assert!(out.winners.contains(&stv_fixed_order(&n).unwrap()));
    }
}
