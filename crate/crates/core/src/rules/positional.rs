use std::collections::BTreeMap;

use num_traits::Zero;

use super::{Rational, RuleError};
use crate::preference::{AltId, NormalizedProfile, PreferenceProfile};

/// Position scores `s_1 >= s_2 >= ... >= s_m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScoreVector(Vec<Rational>);

impl ScoreVector {
    pub fn new(entries: Vec<Rational>) -> Result<Self, RuleError> {
        if entries.windows(2).any(|w| w[0] < w[1]) {
            return Err(RuleError::NotNonIncreasing);
        }
        Ok(ScoreVector(entries))
    }

    pub fn from_integers(entries: &[i64]) -> Result<Self, RuleError> {
        ScoreVector::new(entries.iter().map(|&x| Rational::from_integer(x as i128)).collect())
    }

    pub fn plurality(m: usize) -> Self {
        ScoreVector((0..m).map(|i| int(i == 0)).collect())
    }

    pub fn borda(m: usize) -> Self {
        ScoreVector((0..m).map(|i| Rational::from_integer((m - 1 - i) as i128)).collect())
    }

    pub fn veto(m: usize) -> Self {
        ScoreVector((0..m).map(|i| int(i + 1 < m)).collect())
    }

    pub fn k_approval(m: usize, k: usize) -> Result<Self, RuleError> {
        if k == 0 || k >= m {
            return Err(RuleError::InvalidK { k, m });
        }
        Ok(ScoreVector((0..m).map(|i| int(i < k)).collect()))
    }

    pub fn entries(&self) -> &[Rational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn top(&self) -> Rational {
        self.0.first().copied().unwrap_or_default()
    }

    pub fn bottom(&self) -> Rational {
        self.0.last().copied().unwrap_or_default()
    }

    /// Mean of `s[from..to]`: the score every member of a tied group spanning
    /// those positions receives.
    pub fn span_mean(&self, from: usize, to: usize) -> Rational {
        let sum: Rational = self.0[from..to].iter().copied().sum();
        sum / Rational::from_integer((to - from) as i128)
    }
}

fn int(b: bool) -> Rational {
    Rational::from_integer(b as i128)
}

/// Per-alternative totals in canonical index order.
pub fn positional_scores_normalized(
    profile: &NormalizedProfile,
    s: &ScoreVector,
) -> Result<Vec<Rational>, RuleError> {
    let m = profile.alternative_count();
    if s.len() != m {
        return Err(RuleError::ScoreLength {
            got: s.len(),
            expected: m,
        });
    }
    let mut totals = vec![Rational::zero(); m];
    for ballot in &profile.ballots {
        let weight = Rational::from_integer(ballot.weight as i128);
        let mut pos = 0;
        for group in &ballot.groups {
            let share = s.span_mean(pos, pos + group.len()) * weight;
            for &x in group {
                totals[x] += share;
            }
            pos += group.len();
        }
    }
    Ok(totals)
}

/// Weighted positional totals; tied groups share the mean of the positions they span.
pub fn positional_scores(
    profile: &PreferenceProfile,
    s: &ScoreVector,
) -> Result<BTreeMap<AltId, Rational>, RuleError> {
    let normalized = profile.normalize();
    let totals = positional_scores_normalized(&normalized, s)?;
    Ok(normalized.ids.into_iter().zip(totals).collect())
}
