//! Alternatives, weak orders, ballots and profiles.
//!
//! A [`WeakOrder`] is an ordered partition of alternative ids: group 0 is the
//! most preferred set, members of one group are tied. Ids that do not appear
//! in a ballot are unranked; [`complete_with_unranked`] moves them into a
//! tied bottom group, which is what every aggregation rule consumes.
//!
//! The line-based profile format:
//!
//! ```text
//! # comment
//! alternatives: apple,banana,cherry
//! label: apple = Green apple
//! 3: cherry > apple > banana
//! 2: apple = banana
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of an alternative: non-empty, no whitespace and none of `>`, `=`, `:`, `,`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AltId(String);

impl AltId {
    pub fn new(id: impl Into<String>) -> Result<Self, OrderError> {
        let id = id.into();
        if id.is_empty()
            || id
                .chars()
                .any(|c| c.is_whitespace() || matches!(c, '>' | '=' | ':' | ','))
        {
            return Err(OrderError::InvalidId(id));
        }
        Ok(AltId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for AltId {
    type Error = OrderError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        AltId::new(value)
    }
}

impl From<AltId> for String {
    fn from(value: AltId) -> Self {
        value.0
    }
}

impl fmt::Display for AltId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for AltId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alternative {
    pub id: AltId,
    pub label: String,
}

impl Alternative {
    pub fn new(id: AltId) -> Self {
        let label = id.to_string();
        Alternative { id, label }
    }
}

/// Violations of the weak-order and profile invariants.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum OrderError {
    #[error("invalid alternative id `{0}`")]
    InvalidId(String),
    #[error("empty group in weak order")]
    EmptyGroup,
    #[error("alternative `{0}` appears more than once")]
    Duplicate(AltId),
    #[error("alternative `{0}` is not part of the alternative set")]
    Unknown(AltId),
    #[error("ballot weight must be at least 1")]
    ZeroWeight,
}

/// An ordered partition of alternative ids; group 0 is the most preferred.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<AltId>>", into = "Vec<Vec<AltId>>")]
pub struct WeakOrder {
    groups: Vec<BTreeSet<AltId>>,
}

impl WeakOrder {
    pub fn new<G, I>(groups: G) -> Result<Self, OrderError>
    where
        G: IntoIterator<Item = I>,
        I: IntoIterator<Item = AltId>,
    {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for group in groups {
            let mut set = BTreeSet::new();
            for id in group {
                if !seen.insert(id.clone()) {
                    return Err(OrderError::Duplicate(id));
                }
                set.insert(id);
            }
            if set.is_empty() {
                return Err(OrderError::EmptyGroup);
            }
            out.push(set);
        }
        Ok(WeakOrder { groups: out })
    }

    /// Builds a weak order from string ids; convenient for fixtures.
    pub fn from_strs(groups: &[&[&str]]) -> Result<Self, OrderError> {
        let parsed = groups
            .iter()
            .map(|g| g.iter().map(|s| AltId::new(*s)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        WeakOrder::new(parsed)
    }

    /// Strict order with one alternative per group.
    pub fn linear(ids: impl IntoIterator<Item = AltId>) -> Result<Self, OrderError> {
        WeakOrder::new(ids.into_iter().map(|id| [id]))
    }

    pub fn groups(&self) -> &[BTreeSet<AltId>] {
        &self.groups
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.groups.iter().any(|g| g.contains(id))
    }

    pub fn ids(&self) -> impl Iterator<Item = &AltId> {
        self.groups.iter().flatten()
    }

    /// Index of the group holding `id`.
    pub fn rank_of(&self, id: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(id))
    }
}

impl TryFrom<Vec<Vec<AltId>>> for WeakOrder {
    type Error = OrderError;
    fn try_from(value: Vec<Vec<AltId>>) -> Result<Self, Self::Error> {
        WeakOrder::new(value)
    }
}

impl From<WeakOrder> for Vec<Vec<AltId>> {
    fn from(value: WeakOrder) -> Self {
        value
            .groups
            .into_iter()
            .map(|g| g.into_iter().collect())
            .collect()
    }
}

impl fmt::Display for WeakOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, group) in self.groups.iter().enumerate() {
            if i > 0 {
                f.write_str(" > ")?;
            }
            for (j, id) in group.iter().enumerate() {
                if j > 0 {
                    f.write_str(" = ")?;
                }
                f.write_str(id.as_str())?;
            }
        }
        Ok(())
    }
}

/// Appends every id of `universe` missing from `order` as one tied bottom group.
pub fn complete_with_unranked(
    order: &WeakOrder,
    universe: &BTreeSet<AltId>,
) -> Result<WeakOrder, OrderError> {
    if let Some(id) = order.ids().find(|id| !universe.contains(*id)) {
        return Err(OrderError::Unknown(id.clone()));
    }
    let missing: BTreeSet<AltId> = universe
        .iter()
        .filter(|id| !order.contains(id.as_str()))
        .cloned()
        .collect();
    let mut completed = order.clone();
    if !missing.is_empty() {
        completed.groups.push(missing);
    }
    Ok(completed)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ballot {
    pub voter: String,
    pub order: WeakOrder,
    /// Multiplicity; one ballot line `3: a > b` is a single ballot of weight 3.
    pub weight: u64,
    /// Milliseconds since the Unix epoch.
    pub submitted_at: u64,
}

impl Ballot {
    pub fn new(voter: impl Into<String>, order: WeakOrder, weight: u64) -> Self {
        Ballot {
            voter: voter.into(),
            order,
            weight,
            submitted_at: 0,
        }
    }
}

/// Alternatives plus weighted ballots over them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceProfile {
    alternatives: Vec<Alternative>,
    ballots: Vec<Ballot>,
}

impl PreferenceProfile {
    pub fn new(alternatives: Vec<Alternative>, ballots: Vec<Ballot>) -> Result<Self, OrderError> {
        let mut ids = BTreeSet::new();
        for alt in &alternatives {
            if !ids.insert(alt.id.clone()) {
                return Err(OrderError::Duplicate(alt.id.clone()));
            }
        }
        for ballot in &ballots {
            if ballot.weight == 0 {
                return Err(OrderError::ZeroWeight);
            }
            if let Some(id) = ballot.order.ids().find(|id| !ids.contains(*id)) {
                return Err(OrderError::Unknown(id.clone()));
            }
        }
        Ok(PreferenceProfile {
            alternatives,
            ballots,
        })
    }

    /// Profile over plain ids with `(weight, order)` ballots; labels default to ids.
    pub fn from_orders(
        ids: &[&str],
        ballots: impl IntoIterator<Item = (u64, WeakOrder)>,
    ) -> Result<Self, OrderError> {
        let alternatives = ids
            .iter()
            .map(|s| AltId::new(*s).map(Alternative::new))
            .collect::<Result<Vec<_>, _>>()?;
        let ballots = ballots
            .into_iter()
            .enumerate()
            .map(|(i, (w, o))| Ballot::new(format!("b{}", i + 1), o, w))
            .collect();
        PreferenceProfile::new(alternatives, ballots)
    }

    pub fn alternatives(&self) -> &[Alternative] {
        &self.alternatives
    }

    pub fn ballots(&self) -> &[Ballot] {
        &self.ballots
    }

    pub fn ids(&self) -> Vec<AltId> {
        self.alternatives.iter().map(|a| a.id.clone()).collect()
    }

    pub fn universe(&self) -> BTreeSet<AltId> {
        self.alternatives.iter().map(|a| a.id.clone()).collect()
    }

    /// Total voter count: the sum of ballot weights.
    pub fn voter_count(&self) -> u64 {
        self.ballots.iter().map(|b| b.weight).sum()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.alternatives.iter().position(|a| a.id.as_str() == id)
    }

    /// Completes every ballot with its unranked alternatives and switches to
    /// index form (indices follow the canonical alternative order).
    pub fn normalize(&self) -> NormalizedProfile {
        let index: HashMap<&str, usize> = self
            .alternatives
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id.as_str(), i))
            .collect();
        let m = self.alternatives.len();
        let ballots = self
            .ballots
            .iter()
            .map(|b| {
                let mut seen = vec![false; m];
                let mut groups: Vec<Vec<usize>> = b
                    .order
                    .groups()
                    .iter()
                    .map(|g| {
                        let mut idx: Vec<usize> = g.iter().map(|id| index[id.as_str()]).collect();
                        idx.sort_unstable();
                        for &i in &idx {
                            seen[i] = true;
                        }
                        idx
                    })
                    .collect();
                let rest: Vec<usize> = (0..m).filter(|&i| !seen[i]).collect();
                if !rest.is_empty() {
                    groups.push(rest);
                }
                WeightedOrder {
                    weight: b.weight,
                    groups,
                }
            })
            .collect();
        NormalizedProfile {
            ids: self.ids(),
            ballots,
        }
    }
}

/// A completed weak order over alternative indices with its multiplicity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WeightedOrder {
    pub weight: u64,
    pub groups: Vec<Vec<usize>>,
}

impl WeightedOrder {
    /// Position of every alternative: `pos[x]` is the index of x's group.
    pub fn group_index(&self, m: usize) -> Vec<usize> {
        let mut pos = vec![usize::MAX; m];
        for (g, group) in self.groups.iter().enumerate() {
            for &x in group {
                pos[x] = g;
            }
        }
        pos
    }
}

/// Index-based profile in which every ballot ranks every alternative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizedProfile {
    pub ids: Vec<AltId>,
    pub ballots: Vec<WeightedOrder>,
}

impl NormalizedProfile {
    pub fn alternative_count(&self) -> usize {
        self.ids.len()
    }

    pub fn voter_count(&self) -> u64 {
        self.ballots.iter().map(|b| b.weight).sum()
    }
}

/// `N[x][y]`: total weight of ballots strictly preferring x to y. Ties count for neither side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairwiseMatrix {
    pub ids: Vec<AltId>,
    counts: Vec<Vec<u64>>,
}

impl PairwiseMatrix {
    pub fn from_normalized(profile: &NormalizedProfile) -> Self {
        let m = profile.alternative_count();
        let mut counts = vec![vec![0u64; m]; m];
        for ballot in &profile.ballots {
            for (g, upper) in ballot.groups.iter().enumerate() {
                for lower in &ballot.groups[g + 1..] {
                    for &x in upper {
                        for &y in lower {
                            counts[x][y] += ballot.weight;
                        }
                    }
                }
            }
        }
        PairwiseMatrix {
            ids: profile.ids.clone(),
            counts,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, x: usize, y: usize) -> u64 {
        self.counts[x][y]
    }

    /// Looks up by id; `None` when either id is unknown.
    pub fn by_id(&self, x: &str, y: &str) -> Option<u64> {
        let xi = self.ids.iter().position(|a| a.as_str() == x)?;
        let yi = self.ids.iter().position(|a| a.as_str() == y)?;
        Some(self.counts[xi][yi])
    }

    /// `N[x][y] - N[y][x]`.
    pub fn margin(&self, x: usize, y: usize) -> i64 {
        self.counts[x][y] as i64 - self.counts[y][x] as i64
    }
}

/// Pairwise strict-preference counts over the completed ballots.
pub fn pairwise_margins(profile: &PreferenceProfile) -> PairwiseMatrix {
    PairwiseMatrix::from_normalized(&profile.normalize())
}

/// Failures while reading the profile text format.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: unknown alternative `{id}`")]
    UnknownAlternative { line: usize, id: String },
    #[error("line {line}: duplicate alternative `{id}`")]
    DuplicateAlternative { line: usize, id: String },
    #[error("line {line}: alternative `{id}` appears twice in one ballot")]
    DuplicateInBallot { line: usize, id: String },
    #[error("line {line}: ballot count must be a positive integer")]
    NonPositiveCount { line: usize },
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ProfileError {
    ProfileError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

/// 1-based column of `part` inside `line`; both must come from the same buffer.
fn column_of(line: &str, part: &str) -> usize {
    (part.as_ptr() as usize).saturating_sub(line.as_ptr() as usize) + 1
}

/// Parses a profile document.
pub fn parse_profile(text: &str) -> Result<PreferenceProfile, ProfileError> {
    let mut alternatives: Option<Vec<Alternative>> = None;
    let mut ballots = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some(colon) = line.find(':') else {
            return Err(syntax(lineno, 1, "expected `key: value`"));
        };
        let key = line[..colon].trim();
        let value = &line[colon + 1..];

        let Some(alts) = alternatives.as_mut() else {
            if key != "alternatives" {
                return Err(syntax(
                    lineno,
                    column_of(line, line.trim_start()),
                    "the first line must be `alternatives: ...`",
                ));
            }
            let mut list: Vec<Alternative> = Vec::new();
            for part in value.split(',') {
                let id = part.trim();
                let id = AltId::new(id).map_err(|_| {
                    syntax(lineno, column_of(line, part), format!("invalid alternative id `{id}`"))
                })?;
                if list.iter().any(|a| a.id == id) {
                    return Err(ProfileError::DuplicateAlternative {
                        line: lineno,
                        id: id.to_string(),
                    });
                }
                list.push(Alternative::new(id));
            }
            alternatives = Some(list);
            continue;
        };

        match key {
            "alternatives" => {
                return Err(syntax(lineno, 1, "`alternatives` declared twice"));
            }
            "label" => {
                let Some(eq) = value.find('=') else {
                    return Err(syntax(lineno, column_of(line, value), "expected `label: id = text`"));
                };
                let id = value[..eq].trim();
                let text = value[eq + 1..].trim();
                let Some(alt) = alts.iter_mut().find(|a| a.id.as_str() == id) else {
                    return Err(ProfileError::UnknownAlternative {
                        line: lineno,
                        id: id.to_string(),
                    });
                };
                alt.label = text.to_string();
            }
            count => {
                let weight: i64 = count.parse().map_err(|_| {
                    syntax(
                        lineno,
                        column_of(line, line.trim_start()),
                        format!("expected a ballot count, found `{count}`"),
                    )
                })?;
                if weight <= 0 {
                    return Err(ProfileError::NonPositiveCount { line: lineno });
                }
                let order = parse_order(line, value, lineno, alts)?;
                ballots.push(Ballot::new(
                    format!("b{}", ballots.len() + 1),
                    order,
                    weight as u64,
                ));
            }
        }
    }

    let alternatives = alternatives.ok_or_else(|| syntax(1, 1, "missing `alternatives:` line"))?;
    Ok(PreferenceProfile {
        alternatives,
        ballots,
    })
}

fn parse_order(
    line: &str,
    body: &str,
    lineno: usize,
    alts: &[Alternative],
) -> Result<WeakOrder, ProfileError> {
    if body.trim().is_empty() {
        return Ok(WeakOrder::default());
    }
    let mut seen = BTreeSet::new();
    let mut groups = Vec::new();
    for group in body.split('>') {
        let mut members = Vec::new();
        for member in group.split('=') {
            let id = member.trim();
            if id.is_empty() {
                return Err(syntax(lineno, column_of(line, member), "empty alternative id"));
            }
            if !alts.iter().any(|a| a.id.as_str() == id) {
                return Err(ProfileError::UnknownAlternative {
                    line: lineno,
                    id: id.to_string(),
                });
            }
            if !seen.insert(id.to_string()) {
                return Err(ProfileError::DuplicateInBallot {
                    line: lineno,
                    id: id.to_string(),
                });
            }
            members.push(AltId(id.to_string()));
        }
        groups.push(members);
    }
    // Members are known, non-empty and distinct at this point.
    Ok(WeakOrder {
        groups: groups.into_iter().map(|g| g.into_iter().collect()).collect(),
    })
}

/// Writes a profile in the text format: alternatives, labels that differ from
/// their id, then one line per distinct weak order (counts merged) in order of
/// first occurrence.
pub fn serialize_profile(profile: &PreferenceProfile) -> String {
    let mut out = String::from("alternatives: ");
    let ids: Vec<&str> = profile.alternatives.iter().map(|a| a.id.as_str()).collect();
    out.push_str(&ids.join(","));
    out.push('\n');
    for alt in &profile.alternatives {
        if alt.label != alt.id.as_str() {
            out.push_str(&format!("label: {} = {}\n", alt.id, alt.label.trim()));
        }
    }

    let position: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut merged: Vec<(String, u64)> = Vec::new();
    let mut slot: BTreeMap<String, usize> = BTreeMap::new();
    for ballot in &profile.ballots {
        let rendered = ballot
            .order
            .groups()
            .iter()
            .map(|g| {
                let mut members: Vec<&str> = g.iter().map(|id| id.as_str()).collect();
                members.sort_by_key(|id| position[id]);
                members.join(" = ")
            })
            .collect::<Vec<_>>()
            .join(" > ");
        match slot.get(&rendered) {
            Some(&i) => merged[i].1 += ballot.weight,
            None => {
                slot.insert(rendered.clone(), merged.len());
                merged.push((rendered, ballot.weight));
            }
        }
    }
    for (order, count) in merged {
        if order.is_empty() {
            out.push_str(&format!("{count}:\n"));
        } else {
            out.push_str(&format!("{count}: {order}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(s: &[&str]) -> BTreeSet<AltId> {
        s.iter().map(|x| AltId::new(*x).unwrap()).collect()
    }

    #[test]
    fn parses_counted_ballot_with_tie() {
        let p = parse_profile("alternatives: a,b,c\n3: a > b = c\n").unwrap();
        assert_eq!(p.voter_count(), 3);
        assert_eq!(p.ballots().len(), 1);
        assert_eq!(
            p.ballots()[0].order,
            WeakOrder::from_strs(&[&["a"], &["b", "c"]]).unwrap()
        );
    }

    #[test]
    fn omitted_ids_stay_unranked() {
        let p = parse_profile("alternatives: a,b,c\n1: a\n").unwrap();
        assert_eq!(p.ballots()[0].order, WeakOrder::from_strs(&[&["a"]]).unwrap());
    }

    #[test]
    fn duplicate_in_ballot_rejected() {
        let err = parse_profile("alternatives: a,b,c\n2: a > a\n").unwrap_err();
        assert_eq!(
            err,
            ProfileError::DuplicateInBallot {
                line: 2,
                id: "a".into()
            }
        );
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_profile("alternatives: a,b\n1: a > z\n"),
            Err(ProfileError::UnknownAlternative { line: 2, .. })
        ));
        assert!(matches!(
            parse_profile("alternatives: a,b,a\n"),
            Err(ProfileError::DuplicateAlternative { line: 1, .. })
        ));
        assert!(matches!(
            parse_profile("alternatives: a,b\n0: a > b\n"),
            Err(ProfileError::NonPositiveCount { line: 2 })
        ));
        assert!(matches!(
            parse_profile("alternatives: a,b\n-2: a > b\n"),
            Err(ProfileError::NonPositiveCount { line: 2 })
        ));
        assert!(matches!(
            parse_profile("1: a > b\n"),
            Err(ProfileError::Syntax { line: 1, .. })
        ));
        let err = parse_profile("alternatives: a,b\n\n1: a >  > b\n").unwrap_err();
        assert_eq!(
            err,
            ProfileError::Syntax {
                line: 3,
                column: 7,
                message: "empty alternative id".into()
            }
        );
        assert!(matches!(
            parse_profile("alternatives: a,b\nx: a\n"),
            Err(ProfileError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn comments_labels_and_blank_lines() {
        let text = "# fruit poll\n\nalternatives: apple,pear\nlabel: apple = Green Apple\n# ballots\n2: pear > apple\n";
        let p = parse_profile(text).unwrap();
        assert_eq!(p.alternatives()[0].label, "Green Apple");
        assert_eq!(p.alternatives()[1].label, "pear");
        assert_eq!(p.voter_count(), 2);
    }

    #[test]
    fn completion_examples() {
        let universe = ids(&["a", "b", "c"]);
        let a = WeakOrder::from_strs(&[&["a"]]).unwrap();
        assert_eq!(
            complete_with_unranked(&a, &universe).unwrap(),
            WeakOrder::from_strs(&[&["a"], &["b", "c"]]).unwrap()
        );
        let full = WeakOrder::from_strs(&[&["a"], &["b"], &["c"]]).unwrap();
        assert_eq!(complete_with_unranked(&full, &universe).unwrap(), full);
        let bc = WeakOrder::from_strs(&[&["b", "c"]]).unwrap();
        assert_eq!(
            complete_with_unranked(&bc, &universe).unwrap(),
            WeakOrder::from_strs(&[&["b", "c"], &["a"]]).unwrap()
        );
        let stray = WeakOrder::from_strs(&[&["z"]]).unwrap();
        assert!(matches!(
            complete_with_unranked(&stray, &universe),
            Err(OrderError::Unknown(_))
        ));
        let empty = WeakOrder::default();
        assert_eq!(
            complete_with_unranked(&empty, &universe).unwrap(),
            WeakOrder::from_strs(&[&["a", "b", "c"]]).unwrap()
        );
    }

    #[test]
    fn margins_examples() {
        let p = parse_profile("alternatives: a,b\n1: a > b\n").unwrap();
        let n = pairwise_margins(&p);
        assert_eq!((n.by_id("a", "b"), n.by_id("b", "a")), (Some(1), Some(0)));

        let p = parse_profile("alternatives: a,b\n1: a = b\n").unwrap();
        let n = pairwise_margins(&p);
        assert_eq!((n.by_id("a", "b"), n.by_id("b", "a")), (Some(0), Some(0)));
        assert_eq!(n.by_id("a", "a"), Some(0));
    }

    #[test]
    fn weak_order_rejects_bad_groups() {
        assert_eq!(
            WeakOrder::from_strs(&[&["a"], &[]]),
            Err(OrderError::EmptyGroup)
        );
        assert!(matches!(
            WeakOrder::from_strs(&[&["a"], &["b", "a"]]),
            Err(OrderError::Duplicate(_))
        ));
        assert!(AltId::new("a b").is_err());
        assert!(AltId::new("a>b").is_err());
        assert!(AltId::new("").is_err());
    }

    #[test]
    fn serializer_merges_identical_orders() {
        let text = "alternatives: a,b,c\n1: a > b\n2: c > a = b\n1: a > b\n";
        let p = parse_profile(text).unwrap();
        assert_eq!(
            serialize_profile(&p),
            "alternatives: a,b,c\n2: a > b\n2: c > a = b\n"
        );
    }

    #[test]
    fn weak_order_json_shape() {
        let o = WeakOrder::from_strs(&[&["a"], &["b", "c"]]).unwrap();
        let json = serde_json::to_string(&o).unwrap();
        assert_eq!(json, r#"[["a"],["b","c"]]"#);
        let back: WeakOrder = serde_json::from_str(&json).unwrap();
        assert_eq!(back, o);
        assert!(serde_json::from_str::<WeakOrder>(r#"[["a"],["a"]]"#).is_err());
    }
}
