//! Serial dictatorship over several item types.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A ranking over one type's items that applies when the agent's own earlier
/// picks match `when` (empty = unconditional).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalRanking {
    #[serde(default)]
    pub when: BTreeMap<String, String>,
    pub ranking: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentPreferences {
    pub agent: String,
    /// Per type, candidate rankings tried in order; the first whose condition holds is used.
    pub rankings: BTreeMap<String, Vec<ConditionalRanking>>,
}

/// Agents are listed in priority order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationInstance {
    pub types: Vec<String>,
    pub items: BTreeMap<String, Vec<String>>,
    pub agents: Vec<AgentPreferences>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bundle {
    pub agent: String,
    /// Type id to the item taken.
    pub items: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum AllocationError {
    #[error("type `{0}` is listed twice or has no item list")]
    BadType(String),
    #[error("type `{ty}` has {items} distinct items for {agents} agents")]
    ItemCount { ty: String, items: usize, agents: usize },
    #[error("agent `{0}` is listed twice")]
    DuplicateAgent(String),
    #[error("agent `{agent}` does not rank every item of `{ty}` exactly once")]
    IncompleteRanking { agent: String, ty: String },
    #[error("agent `{agent}` conditions `{ty}` on `{on}`, which is not an earlier type")]
    BadCondition { agent: String, ty: String, on: String },
    #[error("agent `{agent}` has no ranking of `{ty}` matching their earlier picks")]
    NoApplicableRanking { agent: String, ty: String },
}

impl AllocationInstance {
    pub fn validate(&self) -> Result<(), AllocationError> {
        let n = self.agents.len();
        let mut types = BTreeSet::new();
        for ty in &self.types {
            let items = self.items.get(ty);
            if !types.insert(ty) || items.is_none() {
                return Err(AllocationError::BadType(ty.clone()));
            }
            let distinct: BTreeSet<&String> = items.into_iter().flatten().collect();
            let listed = items.map_or(0, Vec::len);
            if distinct.len() != n || listed != n {
                return Err(AllocationError::ItemCount {
                    ty: ty.clone(),
                    items: distinct.len(),
                    agents: n,
                });
            }
        }
        let mut agents = BTreeSet::new();
        for prefs in &self.agents {
            if !agents.insert(&prefs.agent) {
                return Err(AllocationError::DuplicateAgent(prefs.agent.clone()));
            }
            for (t, ty) in self.types.iter().enumerate() {
                let expected: BTreeSet<&String> = self.items[ty].iter().collect();
                let rows = prefs.rankings.get(ty).map(Vec::as_slice).unwrap_or(&[]);
                if rows.is_empty() {
                    return Err(AllocationError::IncompleteRanking {
                        agent: prefs.agent.clone(),
                        ty: ty.clone(),
                    });
                }
                for row in rows {
                    let ranked: BTreeSet<&String> = row.ranking.iter().collect();
                    if ranked != expected || row.ranking.len() != expected.len() {
                        return Err(AllocationError::IncompleteRanking {
                            agent: prefs.agent.clone(),
                            ty: ty.clone(),
                        });
                    }
                    for on in row.when.keys() {
                        if !self.types[..t].contains(on) {
                            return Err(AllocationError::BadCondition {
                                agent: prefs.agent.clone(),
                                ty: ty.clone(),
                                on: on.clone(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Agents in priority order take, type by type, their best remaining item
/// given their own earlier picks.
pub fn serial_dictatorship(instance: &AllocationInstance) -> Result<Vec<Bundle>, AllocationError> {
    instance.validate()?;
    let mut taken: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut bundles = Vec::with_capacity(instance.agents.len());
    for prefs in &instance.agents {
        let mut picks: BTreeMap<String, String> = BTreeMap::new();
        for ty in &instance.types {
            let row = prefs.rankings[ty]
                .iter()
                .find(|r| r.when.iter().all(|(k, v)| picks.get(k) == Some(v)))
                .ok_or_else(|| AllocationError::NoApplicableRanking {
                    agent: prefs.agent.clone(),
                    ty: ty.clone(),
                })?;
            let used = taken.entry(ty.as_str()).or_default();
            let item = row
                .ranking
                .iter()
                .find(|item| !used.contains(item.as_str()))
                .expect("n agents and n items: an item is always left");
            used.insert(item.as_str());
            picks.insert(ty.clone(), item.clone());
        }
        bundles.push(Bundle {
            agent: prefs.agent.clone(),
            items: picks,
        });
    }
    Ok(bundles)
}
