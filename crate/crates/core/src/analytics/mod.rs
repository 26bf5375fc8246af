//! Robustness and structure analytics over profiles.

pub mod mov;
pub mod plackett_luce;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::preference::{AltId, NormalizedProfile};

pub use mov::{margin_of_victory, margin_of_victory_with, MovConfig, MovError, MovMethod, MovReport};
pub use plackett_luce::{
    cluster_summary, fit_pl_mixture, fit_plackett_luce, linearize, sample_ranking, ClusterSummary,
    MixtureConfig, PlConfig, PlError, PlFit, PlMixture, RankingData,
};

/// Component strengths keyed by alternative id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlParameters {
    pub gamma: BTreeMap<AltId, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub component: usize,
    pub size: f64,
    pub weight: f64,
    pub top: Vec<AltId>,
}

/// Mixture result in id terms, as shown to users.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureReport {
    /// Always `em_mm`: expectation-maximization with minorize-maximize updates.
    pub estimator: String,
    pub k: usize,
    pub seed: u64,
    /// Seed used to break ties inside weak orders before fitting.
    pub linearization_seed: u64,
    pub weights: Vec<f64>,
    pub components: Vec<PlParameters>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub clusters: Vec<ClusterReport>,
}

/// Linearizes the profile with `seed`, fits a `k`-component mixture with the
/// same seed, and labels everything by id.
pub fn mixture_report(
    profile: &NormalizedProfile,
    k: usize,
    seed: u64,
) -> Result<MixtureReport, PlError> {
    let data = linearize(profile, seed);
    let mixture = fit_pl_mixture(&data, &MixtureConfig::new(k, seed))?;
    let ids = &profile.ids;
    let clusters = cluster_summary(&mixture, &data.weights)
        .into_iter()
        .map(|c| ClusterReport {
            component: c.component,
            size: c.size,
            weight: c.weight,
            top: c.top.iter().map(|&i| ids[i].clone()).collect(),
        })
        .collect();
    Ok(MixtureReport {
        estimator: "em_mm".to_string(),
        k,
        seed,
        linearization_seed: seed,
        weights: mixture.weights.clone(),
        components: mixture
            .components
            .iter()
            .map(|g| PlParameters {
                gamma: ids.iter().cloned().zip(g.iter().copied()).collect(),
            })
            .collect(),
        loglik: mixture.loglik,
        iterations: mixture.iterations,
        converged: mixture.converged,
        clusters,
    })
}
