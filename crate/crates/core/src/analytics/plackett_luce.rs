//! Plackett-Luce estimation: minorize-maximize for one component and an EM
//! mixture with MM inner updates.
//!
//! All sums over rankings run in data order so results are bitwise
//! reproducible for a fixed seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preference::NormalizedProfile;

/// Strengths are clamped to this before renormalizing so they stay positive
/// when an alternative never wins under a component.
const GAMMA_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum PlError {
    #[error("no rankings to fit")]
    Empty,
    #[error("ranking {index} is not a strict order over all {m} alternatives")]
    NotAFullOrder { index: usize, m: usize },
    #[error("comparison graph is not strongly connected; degenerate alternatives: {ids:?}")]
    Disconnected { ids: Vec<usize> },
    #[error("{k} components requested for {n} ballots")]
    TooManyComponents { k: usize, n: f64 },
    #[error("component count must be at least 1")]
    ZeroComponents,
}

/// Strict full rankings of `0..m` with a positive multiplicity each.
#[derive(Clone, Debug, PartialEq)]
pub struct RankingData {
    pub m: usize,
    pub rankings: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
}

impl RankingData {
    pub fn new(m: usize, rankings: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self, PlError> {
        assert_eq!(rankings.len(), weights.len(), "one weight per ranking");
        for (index, r) in rankings.iter().enumerate() {
            let mut seen = vec![false; m];
            if r.len() != m || r.iter().any(|&x| x >= m || std::mem::replace(&mut seen[x], true)) {
                return Err(PlError::NotAFullOrder { index, m });
            }
        }
        Ok(RankingData { m, rankings, weights })
    }

    pub fn unweighted(m: usize, rankings: Vec<Vec<usize>>) -> Result<Self, PlError> {
        let weights = vec![1.0; rankings.len()];
        RankingData::new(m, rankings, weights)
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }
}

/// Breaks every tied group of every ballot into a uniformly random order,
/// once per ballot, from `seed`.
pub fn linearize(profile: &NormalizedProfile, seed: u64) -> RankingData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rankings = Vec::with_capacity(profile.ballots.len());
    let mut weights = Vec::with_capacity(profile.ballots.len());
    for ballot in &profile.ballots {
        let mut order = Vec::with_capacity(profile.alternative_count());
        for group in &ballot.groups {
            let mut g = group.clone();
            g.shuffle(&mut rng);
            order.extend(g);
        }
        rankings.push(order);
        weights.push(ballot.weight as f64);
    }
    RankingData {
        m: profile.alternative_count(),
        rankings,
        weights,
    }
}

/// Draws one ranking: repeatedly pick a remaining item with probability proportional to its strength.
pub fn sample_ranking<R: Rng + ?Sized>(gamma: &[f64], rng: &mut R) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..gamma.len()).collect();
    let mut out = Vec::with_capacity(gamma.len());
    while !remaining.is_empty() {
        let total: f64 = remaining.iter().map(|&i| gamma[i]).sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = remaining.len() - 1;
        for (slot, &i) in remaining.iter().enumerate() {
            if u < gamma[i] {
                pick = slot;
                break;
            }
            u -= gamma[i];
        }
        out.push(remaining.remove(pick));
    }
    out
}

/// Log-probability of one full ranking.
pub fn ranking_log_likelihood(gamma: &[f64], ranking: &[usize]) -> f64 {
    let mut suffix: f64 = ranking.iter().map(|&i| gamma[i]).sum();
    let mut ll = 0.0;
    for &item in &ranking[..ranking.len().saturating_sub(1)] {
        ll += gamma[item].ln() - suffix.ln();
        suffix -= gamma[item];
    }
    ll
}

/// Weighted log-likelihood of the data under one component.
pub fn log_likelihood(gamma: &[f64], data: &RankingData) -> f64 {
    data.rankings
        .iter()
        .zip(&data.weights)
        .map(|(r, &w)| w * ranking_log_likelihood(gamma, r))
        .sum()
}

/// One minorize-maximize update with per-ranking weights `omega`.
/// Returns the new normalized strengths.
fn mm_step(gamma: &[f64], data: &RankingData, omega: &[f64]) -> Vec<f64> {
    let m = data.m;
    let mut wins = vec![0.0; m];
    let mut denom = vec![0.0; m];
    let mut suffix = vec![0.0; m];
    for (ranking, &w) in data.rankings.iter().zip(omega) {
        if w == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for t in (0..m).rev() {
            acc += gamma[ranking[t]];
            suffix[t] = acc;
        }
        // Running sum of 1/suffix over choice stages up to each position.
        let mut running = 0.0;
        for t in 0..m {
            if t + 1 < m {
                running += 1.0 / suffix[t];
                wins[ranking[t]] += w;
            }
            denom[ranking[t]] += w * running;
        }
    }
    let mut next: Vec<f64> = (0..m)
        .map(|i| if denom[i] > 0.0 { wins[i] / denom[i] } else { gamma[i] })
        .collect();
    normalize(&mut next);
    if next.iter().any(|&g| g < GAMMA_FLOOR) {
        for g in &mut next {
            *g = g.max(GAMMA_FLOOR);
        }
        normalize(&mut next);
    }
    next
}

fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= total;
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Convergence tolerance (max absolute strength change) and iteration cap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlConfig {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PlConfig {
    fn default() -> Self {
        PlConfig {
            tol: 1e-8,
            max_iters: 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlFit {
    pub gamma: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Alternatives that make the maximum-likelihood estimate degenerate, or an
/// empty list when the "ranked above" graph is strongly connected.
pub fn degenerate_alternatives(data: &RankingData) -> Vec<usize> {
    let m = data.m;
    let mut beats = vec![vec![false; m]; m];
    for (r, &w) in data.rankings.iter().zip(&data.weights) {
        if w <= 0.0 {
            continue;
        }
        for (t, &x) in r.iter().enumerate() {
            for &y in &r[t + 1..] {
                beats[x][y] = true;
            }
        }
    }
    // Transitive closure.
    let mut reach = beats.clone();
    for k in 0..m {
        for i in 0..m {
            if reach[i][k] {
                for j in 0..m {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    if (0..m).all(|i| (0..m).all(|j| i == j || reach[i][j])) {
        return Vec::new();
    }
    let never_wins = (0..m).filter(|&i| !beats[i].iter().any(|&b| b));
    let never_loses = (0..m).filter(|&i| !(0..m).any(|j| beats[j][i]));
    let mut ids: Vec<usize> = never_wins.chain(never_loses).collect();
    if ids.is_empty() {
        // Members of a top component: nobody outside it reaches them.
        ids = (0..m)
            .filter(|&i| (0..m).all(|j| j == i || !reach[j][i] || reach[i][j]))
            .collect();
    }
    ids.sort_unstable();
    ids.dedup();
    ids
}

fn mm_fit(data: &RankingData, omega: &[f64], start: Vec<f64>, config: &PlConfig) -> PlFit {
    let mut gamma = start;
    for iteration in 1..=config.max_iters {
        let next = mm_step(&gamma, data, omega);
        let delta = max_abs_diff(&next, &gamma);
        gamma = next;
        if delta < config.tol {
            return PlFit {
                gamma,
                iterations: iteration,
                converged: true,
            };
        }
    }
    PlFit {
        gamma,
        iterations: config.max_iters,
        converged: false,
    }
}

/// Maximum-likelihood strengths for a single Plackett-Luce component.
pub fn fit_plackett_luce(data: &RankingData, config: &PlConfig) -> Result<PlFit, PlError> {
    if data.is_empty() || data.m == 0 {
        return Err(PlError::Empty);
    }
    let degenerate = degenerate_alternatives(data);
    if !degenerate.is_empty() {
        return Err(PlError::Disconnected { ids: degenerate });
    }
    Ok(mm_fit(data, &data.weights, vec![1.0 / data.m as f64; data.m], config))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureConfig {
    pub k: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iters: usize,
    pub restarts: usize,
    /// MM updates per M-step.
    pub inner_iters: usize,
}

impl MixtureConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        MixtureConfig {
            k,
            seed,
            tol: 1e-8,
            max_iters: 500,
            restarts: 5,
            inner_iters: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlMixture {
    pub k: usize,
    pub weights: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    /// Per ranking, one probability per component.
    pub responsibilities: Vec<Vec<f64>>,
    pub loglik: f64,
    /// Log-likelihood after every E-step of the winning restart.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Responsibilities and total log-likelihood for the current parameters.
fn e_step(data: &RankingData, weights: &[f64], components: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let log_weights: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    let mut resp = Vec::with_capacity(data.rankings.len());
    let mut loglik = 0.0;
    for (r, &w) in data.rankings.iter().zip(&data.weights) {
        let logs: Vec<f64> = components
            .iter()
            .zip(&log_weights)
            .map(|(g, lw)| lw + ranking_log_likelihood(g, r))
            .collect();
        let total = log_sum_exp(&logs);
        loglik += w * total;
        resp.push(logs.iter().map(|l| (l - total).exp()).collect());
    }
    (resp, loglik)
}

fn run_em(data: &RankingData, config: &MixtureConfig, rng: &mut ChaCha8Rng) -> PlMixture {
    let k = config.k;
    // Normalized unit-rate exponentials: a draw from the flat Dirichlet.
    let mut components: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let mut g: Vec<f64> = (0..data.m)
                .map(|_| {
                    let x: f64 = Exp1.sample(rng);
                    x.max(GAMMA_FLOOR)
                })
                .collect();
            normalize(&mut g);
            g
        })
        .collect();
    let mut weights = vec![1.0 / k as f64; k];
    let total = data.total_weight();

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let inner = PlConfig {
        tol: config.tol,
        max_iters: config.inner_iters.max(1),
    };
    let (mut resp, mut loglik) = e_step(data, &weights, &components);
    trace.push(loglik);
    while iterations < config.max_iters {
        iterations += 1;
        let mut next_weights = vec![0.0; k];
        for (row, &w) in resp.iter().zip(&data.weights) {
            for z in 0..k {
                next_weights[z] += w * row[z];
            }
        }
        for x in &mut next_weights {
            *x = (*x / total).max(f64::MIN_POSITIVE);
        }
        normalize(&mut next_weights);
        let mut delta = max_abs_diff(&next_weights, &weights);
        let mut next_components = Vec::with_capacity(k);
        for (z, gamma) in components.iter().enumerate() {
            let omega: Vec<f64> = resp.iter().zip(&data.weights).map(|(row, &w)| w * row[z]).collect();
            let fit = mm_fit(data, &omega, gamma.clone(), &inner);
            delta = delta.max(max_abs_diff(&fit.gamma, gamma));
            next_components.push(fit.gamma);
        }
        weights = next_weights;
        components = next_components;
        (resp, loglik) = e_step(data, &weights, &components);
        trace.push(loglik);
        if delta < config.tol {
            converged = true;
            break;
        }
    }
    PlMixture {
        k,
        weights,
        components,
        responsibilities: resp,
        loglik,
        loglik_trace: trace,
        iterations,
        converged,
    }
}

/// EM over a `k`-component mixture, best of `restarts` seeded starts.
pub fn fit_pl_mixture(data: &RankingData, config: &MixtureConfig) -> Result<PlMixture, PlError> {
    if data.is_empty() || data.m == 0 {
        return Err(PlError::Empty);
    }
    if config.k == 0 {
        return Err(PlError::ZeroComponents);
    }
    let n = data.total_weight();
    if config.k as f64 > n {
        return Err(PlError::TooManyComponents { k: config.k, n });
    }
    if config.k == 1 {
        return Ok(single_component(data, config));
    }
    if data.m == 1 {
        let k = config.k;
        let share = 1.0 / k as f64;
        return Ok(PlMixture {
            k,
            weights: vec![share; k],
            components: vec![vec![1.0]; k],
            responsibilities: vec![vec![share; k]; data.rankings.len()],
            loglik: 0.0,
            loglik_trace: vec![0.0],
            iterations: 0,
            converged: true,
        });
    }
    let mut best: Option<PlMixture> = None;
    for restart in 0..config.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(restart as u64);
        let candidate = run_em(data, config, &mut rng);
        if best.as_ref().is_none_or(|b| candidate.loglik > b.loglik) {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn single_component(data: &RankingData, config: &MixtureConfig) -> PlMixture {
    let fit = mm_fit(
        data,
        &data.weights,
        vec![1.0 / data.m as f64; data.m],
        &PlConfig {
            tol: config.tol,
            max_iters: config.max_iters,
        },
    );
    let loglik = log_likelihood(&fit.gamma, data);
    PlMixture {
        k: 1,
        weights: vec![1.0],
        components: vec![fit.gamma],
        responsibilities: vec![vec![1.0]; data.rankings.len()],
        loglik,
        loglik_trace: vec![loglik],
        iterations: fit.iterations,
        converged: fit.converged,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub component: usize,
    /// Total weight of rankings whose largest responsibility is this component.
    pub size: f64,
    pub weight: f64,
    /// Up to three alternatives with the largest strengths, strongest first.
    pub top: Vec<usize>,
}

/// Hard-assigns each ranking to its most responsible component (lowest index on ties).
pub fn cluster_summary(mixture: &PlMixture, data_weights: &[f64]) -> Vec<ClusterSummary> {
    let mut sizes = vec![0.0; mixture.k];
    for (row, &w) in mixture.responsibilities.iter().zip(data_weights) {
        let mut best = 0;
        for z in 1..row.len() {
            if row[z] > row[best] {
                best = z;
            }
        }
        sizes[best] += w;
    }
    (0..mixture.k)
        .map(|z| {
            let gamma = &mixture.components[z];
            let mut order: Vec<usize> = (0..gamma.len()).collect();
            order.sort_by(|&a, &b| gamma[b].total_cmp(&gamma[a]).then(a.cmp(&b)));
            order.truncate(3);
            ClusterSummary {
                component: z,
                size: sizes[z],
                weight: mixture.weights[z],
                top: order,
            }
        })
        .collect()
}
