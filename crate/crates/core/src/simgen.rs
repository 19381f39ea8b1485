//! Synthetic attributed-network generator: Gaussian-mixture attributes,
//! attribute-driven degree parameters, degree-corrected block-model edges,
//! and controlled node-specific mixing.
//!
//! Generation is a pure function of the config (seed included): the same
//! config yields the same instance, byte for byte.

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use rand::prelude::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, StandardNormal};
use thiserror::Error;

use crate::graph::{AttributedNetwork, GraphError};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("community count must be at least 1")]
    NoCommunities,
    #[error("mixing parameter must lie in [0, 1), got {0}")]
    BadMixing(f64),
    #[error("sigma must be positive, got {0}")]
    BadSigma(f64),
    #[error("means must supply one vector per community: {got} for {expected}")]
    WrongMeanCount { expected: usize, got: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// How community proportions are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeMode {
    /// Equal proportions `1/K`.
    Uniform,
    /// Proportions drawn from a symmetric Dirichlet(1).
    Dirichlet,
}

impl SizeMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SizeMode::Uniform => "uniform",
            SizeMode::Dirichlet => "dirichlet",
        }
    }
}

/// How inter-community links are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixingMode {
    /// Rewire intra-community edge endpoints (degree budget preserved).
    Rewire,
    /// Add new cross edges on top of the intra-community ones.
    Add,
}

impl MixingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            MixingMode::Rewire => "rewire",
            MixingMode::Add => "add",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n: usize,
    pub communities: usize,
    pub size_mode: SizeMode,
    /// Global mixing target in `[0, 1)`.
    pub mu: f64,
    /// Component means in the plane; defaults to `communities` points evenly
    /// spaced on a circle of radius 10.
    pub means: Option<Vec<[f64; 2]>>,
    /// Spherical attribute standard deviation.
    pub sigma: f64,
    pub seed: u64,
    pub mixing_mode: MixingMode,
}

impl SynthConfig {
    pub fn new(n: usize, communities: usize, mu: f64, seed: u64) -> Self {
        SynthConfig {
            n,
            communities,
            size_mode: SizeMode::Uniform,
            mu,
            means: None,
            sigma: 1.0,
            seed,
            mixing_mode: MixingMode::Rewire,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.communities == 0 {
            return Err(SimError::NoCommunities);
        }
        if !(0.0..1.0).contains(&self.mu) {
            return Err(SimError::BadMixing(self.mu));
        }
        if !(self.sigma > 0.0) {
            return Err(SimError::BadSigma(self.sigma));
        }
        if let Some(means) = &self.means {
            if means.len() != self.communities {
                return Err(SimError::WrongMeanCount {
                    expected: self.communities,
                    got: means.len(),
                });
            }
        }
        Ok(())
    }
}

/// A generated instance with its ground truth.
#[derive(Debug, Clone)]
pub struct SynthInstance {
    pub network: AttributedNetwork,
    /// Community labels in `1..=K`, matching the attribute component each
    /// node was drawn from.
    pub true_labels: Vec<usize>,
    pub tau: Vec<f64>,
    /// True mixture density of each node's attribute vector.
    pub gamma_hat: Vec<f64>,
    /// Transformed degree parameters in `[rho_min, 1]`.
    pub delta: Vec<f64>,
    /// Per-node fraction of external (cross-community) edges after mixing.
    pub realized_mixing: Vec<f64>,
    pub rho_min: f64,
}

/// Minimum within-community degree parameter, `5 log(n) / n`, clamped to 1
/// (the formula exceeds 1 for n <= 12).
pub fn rho_min(n: usize) -> f64 {
    (5.0 * (n as f64).ln() / n as f64).min(1.0)
}

/// Default component means: `k` points evenly spaced on a circle of radius
/// 10, which keeps components more than 6 sigma apart for k <= 10 at the
/// default sigma = 1.
pub fn circle_means(k: usize) -> Vec<[f64; 2]> {
    (0..k)
        .map(|i| {
            let angle = TAU * i as f64 / k as f64;
            [10.0 * angle.cos(), 10.0 * angle.sin()]
        })
        .collect()
}

/// Samples community proportions and labels. Labels are i.i.d. categorical
/// draws from the proportions; `Uniform` fixes them at `1/K`, `Dirichlet`
/// draws them from a symmetric Dirichlet(1).
pub fn sample_memberships(
    n: usize,
    k: usize,
    mode: SizeMode,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<f64>) {
    let tau: Vec<f64> = match mode {
        SizeMode::Uniform => vec![1.0 / k as f64; k],
        SizeMode::Dirichlet => {
            if k == 1 {
                vec![1.0]
            } else {
                Dirichlet::new(&vec![1.0; k]).unwrap().sample(rng)
            }
        }
    };
    let labels = (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (idx, &t) in tau.iter().enumerate() {
                acc += t;
                if u < acc {
                    return idx + 1;
                }
            }
            k
        })
        .collect();
    (labels, tau)
}

fn gaussian2_pdf(dx: f64, dy: f64, sigma2: f64) -> f64 {
    (-(dx * dx + dy * dy) / (2.0 * sigma2)).exp() / (2.0 * PI * sigma2)
}

/// Draws `x_i ~ N(mean_{label_i}, sigma^2 I_2)` and evaluates each node
/// under the true mixture density `sum_k tau_k phi(x_i; mean_k, sigma^2 I)`.
pub fn sample_attributes(
    labels: &[usize],
    tau: &[f64],
    means: &[[f64; 2]],
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> (DMatrix<f64>, Vec<f64>) {
    let n = labels.len();
    let mut x = DMatrix::zeros(n, 2);
    for (i, &label) in labels.iter().enumerate() {
        let m = means[label - 1];
        let z0: f64 = StandardNormal.sample(rng);
        let z1: f64 = StandardNormal.sample(rng);
        x[(i, 0)] = m[0] + sigma * z0;
        x[(i, 1)] = m[1] + sigma * z1;
    }
    let sigma2 = sigma * sigma;
    let gamma_hat = (0..n)
        .map(|i| {
            means
                .iter()
                .zip(tau)
                .map(|(m, &t)| t * gaussian2_pdf(x[(i, 0)] - m[0], x[(i, 1)] - m[1], sigma2))
                .sum()
        })
        .collect();
    (x, gamma_hat)
}

/// Transforms true densities into degree parameters: exponential
/// amplification `exp(gamma / mean)`, min-max rescale to `[0, 1]`, then the
/// `rho_min` floor, guaranteeing values in `[rho_min, 1]`. Constant input
/// (no spread to rescale) maps everything to 1.
pub fn delta_transform(gamma_hat: &[f64], n: usize) -> Vec<f64> {
    let floor = rho_min(n);
    let mean: f64 = gamma_hat.iter().sum::<f64>() / gamma_hat.len().max(1) as f64;
    if mean == 0.0 {
        return vec![1.0; gamma_hat.len()];
    }
    let amplified: Vec<f64> = gamma_hat.iter().map(|&g| (g / mean).exp()).collect();
    let lo = amplified.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = amplified.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return vec![1.0; gamma_hat.len()];
    }
    amplified
        .iter()
        .map(|&g| {
            let rescaled = (g - lo) / (hi - lo);
            rescaled * (1.0 - floor) + floor
        })
        .collect()
}

/// Independent Bernoulli edges within communities: a same-community pair
/// `(i, j)` is linked with probability `delta_i * delta_j`. No
/// inter-community edges at this stage.
pub fn generate_intra_edges(
    labels: &[usize],
    delta: &[f64],
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize)> {
    let n = labels.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if labels[i] == labels[j] && rng.gen_bool((delta[i] * delta[j]).min(1.0)) {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Bookkeeping from the mixing pass, for calibration checks.
#[derive(Debug, Clone)]
pub struct MixingOutcome {
    pub edges: Vec<(usize, usize)>,
    /// Final per-node fraction of cross-community edges.
    pub realized: Vec<f64>,
    /// Requested external edges per node, `round(mu_i * d_i)`.
    pub targets: Vec<usize>,
    /// Rewires a node performed during its own pass.
    pub performed: Vec<usize>,
    /// Attempts dropped because the drawn endpoint was already a neighbor.
    pub skipped: Vec<usize>,
    /// Attempts dropped because the node ran out of intra edges.
    pub shortfall: Vec<usize>,
    /// Node-specific mixing rates `mu_i`.
    pub mu_i: Vec<f64>,
}

/// Degree-weighted node mixing rates: `w_i = dbar_C(i) / d_i`, normalized
/// by the maximum, rescaled so the mean of `w~_i * mu / mean(w~)` hits the
/// target, truncated at 1. Zero-degree nodes get 0.
fn mixing_rates(degrees: &[usize], labels: &[usize], mu: f64) -> Vec<f64> {
    let n = degrees.len();
    let k = labels.iter().copied().max().unwrap_or(0);
    let mut sum_deg = vec![0.0; k + 1];
    let mut count = vec![0usize; k + 1];
    for (i, &label) in labels.iter().enumerate() {
        sum_deg[label] += degrees[i] as f64;
        count[label] += 1;
    }
    let w: Vec<f64> = (0..n)
        .map(|i| {
            if degrees[i] == 0 {
                0.0
            } else {
                let mean_deg = sum_deg[labels[i]] / count[labels[i]] as f64;
                mean_deg / degrees[i] as f64
            }
        })
        .collect();
    let w_max = w.iter().copied().fold(0.0, f64::max);
    if w_max == 0.0 || mu == 0.0 {
        return vec![0.0; n];
    }
    let w_tilde: Vec<f64> = w.iter().map(|&v| v / w_max).collect();
    let mean_tilde: f64 = w_tilde.iter().sum::<f64>() / n as f64;
    w_tilde
        .iter()
        .map(|&v| (v * mu / mean_tilde).min(1.0))
        .collect()
}

/// Introduces cross-community links so that each node ends up with about
/// `mu_i * d_i` external edges.
///
/// Nodes are visited in random order and top up their external-edge deficit
/// (edges received from earlier nodes count toward it). In `Rewire` mode an
/// intra edge of the node is redirected to the new endpoint; in `Add` mode
/// a new edge is added. Endpoints are drawn uniformly from the
/// other-community nodes that still have a deficit, falling back to all
/// other-community nodes once every deficit is met; draws that would create
/// a duplicate edge are skipped.
pub fn apply_mixing(
    edges: &[(usize, usize)],
    labels: &[usize],
    mu: f64,
    mode: MixingMode,
    rng: &mut ChaCha8Rng,
) -> MixingOutcome {
    let n = labels.len();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(i, j) in edges {
        adj[i].insert(j);
        adj[j].insert(i);
    }
    let degrees: Vec<usize> = adj.iter().map(|s| s.len()).collect();
    let mu_i = mixing_rates(&degrees, labels, mu);
    let targets: Vec<usize> = (0..n)
        .map(|i| (mu_i[i] * degrees[i] as f64).round_ties_even() as usize)
        .collect();

    let mut cross = vec![0usize; n];
    let mut performed = vec![0usize; n];
    let mut skipped = vec![0usize; n];
    let mut shortfall = vec![0usize; n];

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    for &i in &order {
        let need = targets[i].saturating_sub(cross[i]);
        for _ in 0..need {
            let intra: Vec<usize> = adj[i]
                .iter()
                .copied()
                .filter(|&j| labels[j] == labels[i])
                .collect();
            if mode == MixingMode::Rewire && intra.is_empty() {
                shortfall[i] = targets[i].saturating_sub(cross[i]);
                break;
            }
            let deficit_pool: Vec<usize> = (0..n)
                .filter(|&t| labels[t] != labels[i] && cross[t] < targets[t])
                .collect();
            let pool: Vec<usize> = if deficit_pool.is_empty() {
                (0..n).filter(|&t| labels[t] != labels[i]).collect()
            } else {
                deficit_pool
            };
            if pool.is_empty() {
                break;
            }
            let t = pool[rng.gen_range(0..pool.len())];
            if adj[i].contains(&t) {
                skipped[i] += 1;
                continue;
            }
            if mode == MixingMode::Rewire {
                let j = intra[rng.gen_range(0..intra.len())];
                adj[i].remove(&j);
                adj[j].remove(&i);
            }
            adj[i].insert(t);
            adj[t].insert(i);
            cross[i] += 1;
            cross[t] += 1;
            performed[i] += 1;
        }
    }

    let mut out_edges = Vec::new();
    for i in 0..n {
        for &j in adj[i].range(i + 1..) {
            out_edges.push((i, j));
        }
    }
    let realized = (0..n)
        .map(|i| {
            if adj[i].is_empty() {
                0.0
            } else {
                let external = adj[i].iter().filter(|&&j| labels[j] != labels[i]).count();
                external as f64 / adj[i].len() as f64
            }
        })
        .collect();

    MixingOutcome {
        edges: out_edges,
        realized,
        targets,
        performed,
        skipped,
        shortfall,
        mu_i,
    }
}

/// Full generation pipeline: memberships, attributes, degree parameters,
/// intra-community edges, then mixing.
pub fn generate_instance(config: &SynthConfig) -> Result<SynthInstance, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (labels, tau) = sample_memberships(config.n, config.communities, config.size_mode, &mut rng);
    let means = config
        .means
        .clone()
        .unwrap_or_else(|| circle_means(config.communities));
    let (x, gamma_hat) = sample_attributes(&labels, &tau, &means, config.sigma, &mut rng);
    let delta = delta_transform(&gamma_hat, config.n);
    let intra = generate_intra_edges(&labels, &delta, &mut rng);
    let outcome = apply_mixing(&intra, &labels, config.mu, config.mixing_mode, &mut rng);
    let network = AttributedNetwork::from_indexed(config.n, &outcome.edges, x)?;
    Ok(SynthInstance {
        network,
        true_labels: labels,
        tau,
        gamma_hat,
        delta,
        realized_mixing: outcome.realized,
        rho_min: rho_min(config.n),
    })
}
