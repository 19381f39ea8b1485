//! Gaussian mixture fitting by EM with BIC model selection, plus the two
//! mixture-based density evaluators.
//!
//! Fits run from a seeded k-means++-style initialization and are fully
//! deterministic given `(data, candidates, model, seed)`. Covariances are
//! floored (eigenvalues clamped at [`COV_FLOOR`]) each M-step, which keeps
//! every step a valid generalized-EM step: the training log-likelihood is
//! non-decreasing and the per-iteration trace is kept on the model so
//! callers can check it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::density::{DensityError, DensityParams, DensityVector, EstimatorTag};

/// Eigenvalue floor applied to covariances at every M-step.
pub const COV_FLOOR: f64 = 1e-6;

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Error, PartialEq)]
pub enum GmmError {
    #[error("no candidate component counts supplied")]
    EmptyCandidates,
    #[error("candidate M = {m} exceeds the {n} data points")]
    TooManyComponents { m: usize, n: usize },
    #[error("attribute matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("covariance floor failed to restore a positive definite matrix")]
    SingularCovariance,
    #[error("model dimension {model} does not match data dimension {data}")]
    DimensionMismatch { model: usize, data: usize },
    #[error(transparent)]
    Density(#[from] DensityError),
}

/// Covariance parameterization shared by all components of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceModel {
    Spherical,
    Diagonal,
    Full,
}

impl CovarianceModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CovarianceModel::Spherical => "spherical",
            CovarianceModel::Diagonal => "diag",
            CovarianceModel::Full => "full",
        }
    }

    /// Free covariance parameters for one component in dimension `p`.
    fn params_per_component(&self, p: usize) -> usize {
        match self {
            CovarianceModel::Spherical => 1,
            CovarianceModel::Diagonal => p,
            CovarianceModel::Full => p * (p + 1) / 2,
        }
    }
}

/// One component's covariance in the chosen parameterization.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Spherical(f64),
    Diagonal(DVector<f64>),
    Full(DMatrix<f64>),
}

impl Covariance {
    /// log det of the covariance matrix.
    fn log_det(&self, p: usize) -> f64 {
        match self {
            Covariance::Spherical(v) => p as f64 * v.ln(),
            Covariance::Diagonal(v) => v.iter().map(|x| x.ln()).sum(),
            Covariance::Full(m) => {
                let chol = nalgebra::Cholesky::new(m.clone())
                    .expect("floored covariance is positive definite");
                2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>()
            }
        }
    }

    /// Mahalanobis quadratic form (x - mean)' Sigma^-1 (x - mean).
    fn quad_form(&self, diff: &DVector<f64>) -> f64 {
        match self {
            Covariance::Spherical(v) => diff.norm_squared() / v,
            Covariance::Diagonal(v) => diff
                .iter()
                .zip(v.iter())
                .map(|(d, var)| d * d / var)
                .sum(),
            Covariance::Full(m) => {
                let chol = nalgebra::Cholesky::new(m.clone())
                    .expect("floored covariance is positive definite");
                let y = chol
                    .l()
                    .solve_lower_triangular(diff)
                    .expect("triangular solve");
                y.norm_squared()
            }
        }
    }
}

/// A fitted Gaussian mixture with per-node posteriors.
#[derive(Debug, Clone)]
pub struct GmmModel {
    pub component_count: usize,
    pub dim: usize,
    pub covariance_model: CovarianceModel,
    /// Mixing proportions; sum to 1.
    pub weights: Vec<f64>,
    /// `M x p` component means.
    pub means: DMatrix<f64>,
    pub covariances: Vec<Covariance>,
    /// Final training log-likelihood.
    pub log_likelihood: f64,
    /// `n x M` responsibilities on the training data; rows sum to 1.
    pub posteriors: DMatrix<f64>,
    /// `-2 logL + q ln(n)` with `q` the free-parameter count.
    pub bic: f64,
    /// False when the iteration cap was hit before the tolerance.
    pub converged: bool,
    /// Per-iteration training log-likelihood.
    pub loglik_trace: Vec<f64>,
    pub seed: u64,
}

impl GmmModel {
    pub fn free_parameters(&self) -> usize {
        free_parameters(
            self.component_count,
            self.dim,
            self.covariance_model,
        )
    }

    fn log_pdf(&self, x: &DVector<f64>, m: usize) -> f64 {
        let mean = self.means.row(m).transpose();
        let diff = x - mean;
        let cov = &self.covariances[m];
        -0.5 * (self.dim as f64 * LN_2PI + cov.log_det(self.dim) + cov.quad_form(&diff))
    }

    /// `n x M` matrix of `ln w_m + ln phi(x_i; mean_m, cov_m)`.
    fn weighted_log_pdfs(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, GmmError> {
        if x.ncols() != self.dim {
            return Err(GmmError::DimensionMismatch {
                model: self.dim,
                data: x.ncols(),
            });
        }
        let n = x.nrows();
        let m_count = self.component_count;
        let mut out = DMatrix::zeros(n, m_count);
        for i in 0..n {
            let xi = x.row(i).transpose();
            for m in 0..m_count {
                out[(i, m)] = self.weights[m].ln() + self.log_pdf(&xi, m);
            }
        }
        Ok(out)
    }
}

fn free_parameters(m: usize, p: usize, model: CovarianceModel) -> usize {
    (m - 1) + m * p + m * model.params_per_component(p)
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = row.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Fits one mixture per candidate component count and keeps the candidate
/// minimizing BIC (ties go to the smaller count).
///
/// EM stops when the log-likelihood improvement drops below `tol` or after
/// `max_iter` iterations; hitting the cap is reported through
/// [`GmmModel::converged`], not as an error.
pub fn fit_gmm(
    x: &DMatrix<f64>,
    candidates: &[usize],
    model: CovarianceModel,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<GmmModel, GmmError> {
    let n = x.nrows();
    let p = x.ncols();
    if n == 0 || p == 0 {
        return Err(GmmError::EmptyMatrix);
    }
    if candidates.is_empty() {
        return Err(GmmError::EmptyCandidates);
    }
    let mut sorted: Vec<usize> = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &m in &sorted {
        if m == 0 || m > n {
            return Err(GmmError::TooManyComponents { m, n });
        }
    }

    let mut best: Option<GmmModel> = None;
    for &m in &sorted {
        let fitted = fit_single(x, m, model, seed, max_iter, tol)?;
        match &best {
            Some(b) if b.bic <= fitted.bic => {}
            _ => best = Some(fitted),
        }
    }
    Ok(best.expect("at least one candidate"))
}

fn fit_single(
    x: &DMatrix<f64>,
    m_count: usize,
    model: CovarianceModel,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<GmmModel, GmmError> {
    let n = x.nrows();
    let p = x.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (m_count as u64).wrapping_mul(0x9E3779B97F4A7C15));

    let centers = kmeanspp_centers(x, m_count, &mut rng);
    let mut means = DMatrix::zeros(m_count, p);
    for (row, &c) in centers.iter().enumerate() {
        means.set_row(row, &x.row(c));
    }

    // Hard assignment to the seeded centers gives per-component weights,
    // means and covariances; empty components fall back to the global fit.
    let mut assign = vec![0usize; n];
    for i in 0..n {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (m, &c) in centers.iter().enumerate() {
            let d = (x.row(i) - x.row(c)).norm_squared();
            if d < best_d {
                best_d = d;
                best = m;
            }
        }
        assign[i] = best;
    }
    let global = global_covariance(x, model)?;
    let mut weights = vec![1.0 / m_count as f64; m_count];
    let mut covariances = vec![global; m_count];
    for m in 0..m_count {
        let members: Vec<usize> = (0..n).filter(|&i| assign[i] == m).collect();
        if members.is_empty() {
            continue;
        }
        weights[m] = members.len() as f64 / n as f64;
        let mut mean = DVector::zeros(p);
        for &i in &members {
            mean += x.row(i).transpose();
        }
        mean /= members.len() as f64;
        means.set_row(m, &mean.transpose());
        let resp = DVector::from_fn(n, |i, _| if assign[i] == m { 1.0 } else { 0.0 });
        covariances[m] = scatter_covariance(x, &mean, &resp.column(0), members.len() as f64, model)?;
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }

    let mut gmm = GmmModel {
        component_count: m_count,
        dim: p,
        covariance_model: model,
        weights,
        means,
        covariances,
        log_likelihood: f64::NEG_INFINITY,
        posteriors: DMatrix::zeros(n, m_count),
        bic: f64::INFINITY,
        converged: false,
        loglik_trace: Vec::new(),
        seed,
    };

    let mut prev_ll = f64::NEG_INFINITY;
    for _ in 0..max_iter {
        // E-step in log space.
        let wlp = gmm.weighted_log_pdfs(x)?;
        let mut ll = 0.0;
        for i in 0..n {
            let row: Vec<f64> = (0..m_count).map(|m| wlp[(i, m)]).collect();
            let lse = log_sum_exp(&row);
            ll += lse;
            for m in 0..m_count {
                gmm.posteriors[(i, m)] = (wlp[(i, m)] - lse).exp();
            }
        }
        debug_assert!(
            gmm.loglik_trace.is_empty() || ll >= prev_ll - 1e-9,
            "EM log-likelihood decreased: {prev_ll} -> {ll}"
        );
        gmm.loglik_trace.push(ll);
        gmm.log_likelihood = ll;
        if prev_ll.is_finite() && ll - prev_ll < tol {
            gmm.converged = true;
            break;
        }
        prev_ll = ll;

        // M-step with floored covariances.
        for m in 0..m_count {
            let resp = gmm.posteriors.column(m);
            let nm: f64 = resp.sum();
            gmm.weights[m] = nm / n as f64;
            if nm < 1e-12 {
                // Starved component: keep its parameters, let the weight
                // record its (near-zero) share.
                continue;
            }
            let mut mean = DVector::zeros(p);
            for i in 0..n {
                mean += resp[i] * x.row(i).transpose();
            }
            mean /= nm;
            gmm.means.set_row(m, &mean.transpose());
            gmm.covariances[m] = scatter_covariance(x, &mean, &resp, nm, model)?;
        }
    }

    let q = free_parameters(m_count, p, model);
    gmm.bic = -2.0 * gmm.log_likelihood + q as f64 * (n as f64).ln();
    Ok(gmm)
}

/// k-means++ seeding: the first center is uniform, each next is sampled
/// with probability proportional to squared distance from the chosen set.
fn kmeanspp_centers(x: &DMatrix<f64>, m_count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = x.nrows();
    let mut centers = Vec::with_capacity(m_count);
    centers.push(rng.gen_range(0..n));
    let mut dist2: Vec<f64> = (0..n)
        .map(|i| (x.row(i) - x.row(centers[0])).norm_squared())
        .collect();
    while centers.len() < m_count {
        let total: f64 = dist2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &d) in dist2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            // All remaining mass is on coincident points; fall back to a
            // point not yet chosen, uniformly.
            let remaining: Vec<usize> =
                (0..n).filter(|i| !centers.contains(i)).collect();
            if remaining.is_empty() {
                centers[rng.gen_range(0..centers.len())]
            } else {
                remaining[rng.gen_range(0..remaining.len())]
            }
        };
        centers.push(next);
        for i in 0..n {
            let d = (x.row(i) - x.row(next)).norm_squared();
            if d < dist2[i] {
                dist2[i] = d;
            }
        }
    }
    centers
}

/// Covariance of the full data set in the chosen parameterization; used to
/// initialize every component.
fn global_covariance(x: &DMatrix<f64>, model: CovarianceModel) -> Result<Covariance, GmmError> {
    let n = x.nrows();
    let mean = x.row_mean().transpose();
    let uniform = DVector::from_element(n, 1.0);
    scatter_covariance(x, &mean, &uniform.column(0), n as f64, model)
}

/// Weighted maximum-likelihood covariance with the eigenvalue floor, which
/// is the constrained maximizer over the floored parameter set.
fn scatter_covariance(
    x: &DMatrix<f64>,
    mean: &DVector<f64>,
    resp: &nalgebra::DVectorView<'_, f64>,
    nm: f64,
    model: CovarianceModel,
) -> Result<Covariance, GmmError> {
    let n = x.nrows();
    let p = x.ncols();
    match model {
        CovarianceModel::Spherical => {
            let mut total = 0.0;
            for i in 0..n {
                let diff = x.row(i).transpose() - mean;
                total += resp[i] * diff.norm_squared();
            }
            let var = (total / (nm * p as f64)).max(COV_FLOOR);
            if !var.is_finite() {
                return Err(GmmError::SingularCovariance);
            }
            Ok(Covariance::Spherical(var))
        }
        CovarianceModel::Diagonal => {
            let mut vars: DVector<f64> = DVector::zeros(p);
            for i in 0..n {
                let diff = x.row(i).transpose() - mean;
                for j in 0..p {
                    vars[j] += resp[i] * diff[j] * diff[j];
                }
            }
            for j in 0..p {
                vars[j] = (vars[j] / nm).max(COV_FLOOR);
                if !vars[j].is_finite() {
                    return Err(GmmError::SingularCovariance);
                }
            }
            Ok(Covariance::Diagonal(vars))
        }
        CovarianceModel::Full => {
            let mut scatter = DMatrix::zeros(p, p);
            for i in 0..n {
                let diff = x.row(i).transpose() - mean;
                scatter += resp[i] * &diff * diff.transpose();
            }
            scatter /= nm;
            // Symmetrize against accumulation drift, then clamp eigenvalues.
            let sym = (&scatter + scatter.transpose()) * 0.5;
            let eig = nalgebra::SymmetricEigen::new(sym);
            let mut vals = eig.eigenvalues;
            for v in vals.iter_mut() {
                if !v.is_finite() {
                    return Err(GmmError::SingularCovariance);
                }
                *v = v.max(COV_FLOOR);
            }
            let floored =
                &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
            let floored = (&floored + floored.transpose()) * 0.5;
            if nalgebra::Cholesky::new(floored.clone()).is_none() {
                return Err(GmmError::SingularCovariance);
            }
            Ok(Covariance::Full(floored))
        }
    }
}

/// Mixture density: `sum_m w_m phi(x_i; mean_m, cov_m)` per row of `x`.
pub fn mixture_density(model: &GmmModel, x: &DMatrix<f64>) -> Result<DensityVector, GmmError> {
    let wlp = model.weighted_log_pdfs(x)?;
    let values: Vec<f64> = (0..x.nrows())
        .map(|i| {
            let row: Vec<f64> = (0..model.component_count).map(|m| wlp[(i, m)]).collect();
            log_sum_exp(&row).exp()
        })
        .collect();
    Ok(DensityVector::new(
        values,
        EstimatorTag::Gmm,
        density_params(model),
    )?)
}

/// Component-wise density: each row is assigned to the component with the
/// highest posterior (ties to the lowest index) and evaluated under that
/// component's unweighted Gaussian pdf.
pub fn componentwise_density(
    model: &GmmModel,
    x: &DMatrix<f64>,
) -> Result<DensityVector, GmmError> {
    let wlp = model.weighted_log_pdfs(x)?;
    let mut values = Vec::with_capacity(x.nrows());
    for i in 0..x.nrows() {
        // Posterior order equals weighted-log-pdf order (shared normalizer).
        let mut best = 0;
        for m in 1..model.component_count {
            if wlp[(i, m)] > wlp[(i, best)] {
                best = m;
            }
        }
        let xi = x.row(i).transpose();
        values.push(model.log_pdf(&xi, best).exp());
    }
    Ok(DensityVector::new(
        values,
        EstimatorTag::GmmComponent,
        density_params(model),
    )?)
}

fn density_params(model: &GmmModel) -> DensityParams {
    DensityParams {
        components: Some(model.component_count),
        covariance: Some(model.covariance_model),
        seed: Some(model.seed),
        ..DensityParams::default()
    }
}
