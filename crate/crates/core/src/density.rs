//! Attribute-space density estimators.
//!
//! The node-wise densities produced here drive leader identification: a
//! node's density is the estimated probability density of its attribute
//! vector, so nodes in populated regions of the attribute space score
//! high. The Gaussian-mixture estimators live in [`crate::gmm`]; this
//! module holds the density-vector type and the nonparametric kNN
//! estimator.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::gmm::CovarianceModel;

/// Guards against division by zero at coincident points.
pub const KNN_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum DensityError {
    #[error("k = {k} out of range; need 1 <= k <= n-1 with n = {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("attribute matrix is empty")]
    EmptyMatrix,
    #[error("density value for node {index} is not finite and non-negative")]
    InvalidValue { index: usize },
}

/// Which estimator produced a density vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorTag {
    Knn,
    Gmm,
    GmmComponent,
    Degree,
    Local,
    External,
}

impl EstimatorTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorTag::Knn => "knn",
            EstimatorTag::Gmm => "gmm",
            EstimatorTag::GmmComponent => "gmm-component",
            EstimatorTag::Degree => "degree",
            EstimatorTag::Local => "local",
            EstimatorTag::External => "external",
        }
    }
}

/// Estimator parameters echoed into the output for provenance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DensityParams {
    pub k: Option<usize>,
    pub components: Option<usize>,
    pub covariance: Option<CovarianceModel>,
    pub seed: Option<u64>,
}

/// Per-node density estimates with provenance of the estimator used.
///
/// Values are validated at construction: finite and non-negative, always.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector {
    values: Vec<f64>,
    tag: EstimatorTag,
    params: DensityParams,
}

impl DensityVector {
    pub fn new(
        values: Vec<f64>,
        tag: EstimatorTag,
        params: DensityParams,
    ) -> Result<Self, DensityError> {
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(DensityError::InvalidValue { index });
            }
        }
        Ok(DensityVector {
            values,
            tag,
            params,
        })
    }

    /// Wraps externally supplied densities (e.g. a generator's true mixture
    /// density).
    pub fn external(values: Vec<f64>) -> Result<Self, DensityError> {
        Self::new(values, EstimatorTag::External, DensityParams::default())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn tag(&self) -> EstimatorTag {
        self.tag
    }

    pub fn params(&self) -> &DensityParams {
        &self.params
    }
}

/// kNN density: the inverse of the average Euclidean distance from each row
/// of `x` to its `k` closest other rows, with an epsilon guard for
/// coincident points. The point itself is excluded from its neighbors.
pub fn knn_density(x: &DMatrix<f64>, k: usize) -> Result<DensityVector, DensityError> {
    let n = x.nrows();
    if n == 0 {
        return Err(DensityError::EmptyMatrix);
    }
    if k == 0 || k > n - 1 {
        return Err(DensityError::KTooLarge { k, n });
    }

    let mut values = Vec::with_capacity(n);
    let mut dists = vec![0.0_f64; n - 1];
    for i in 0..n {
        let xi = x.row(i);
        let mut m = 0;
        for j in 0..n {
            if j == i {
                continue;
            }
            dists[m] = (xi - x.row(j)).norm();
            m += 1;
        }
        dists.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
        let mean: f64 = dists[..k].iter().sum::<f64>() / k as f64;
        values.push(1.0 / (mean + KNN_EPSILON));
    }

    DensityVector::new(
        values,
        EstimatorTag::Knn,
        DensityParams {
            k: Some(k),
            ..DensityParams::default()
        },
    )
}
