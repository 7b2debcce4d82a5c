//! Exact Gaussian-process regression with Cholesky fitting.
//!
//! Inputs are normalized to the unit hypercube using the design [`Bounds`]
//! supplied at fit time (the length scale is only meaningful on that scale);
//! outputs are standardized to zero mean and unit variance. Predictions are
//! de-standardized back to power units.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::kernel::{kernel_raw, KernelParams};
use crate::space::{Bounds, DesignPoint};

/// Jitter escalation stops once the diagonal bump would exceed this value.
const MAX_JITTER: f64 = 1e-2;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid kernel parameters: {0}")]
    InvalidParams(String),
    #[error("Cholesky factorization failed with jitter escalated up to {max_jitter:e}")]
    CholeskyFailed { max_jitter: f64 },
    #[error("grid search failed: {0}")]
    GridSearch(String),
}

/// Posterior prediction at a single input, in power units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    /// Posterior standard deviation, de-standardized; always >= 0.
    pub stddev: f64,
    /// Posterior variance in the model's standardized output space. This is
    /// the scale-free quantity compared against the online uncertainty
    /// threshold.
    pub standardized_variance: f64,
    /// Set when the query lies outside the bounds used at fit time; the
    /// prediction extrapolates and downstream traces flag it.
    pub out_of_bounds: bool,
}

/// A fitted Gaussian process. Immutable after construction and safe to share
/// across threads for concurrent prediction.
#[derive(Debug, Clone)]
pub struct GpModel {
    params: KernelParams,
    bounds: Bounds,
    train_x: Vec<Vec<f64>>,
    chol_l: DMatrix<f64>,
    alpha: DVector<f64>,
    y_mean: f64,
    y_std: f64,
}

impl GpModel {
    /// Fits an exact GP on `(xs, ys)`.
    ///
    /// All inputs must lie inside `bounds` and be finite. On a Gram matrix
    /// that fails to factorize, the diagonal jitter is escalated by factors of
    /// 10 up to `1e-2` before giving up; the escalated value is recorded in
    /// the returned model's parameters.
    pub fn fit(
        xs: &[DesignPoint],
        ys: &[f64],
        params: &KernelParams,
        bounds: &Bounds,
    ) -> Result<Self, GpError> {
        params.validate()?;
        if xs.is_empty() {
            return Err(GpError::InvalidInput("need at least one training sample".into()));
        }
        if xs.len() != ys.len() {
            return Err(GpError::InvalidInput(format!(
                "{} inputs but {} outputs",
                xs.len(),
                ys.len()
            )));
        }
        for (i, x) in xs.iter().enumerate() {
            if x.dim() != bounds.dim() {
                return Err(GpError::DimensionMismatch { expected: bounds.dim(), got: x.dim() });
            }
            if x.coords().iter().any(|v| !v.is_finite()) {
                return Err(GpError::InvalidInput(format!("training input {i} is not finite")));
            }
            if !bounds.contains(x) {
                return Err(GpError::InvalidInput(format!(
                    "training input {i} lies outside the design bounds"
                )));
            }
        }
        if let Some(i) = ys.iter().position(|v| !v.is_finite()) {
            return Err(GpError::InvalidInput(format!("training output {i} is not finite")));
        }

        let n = xs.len();
        let train_x: Vec<Vec<f64>> = xs.iter().map(|x| bounds.normalize(x)).collect();

        let y_mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n as f64;
        let y_std = if var > 0.0 { var.sqrt() } else { 1.0 };
        let y_standardized = DVector::from_iterator(n, ys.iter().map(|y| (y - y_mean) / y_std));

        let gram = DMatrix::from_fn(n, n, |i, j| kernel_raw(&train_x[i], &train_x[j], params));

        let mut jitter = params.noise_variance;
        let chol = loop {
            let mut k = gram.clone();
            for i in 0..n {
                k[(i, i)] += jitter;
            }
            match nalgebra::Cholesky::new(k) {
                Some(c) => break c,
                None => {
                    let next = jitter * 10.0;
                    if next > MAX_JITTER * (1.0 + 1e-9) {
                        return Err(GpError::CholeskyFailed { max_jitter: jitter });
                    }
                    jitter = next;
                }
            }
        };

        let alpha = chol.solve(&y_standardized);
        let chol_l = chol.unpack();

        Ok(Self {
            params: KernelParams { noise_variance: jitter, ..*params },
            bounds: bounds.clone(),
            train_x,
            chol_l,
            alpha,
            y_mean,
            y_std,
        })
    }

    /// Posterior mean and standard deviation at `x`.
    ///
    /// Queries outside the fit-time bounds are allowed; the result carries an
    /// out-of-bounds flag instead of an error.
    pub fn predict(&self, x: &DesignPoint) -> Prediction {
        self.predict_many(std::slice::from_ref(x)).pop().expect("one prediction")
    }

    /// Batch form of [`predict`](Self::predict); one triangular solve covers
    /// all queries.
    pub fn predict_many(&self, xs: &[DesignPoint]) -> Vec<Prediction> {
        let n = self.train_x.len();
        let m = xs.len();
        if m == 0 {
            return Vec::new();
        }
        for x in xs {
            assert_eq!(
                x.dim(),
                self.bounds.dim(),
                "query dimension {} does not match model dimension {}",
                x.dim(),
                self.bounds.dim()
            );
        }
        let queries: Vec<Vec<f64>> = xs.iter().map(|x| self.bounds.normalize(x)).collect();

        let kstar =
            DMatrix::from_fn(n, m, |i, j| kernel_raw(&self.train_x[i], &queries[j], &self.params));

        // v = L^-1 K*; posterior variance is k(x,x) - ||v_col||^2.
        let v = self
            .chol_l
            .solve_lower_triangular(&kstar)
            .expect("Cholesky factor has positive diagonal");

        let prior = self.params.signal_variance;
        (0..m)
            .map(|j| {
                let mean_std = self.alpha.dot(&kstar.column(j));
                // Clamp at zero: cancellation can leave a tiny negative.
                let var = (prior - v.column(j).norm_squared()).max(0.0);
                Prediction {
                    mean: mean_std * self.y_std + self.y_mean,
                    stddev: var.sqrt() * self.y_std,
                    standardized_variance: var,
                    out_of_bounds: !self.bounds.contains(&xs[j]),
                }
            })
            .collect()
    }

    /// Effective kernel parameters, including any escalated jitter.
    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// Number of training samples.
    pub fn len(&self) -> usize {
        self.train_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_x.is_empty()
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn y_std(&self) -> f64 {
        self.y_std
    }

    /// Solved weight vector `(K + σ_n²·I)⁻¹ ỹ` in standardized space.
    pub fn alpha(&self) -> &[f64] {
        self.alpha.as_slice()
    }

    /// Lower-triangular Cholesky factor of `K + σ_n²·I`.
    pub fn chol_lower(&self) -> &DMatrix<f64> {
        &self.chol_l
    }

    /// Normalized training inputs.
    pub fn train_inputs(&self) -> &[Vec<f64>] {
        &self.train_x
    }
}
