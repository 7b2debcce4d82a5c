//! Matérn covariance functions over normalized inputs.

use crate::gp::GpError;

pub(crate) const SQRT_3: f64 = 1.732_050_807_568_877_2;
pub(crate) const SQRT_5: f64 = 2.236_067_977_499_79;

/// Smoothness parameter restricted to the closed-form Matérn family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaternNu {
    /// ν = 1/2, the exponential kernel.
    Half,
    /// ν = 3/2.
    ThreeHalves,
    /// ν = 5/2.
    FiveHalves,
}

impl MaternNu {
    pub fn value(self) -> f64 {
        match self {
            MaternNu::Half => 0.5,
            MaternNu::ThreeHalves => 1.5,
            MaternNu::FiveHalves => 2.5,
        }
    }

    /// Maps 0.5 / 1.5 / 2.5 back to the enum; anything else is rejected.
    pub fn from_value(v: f64) -> Option<Self> {
        if v == 0.5 {
            Some(MaternNu::Half)
        } else if v == 1.5 {
            Some(MaternNu::ThreeHalves)
        } else if v == 2.5 {
            Some(MaternNu::FiveHalves)
        } else {
            None
        }
    }
}

impl std::fmt::Display for MaternNu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Kernel hyperparameters. `length_scale` applies in the normalized input
/// space; `noise_variance` is the jitter added to the Gram diagonal, in
/// standardized output units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub nu: MaternNu,
    pub length_scale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelParams {
    /// Smallest admissible jitter.
    pub const MIN_NOISE: f64 = 1e-10;

    pub fn new(
        nu: MaternNu,
        length_scale: f64,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Result<Self, GpError> {
        let p = Self { nu, length_scale, signal_variance, noise_variance };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GpError> {
        if !(self.length_scale > 0.0) || !self.length_scale.is_finite() {
            return Err(GpError::InvalidParams(format!(
                "length_scale must be positive and finite, got {}",
                self.length_scale
            )));
        }
        if !(self.signal_variance > 0.0) || !self.signal_variance.is_finite() {
            return Err(GpError::InvalidParams(format!(
                "signal_variance must be positive and finite, got {}",
                self.signal_variance
            )));
        }
        if !(self.noise_variance >= Self::MIN_NOISE) || !self.noise_variance.is_finite() {
            return Err(GpError::InvalidParams(format!(
                "noise_variance must be >= {:e}, got {}",
                Self::MIN_NOISE,
                self.noise_variance
            )));
        }
        Ok(())
    }
}

impl Default for KernelParams {
    /// ν = 1/2 with ℓ = 0.75 on the normalized cube; unit signal variance and
    /// a small jitter in standardized output space.
    fn default() -> Self {
        Self {
            nu: MaternNu::Half,
            length_scale: 0.75,
            signal_variance: 1.0,
            noise_variance: 1e-6,
        }
    }
}

/// Covariance between two normalized points:
/// `σ_f² · m_ν(r/ℓ)` with `r` the Euclidean distance and `m_ν` the closed-form
/// Matérn term for ν ∈ {1/2, 3/2, 5/2}. Symmetric in its arguments.
pub fn kernel_eval(a: &[f64], b: &[f64], p: &KernelParams) -> Result<f64, GpError> {
    if a.len() != b.len() {
        return Err(GpError::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    Ok(kernel_raw(a, b, p))
}

/// Hot-path kernel evaluation; dimensions and parameters are the caller's
/// responsibility.
pub(crate) fn kernel_raw(a: &[f64], b: &[f64], p: &KernelParams) -> f64 {
    let mut d2 = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        d2 += d * d;
    }
    p.signal_variance * matern_term(d2.sqrt() / p.length_scale, p.nu)
}

fn matern_term(t: f64, nu: MaternNu) -> f64 {
    match nu {
        MaternNu::Half => (-t).exp(),
        MaternNu::ThreeHalves => {
            let s = SQRT_3 * t;
            (1.0 + s) * (-s).exp()
        }
        MaternNu::FiveHalves => {
            let s = SQRT_5 * t;
            (1.0 + s + 5.0 * t * t / 3.0) * (-s).exp()
        }
    }
}
