//! The expensive-evaluation abstraction standing in for the physics simulator.
//!
//! The synthetic family is a coupled quadratic bowl with an optional
//! sinusoidal term:
//!
//! ```text
//! P(x) = P0 + Σ_j w_j (x_j − c_j)²
//!           + κ Σ_j (x_j − c_j)(x_{j+1} − c_{j+1})
//!           + A Σ_j sin(ω_j x_j)
//! ```
//!
//! With `κ = 0` and `A = 0` the global minimum is exactly `P0` at `c`, which
//! the verification suites use as ground truth.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::space::{Bounds, DesignPoint};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("design point outside bounds at dimension {dim}: {value} not in [{low}, {high}]")]
    OutOfBounds { dim: usize, value: f64, low: f64, high: f64 },
    #[error("dimension mismatch: oracle expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),
    #[error("oracle evaluation failed: {0}")]
    EvaluationFailed(String),
}

/// Call accounting snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleStats {
    pub call_count: u64,
    pub total_wall_time: Duration,
    pub per_call_latency: Duration,
}

/// An expensive black-box power function over a bounded design space.
///
/// Implementations must be callable from multiple workers; call accounting is
/// atomic with respect to concurrent evaluations.
pub trait Oracle: Sync {
    fn bounds(&self) -> &Bounds;

    /// Labels one design point, recording the call. Out-of-bounds inputs are
    /// an error: the caller must never silently extrapolate the physics
    /// stand-in.
    fn evaluate(&self, x: &DesignPoint) -> Result<f64, OracleError>;

    fn stats(&self) -> OracleStats;

    /// Ground-truth minimum when the configuration admits one in closed form.
    fn known_minimum(&self) -> Option<f64> {
        None
    }
}

/// Constants of the synthetic power function.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticConfig {
    /// Base power `P0`.
    pub base_power: f64,
    /// Per-dimension curvature weights `w_j`.
    pub weights: Vec<f64>,
    /// Bowl center `c`; defaults to the box midpoint.
    pub center: Vec<f64>,
    /// Neighbor-coupling strength `κ`.
    pub coupling: f64,
    /// Sinusoidal amplitude `A`.
    pub amplitude: f64,
    /// Sinusoidal frequencies `ω_j`.
    pub frequencies: Vec<f64>,
    /// Simulated per-call expense; zero in tests.
    pub latency: Duration,
}

impl QuadraticConfig {
    /// Documented defaults: `P0 = 10000`, `w_j = 50`, `c` at the box midpoint,
    /// `κ = 10`, `A = 0`, `ω_j = 2π`, zero latency.
    pub fn defaults(bounds: &Bounds) -> Self {
        let d = bounds.dim();
        Self {
            base_power: 10_000.0,
            weights: vec![50.0; d],
            center: bounds.midpoint().coords().to_vec(),
            coupling: 10.0,
            amplitude: 0.0,
            frequencies: vec![std::f64::consts::TAU; d],
            latency: Duration::ZERO,
        }
    }
}

#[derive(Debug, Default)]
struct Counters {
    calls: AtomicU64,
    wall_nanos: AtomicU64,
}

/// Deterministic closed-form oracle with call accounting and optional
/// simulated latency.
#[derive(Debug)]
pub struct SyntheticOracle {
    bounds: Bounds,
    cfg: QuadraticConfig,
    counters: Counters,
}

impl SyntheticOracle {
    pub fn new(bounds: Bounds, cfg: QuadraticConfig) -> Result<Self, OracleError> {
        let d = bounds.dim();
        for (name, len) in [
            ("weights", cfg.weights.len()),
            ("center", cfg.center.len()),
            ("frequencies", cfg.frequencies.len()),
        ] {
            if len != d {
                return Err(OracleError::InvalidConfig(format!(
                    "{name} has {len} entries for a {d}-dimensional space"
                )));
            }
        }
        if !cfg.base_power.is_finite()
            || !cfg.coupling.is_finite()
            || !cfg.amplitude.is_finite()
            || cfg.weights.iter().any(|v| !v.is_finite())
            || cfg.center.iter().any(|v| !v.is_finite())
            || cfg.frequencies.iter().any(|v| !v.is_finite())
        {
            return Err(OracleError::InvalidConfig("non-finite constant".into()));
        }
        Ok(Self { bounds, cfg, counters: Counters::default() })
    }

    /// Oracle with all-default constants over `bounds`.
    pub fn quadratic(bounds: Bounds) -> Self {
        let cfg = QuadraticConfig::defaults(&bounds);
        Self::new(bounds, cfg).expect("defaults are consistent")
    }

    pub fn config(&self) -> &QuadraticConfig {
        &self.cfg
    }

    fn power(&self, x: &DesignPoint) -> f64 {
        let c = &self.cfg.center;
        let d: Vec<f64> = x.coords().iter().zip(c).map(|(v, m)| v - m).collect();
        let mut p = self.cfg.base_power;
        for (w, dj) in self.cfg.weights.iter().zip(&d) {
            p += w * dj * dj;
        }
        for j in 0..d.len().saturating_sub(1) {
            p += self.cfg.coupling * d[j] * d[j + 1];
        }
        if self.cfg.amplitude != 0.0 {
            for (om, v) in self.cfg.frequencies.iter().zip(x.coords()) {
                p += self.cfg.amplitude * (om * v).sin();
            }
        }
        p
    }
}

impl Oracle for SyntheticOracle {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&self, x: &DesignPoint) -> Result<f64, OracleError> {
        let start = Instant::now();
        if x.dim() != self.bounds.dim() {
            return Err(OracleError::DimensionMismatch {
                expected: self.bounds.dim(),
                got: x.dim(),
            });
        }
        for (j, (&v, (&lo, &hi))) in x
            .coords()
            .iter()
            .zip(self.bounds.lows().iter().zip(self.bounds.highs()))
            .enumerate()
        {
            if !(v >= lo && v <= hi) {
                return Err(OracleError::OutOfBounds { dim: j, value: v, low: lo, high: hi });
            }
        }

        let p = self.power(x);
        if !self.cfg.latency.is_zero() {
            std::thread::sleep(self.cfg.latency);
        }
        self.counters.calls.fetch_add(1, Ordering::Relaxed);
        self.counters
            .wall_nanos
            .fetch_add(start.elapsed().as_nanos() as u64, Ordering::Relaxed);
        Ok(p)
    }

    fn stats(&self) -> OracleStats {
        OracleStats {
            call_count: self.counters.calls.load(Ordering::Relaxed),
            total_wall_time: Duration::from_nanos(self.counters.wall_nanos.load(Ordering::Relaxed)),
            per_call_latency: self.cfg.latency,
        }
    }

    fn known_minimum(&self) -> Option<f64> {
        (self.cfg.coupling == 0.0 && self.cfg.amplitude == 0.0).then_some(self.cfg.base_power)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::sample_uniform;
    use approx::assert_relative_eq;

    fn uncoupled(bounds: &Bounds) -> SyntheticOracle {
        let cfg = QuadraticConfig { coupling: 0.0, ..QuadraticConfig::defaults(bounds) };
        SyntheticOracle::new(bounds.clone(), cfg).unwrap()
    }

    #[test]
    fn center_of_uncoupled_bowl_returns_base_power_exactly() {
        let bounds = Bounds::unit(12);
        let o = uncoupled(&bounds);
        let p = o.evaluate(&bounds.midpoint()).unwrap();
        assert_eq!(p, 10_000.0);
        assert_eq!(o.known_minimum(), Some(10_000.0));
    }

    #[test]
    fn single_coordinate_perturbation_is_separable() {
        let bounds = Bounds::unit(12);
        let o = uncoupled(&bounds);
        let mut coords = bounds.midpoint().coords().to_vec();
        let delta = 0.125;
        coords[3] += delta;
        let p = o.evaluate(&DesignPoint::new(coords)).unwrap();
        assert_relative_eq!(p, 10_000.0 + 50.0 * delta * delta, max_relative = 1e-15);
    }

    #[test]
    fn coupled_mode_matches_direct_formula_reevaluation() {
        let bounds = Bounds::unit(4);
        let cfg = QuadraticConfig {
            base_power: 500.0,
            weights: vec![2.0, 3.0, 4.0, 5.0],
            center: vec![0.25, 0.5, 0.75, 0.5],
            coupling: 1.5,
            amplitude: 0.1,
            frequencies: vec![1.0, 2.0, 3.0, 4.0],
            latency: Duration::ZERO,
        };
        let o = SyntheticOracle::new(bounds.clone(), cfg).unwrap();
        for x in sample_uniform(&bounds, 20, 123) {
            let got = o.evaluate(&x).unwrap();
            // Independent term-by-term re-evaluation.
            let c = [0.25, 0.5, 0.75, 0.5];
            let w = [2.0, 3.0, 4.0, 5.0];
            let om = [1.0, 2.0, 3.0, 4.0];
            let v = x.coords();
            let mut expect = 500.0;
            for j in 0..4 {
                expect += w[j] * (v[j] - c[j]) * (v[j] - c[j]);
            }
            for j in 0..3 {
                expect += 1.5 * (v[j] - c[j]) * (v[j + 1] - c[j + 1]);
            }
            for j in 0..4 {
                expect += 0.1 * (om[j] * v[j]).sin();
            }
            assert_relative_eq!(got, expect, max_relative = 1e-14);
        }
        assert_eq!(o.known_minimum(), None);
    }

    #[test]
    fn evaluation_is_bit_identical_across_calls() {
        let bounds = Bounds::unit(12);
        let o = SyntheticOracle::quadratic(bounds.clone());
        let x = &sample_uniform(&bounds, 1, 9)[0];
        let a = o.evaluate(x).unwrap();
        let b = o.evaluate(x).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn out_of_bounds_is_rejected_and_not_counted() {
        let bounds = Bounds::unit(2);
        let o = SyntheticOracle::quadratic(bounds);
        let err = o.evaluate(&DesignPoint::new(vec![0.5, 1.5])).unwrap_err();
        assert!(matches!(err, OracleError::OutOfBounds { dim: 1, .. }));
        assert_eq!(o.stats().call_count, 0);
    }

    #[test]
    fn call_count_is_exact_under_concurrency() {
        let bounds = Bounds::unit(3);
        let o = SyntheticOracle::quadratic(bounds.clone());
        let x = bounds.midpoint();
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| {
                    for _ in 0..250 {
                        o.evaluate(&x).unwrap();
                    }
                });
            }
        });
        assert_eq!(o.stats().call_count, 1000);
    }

    #[test]
    fn config_length_mismatch_rejected() {
        let bounds = Bounds::unit(3);
        let cfg = QuadraticConfig { weights: vec![1.0; 2], ..QuadraticConfig::defaults(&bounds) };
        assert!(matches!(
            SyntheticOracle::new(bounds, cfg),
            Err(OracleError::InvalidConfig(_))
        ));
    }
}
