//! Design-space primitives: the bounded box, design points, labeled samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Number of flow-coefficient dimensions in the default design space.
pub const DEFAULT_DIM: usize = 12;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("bounds must have at least one dimension")]
    Empty,
    #[error("lows has {lows} entries but highs has {highs}")]
    LengthMismatch { lows: usize, highs: usize },
    #[error("bound {index} inverted or degenerate: low {low} must be < high {high}")]
    Inverted { index: usize, low: f64, high: f64 },
    #[error("bound {index} is not finite")]
    NotFinite { index: usize },
}

/// Axis-aligned box constraining the design space. Each coordinate of a valid
/// design lies in `[lows[j], highs[j]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lows: Vec<f64>,
    highs: Vec<f64>,
}

impl Bounds {
    pub fn new(lows: Vec<f64>, highs: Vec<f64>) -> Result<Self, BoundsError> {
        if lows.is_empty() {
            return Err(BoundsError::Empty);
        }
        if lows.len() != highs.len() {
            return Err(BoundsError::LengthMismatch { lows: lows.len(), highs: highs.len() });
        }
        for (j, (&lo, &hi)) in lows.iter().zip(&highs).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(BoundsError::NotFinite { index: j });
            }
            if lo >= hi {
                return Err(BoundsError::Inverted { index: j, low: lo, high: hi });
            }
        }
        Ok(Self { lows, highs })
    }

    /// The unit hypercube `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self { lows: vec![0.0; dim], highs: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lows.len()
    }

    pub fn lows(&self) -> &[f64] {
        &self.lows
    }

    pub fn highs(&self) -> &[f64] {
        &self.highs
    }

    pub fn width(&self, j: usize) -> f64 {
        self.highs[j] - self.lows[j]
    }

    pub fn midpoint(&self) -> DesignPoint {
        DesignPoint::new(
            self.lows.iter().zip(&self.highs).map(|(lo, hi)| 0.5 * (lo + hi)).collect(),
        )
    }

    /// Whether `x` has matching dimension and every coordinate within the box
    /// (inclusive).
    pub fn contains(&self, x: &DesignPoint) -> bool {
        x.dim() == self.dim()
            && x.coords()
                .iter()
                .zip(self.lows.iter().zip(&self.highs))
                .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    /// Maps `x` onto the unit hypercube. Callers decide whether out-of-box
    /// inputs are acceptable; the map extrapolates linearly outside.
    pub fn normalize(&self, x: &DesignPoint) -> Vec<f64> {
        x.coords()
            .iter()
            .zip(self.lows.iter().zip(&self.highs))
            .map(|(&v, (&lo, &hi))| (v - lo) / (hi - lo))
            .collect()
    }
}

/// A point in the design space: one value per flow coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    coords: Vec<f64>,
}

impl DesignPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl From<Vec<f64>> for DesignPoint {
    fn from(coords: Vec<f64>) -> Self {
        Self::new(coords)
    }
}

/// A design point labeled with the power the oracle returned for it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: DesignPoint,
    pub power: f64,
}

/// Draws `n` points with every coordinate i.i.d. uniform within its bound.
/// The sequence is a pure function of `seed`.
pub fn sample_uniform(bounds: &Bounds, n: usize, seed: u64) -> Vec<DesignPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            DesignPoint::new(
                bounds
                    .lows()
                    .iter()
                    .zip(bounds.highs())
                    .map(|(&lo, &hi)| rng.random_range(lo..hi))
                    .collect(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_reject_inversion() {
        let err = Bounds::new(vec![0.0, 1.0], vec![1.0, 0.5]).unwrap_err();
        assert!(matches!(err, BoundsError::Inverted { index: 1, .. }));
    }

    #[test]
    fn bounds_reject_length_mismatch() {
        assert!(Bounds::new(vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(Bounds::new(vec![], vec![]).is_err());
    }

    #[test]
    fn normalize_maps_box_to_unit_cube() {
        let b = Bounds::new(vec![-2.0, 10.0], vec![2.0, 20.0]).unwrap();
        let z = b.normalize(&DesignPoint::new(vec![0.0, 15.0]));
        assert_eq!(z, vec![0.5, 0.5]);
    }

    #[test]
    fn sample_uniform_stays_inside_bounds() {
        let b = Bounds::unit(12);
        for p in sample_uniform(&b, 1000, 7) {
            assert!(b.contains(&p));
        }
    }

    #[test]
    fn sample_uniform_is_deterministic_per_seed() {
        let b = Bounds::unit(5);
        assert_eq!(sample_uniform(&b, 10, 3), sample_uniform(&b, 10, 3));
        assert_ne!(sample_uniform(&b, 10, 3), sample_uniform(&b, 10, 4));
    }

    #[test]
    fn sample_uniform_collapsed_box() {
        let eps = 1e-9;
        let lows = vec![0.3; 4];
        let highs = vec![0.3 + eps; 4];
        let b = Bounds::new(lows.clone(), highs).unwrap();
        let p = &sample_uniform(&b, 1, 11)[0];
        for (v, lo) in p.coords().iter().zip(&lows) {
            assert!((v - lo).abs() <= eps);
        }
    }
}
