//! Expected-Improvement Bayesian optimization over the bounded design box.
//!
//! Acquisition is EI under the current GP, maximized by scoring a seeded
//! candidate pool (no gradient refinement). The pool mixes global uniform
//! draws with Gaussian perturbations of the incumbent at a ladder of
//! shrinking scales; purely uniform pools cannot close in on an optimum in
//! twelve dimensions within any realistic budget.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::gp::{GpModel, Prediction};
use crate::kernel::KernelParams;
use crate::oracle::Oracle;
use crate::space::{sample_uniform, Bounds, DesignPoint, LabeledSample};
use crate::RunError;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

fn norm_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / SQRT_2))
}

/// Expected improvement below `best_y` (minimization form):
/// `EI = (best_y − μ)·Φ(z) + σ·φ(z)` with `z = (best_y − μ)/σ`, and
/// `max(best_y − μ, 0)` in the exact-prediction limit `σ = 0`.
pub fn expected_improvement(pred: &Prediction, best_y: f64) -> f64 {
    let improvement = best_y - pred.mean;
    if pred.stddev <= 0.0 {
        return improvement.max(0.0);
    }
    let z = improvement / pred.stddev;
    (improvement * norm_cdf(z) + pred.stddev * norm_pdf(z)).max(0.0)
}

/// Optimizer state after a run: fitted surrogate, incumbent, and the full
/// evaluation history in query order (the history is the generated dataset).
#[derive(Debug, Clone)]
pub struct BoState {
    pub model: GpModel,
    pub best_x: DesignPoint,
    pub best_y: f64,
    pub history: Vec<LabeledSample>,
    pub rng_seed: u64,
}

/// Geometry of the candidate pool the acquisition is maximized over: a
/// uniform global share for exploration plus Gaussian perturbations of the
/// incumbent at a ladder of scales for refinement. The ladder's finest scale
/// bounds how closely the optimizer can home in.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolShape {
    /// Share of candidates drawn uniformly over the box.
    pub uniform_fraction: f64,
    /// Perturbation scales as fractions of each dimension's width, cycled
    /// over the non-uniform share.
    pub local_scales: Vec<f64>,
}

impl Default for PoolShape {
    fn default() -> Self {
        Self { uniform_fraction: 0.5, local_scales: vec![0.25, 0.05, 0.01] }
    }
}

#[derive(Debug, Clone)]
pub struct BoConfig {
    pub n_candidates: usize,
    pub pool: PoolShape,
    pub params: KernelParams,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self { n_candidates: 512, pool: PoolShape::default(), params: KernelParams::default() }
    }
}

/// A failed run with whatever trace was gathered before the failure.
#[derive(Debug, Error)]
#[error("optimization aborted after {} samples: {source}", partial.len())]
pub struct BoAborted {
    pub source: RunError,
    pub partial: Vec<LabeledSample>,
}

/// The deterministic candidate pool scored by [`propose_next`]: global
/// uniform draws plus Gaussian perturbations of the incumbent at the shape's
/// scale ladder, all clamped to the box.
pub fn candidate_pool(
    bounds: &Bounds,
    incumbent: Option<&DesignPoint>,
    n: usize,
    seed: u64,
    shape: &PoolShape,
) -> Vec<DesignPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = bounds.dim();
    let n_uniform = match incumbent {
        Some(_) if !shape.local_scales.is_empty() => {
            let f = shape.uniform_fraction.clamp(0.0, 1.0);
            // At least one uniform candidate keeps a global-exploration floor.
            ((n as f64 * f).round() as usize).clamp(1.min(n), n)
        }
        _ => n,
    };
    let mut pool = Vec::with_capacity(n);
    for _ in 0..n_uniform {
        pool.push(DesignPoint::new(
            (0..d).map(|j| rng.random_range(bounds.lows()[j]..bounds.highs()[j])).collect(),
        ));
    }
    if let Some(center) = incumbent {
        let n_local = n - n_uniform;
        for i in 0..n_local {
            let scale = shape.local_scales[i % shape.local_scales.len()];
            let coords = (0..d)
                .map(|j| {
                    let step: f64 = rng.sample(StandardNormal);
                    let v = center.coords()[j] + step * scale * bounds.width(j);
                    v.clamp(bounds.lows()[j], bounds.highs()[j])
                })
                .collect();
            pool.push(DesignPoint::new(coords));
        }
    }
    pool
}

/// Proposes the next design under the default pool shape: the EI-argmax over
/// a seeded candidate pool, ties broken by the lowest candidate index. A pure
/// function of its arguments.
pub fn propose_next(
    state: &BoState,
    bounds: &Bounds,
    n_candidates: usize,
    seed: u64,
) -> DesignPoint {
    propose_from(
        &state.model,
        &state.best_x,
        state.best_y,
        bounds,
        n_candidates,
        seed,
        &PoolShape::default(),
    )
}

pub(crate) fn propose_from(
    model: &GpModel,
    best_x: &DesignPoint,
    best_y: f64,
    bounds: &Bounds,
    n_candidates: usize,
    seed: u64,
    shape: &PoolShape,
) -> DesignPoint {
    assert!(n_candidates >= 1, "need at least one candidate");
    let pool = candidate_pool(bounds, Some(best_x), n_candidates, seed, shape);
    let preds = model.predict_many(&pool);
    let scores: Vec<f64> =
        preds.par_iter().map(|p| expected_improvement(p, best_y)).collect();
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    pool.into_iter().nth(best).expect("pool is nonempty")
}

/// One evaluation loop shared by dataset generation and the online gate, so
/// that both consume the seed stream identically.
pub(crate) struct ProposalEngine {
    rng: ChaCha8Rng,
    init_points: Vec<DesignPoint>,
    n_candidates: usize,
    shape: PoolShape,
}

impl ProposalEngine {
    pub fn new(
        bounds: &Bounds,
        n_init: usize,
        n_candidates: usize,
        shape: PoolShape,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init_seed = rng.next_u64();
        Self { init_points: sample_uniform(bounds, n_init, init_seed), rng, n_candidates, shape }
    }

    pub fn n_init(&self) -> usize {
        self.init_points.len()
    }

    /// Design for 1-based iteration `iter`. Initial iterations replay the
    /// uniform design; later ones draw a fresh proposal seed from the master
    /// stream regardless of how the previous answer was sourced.
    pub fn propose(
        &mut self,
        iter: usize,
        model: Option<&GpModel>,
        incumbent: Option<(&DesignPoint, f64)>,
        bounds: &Bounds,
    ) -> DesignPoint {
        if iter <= self.init_points.len() {
            return self.init_points[iter - 1].clone();
        }
        let seed = self.rng.next_u64();
        let model = model.expect("proposals past the initial design need a fitted model");
        let (bx, by) = incumbent.expect("incumbent exists after the initial design");
        propose_from(model, bx, by, bounds, self.n_candidates, seed, &self.shape)
    }
}

fn best_of(history: &[LabeledSample]) -> (&DesignPoint, f64) {
    let mut best = &history[0];
    for s in &history[1..] {
        if s.power < best.power {
            best = s;
        }
    }
    (&best.x, best.power)
}

/// Runs `n_init` uniform evaluations followed by `n_iters` propose → evaluate
/// → refit rounds against the oracle's bounds. Bit-reproducible for a fixed
/// seed; oracle failures abort with the partial trace preserved.
pub fn run_bo<O: Oracle>(
    oracle: &O,
    n_init: usize,
    n_iters: usize,
    config: &BoConfig,
    seed: u64,
) -> Result<BoState, BoAborted> {
    if n_init < 2 {
        return Err(BoAborted {
            source: RunError::InvalidConfig(format!("n_init must be >= 2, got {n_init}")),
            partial: Vec::new(),
        });
    }
    let bounds = oracle.bounds().clone();
    let mut engine =
        ProposalEngine::new(&bounds, n_init, config.n_candidates, config.pool.clone(), seed);
    let mut history: Vec<LabeledSample> = Vec::with_capacity(n_init + n_iters);

    let abort = |source: RunError, partial: &[LabeledSample]| BoAborted {
        source,
        partial: partial.to_vec(),
    };

    for iter in 1..=n_init {
        let x = engine.propose(iter, None, None, &bounds);
        let power = oracle.evaluate(&x).map_err(|e| abort(e.into(), &history))?;
        history.push(LabeledSample { x, power });
    }

    let fit = |history: &[LabeledSample]| {
        let xs: Vec<DesignPoint> = history.iter().map(|s| s.x.clone()).collect();
        let ys: Vec<f64> = history.iter().map(|s| s.power).collect();
        GpModel::fit(&xs, &ys, &config.params, &bounds)
    };

    let mut model = fit(&history).map_err(|e| abort(e.into(), &history))?;

    for iter in n_init + 1..=n_init + n_iters {
        let (bx, by) = best_of(&history);
        let bx = bx.clone();
        let x = engine.propose(iter, Some(&model), Some((&bx, by)), &bounds);
        let power = oracle.evaluate(&x).map_err(|e| abort(e.into(), &history))?;
        history.push(LabeledSample { x, power });
        model = fit(&history).map_err(|e| abort(e.into(), &history))?;
    }

    let (best_x, best_y) = best_of(&history);
    let best_x = best_x.clone();
    Ok(BoState { model, best_x, best_y, history, rng_seed: seed })
}
