//! Streaming surrogate gate around the optimizer/oracle loop.
//!
//! The loop has two phases. During pretraining every optimizer query goes to
//! the physics oracle and the surrogate is refit on each new sample; at the
//! end of the phase the uncertainty threshold is initialized to the mean
//! posterior variance of the pretraining inputs under the fitted model. From
//! then on each query is predicted first: if its variance clears the running
//! threshold the surrogate's answer is returned and no oracle call happens,
//! otherwise the oracle labels the point and the surrogate is refit. Both
//! branches feed the queried variance back into the running mean.
//!
//! Variances are compared in the model's standardized output space so the
//! threshold stays scale-free across refits. Reliability rests on the oracle:
//! only physics-confirmed powers can satisfy the stop target, and the
//! optimizer's incumbent tracks physics-confirmed samples only. Surrogate
//! answers are returned and traced but never anchor the search — a low-biased
//! surrogate claim would otherwise pin the incumbent at a power no real
//! design attains and stall the run (predict-then-minimize selects
//! underestimates).

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bo::{PoolShape, ProposalEngine};
use crate::gp::GpModel;
use crate::kernel::KernelParams;
use crate::oracle::Oracle;
use crate::space::{DesignPoint, LabeledSample};
use crate::RunError;

/// Running uncertainty threshold: the arithmetic mean of every predictive
/// variance observed so far.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThresholdState {
    sum: f64,
    count: u64,
}

impl ThresholdState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current threshold; `None` until the first variance is observed.
    pub fn ub(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Feeds one observed variance into the running mean.
    pub fn observe(&mut self, variance: f64) {
        assert!(variance >= 0.0, "variance must be nonnegative, got {variance}");
        self.sum += variance;
        self.count += 1;
    }
}

/// Functional form of [`ThresholdState::observe`].
pub fn update_threshold(ts: &ThresholdState, new_variance: f64) -> ThresholdState {
    let mut next = ts.clone();
    next.observe(new_variance);
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Pretrain,
    Online,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Pretrain => "pretrain",
            Phase::Online => "online",
        }
    }
}

/// Who answered the optimizer at one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Physics,
    Gp,
}

impl Source {
    pub fn label(self) -> &'static str {
        match self {
            Source::Physics => "physics",
            Source::Gp => "gp",
        }
    }
}

/// One iteration of the online loop.
#[derive(Debug, Clone)]
pub struct TraceRow {
    /// 1-based iteration index.
    pub iter: usize,
    pub phase: Phase,
    pub source: Source,
    pub x: DesignPoint,
    /// Power returned to the optimizer (surrogate mean on GP rows).
    pub power: f64,
    /// Standardized predictive variance fed to the threshold. Pretraining
    /// rows carry the variance computed at threshold initialization; absent
    /// only when the run stopped before the threshold was initialized.
    pub variance: Option<f64>,
    /// Threshold at decision time; absent on pretraining rows.
    pub ub: Option<f64>,
    /// Cumulative physics calls including pretraining.
    pub physics_calls_cum: u64,
}

/// Termination rule on top of the iteration cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    None,
    /// Stop once a physics-confirmed power is at or below this value.
    TargetPower(f64),
    /// Stop at `minimum + fraction · (initial best − minimum)`, resolved from
    /// the oracle's known minimum after the initial design completes.
    GapFraction(f64),
}

#[derive(Debug, Clone)]
pub struct OnlineConfig {
    /// Iterations answered by physics before the gate activates (`N_PT`).
    pub n_pretrain: usize,
    /// Iteration cap (`N_tot`).
    pub n_total: usize,
    /// Uniform designs seeding the optimizer.
    pub n_init: usize,
    pub n_candidates: usize,
    pub pool: PoolShape,
    pub params: KernelParams,
    pub stop: StopRule,
    /// Fixes the gate threshold instead of the running mean; `0` disables the
    /// surrogate entirely and `+inf` disables the oracle after pretraining.
    pub ub_override: Option<f64>,
    pub seed: u64,
}

impl OnlineConfig {
    pub fn new(n_pretrain: usize, n_total: usize, seed: u64) -> Self {
        Self {
            n_pretrain,
            n_total,
            n_init: 20,
            n_candidates: 512,
            pool: PoolShape::default(),
            params: KernelParams::default(),
            stop: StopRule::None,
            ub_override: None,
            seed,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct OnlineResult {
    pub trace: Vec<TraceRow>,
    /// Physics calls made during pretraining.
    pub pretrain_calls: u64,
    /// Physics calls made after pretraining.
    pub physics_calls: u64,
    /// Queries answered by the surrogate.
    pub gp_answers: u64,
    /// Best physics-confirmed sample.
    pub best_physics: Option<LabeledSample>,
    /// Absolute stop target after resolution, when a stop rule was set.
    pub stop_target: Option<f64>,
    /// Iteration at which the target was confirmed, if it was.
    pub iters_to_target: Option<usize>,
    pub threshold: ThresholdState,
    /// Surrogate refits performed; equals the number of physics-sourced
    /// iterations.
    pub refit_count: u64,
    /// Final surrogate training-set size.
    pub train_size: usize,
    pub pretrain_wall: Duration,
    pub total_wall: Duration,
}

#[derive(Debug, Error)]
#[error("online run aborted at iteration {}: {source}", partial.trace.len())]
pub struct OnlineAborted {
    pub source: RunError,
    pub partial: Box<OnlineResult>,
}

/// Runs the gated streaming loop against `oracle`.
pub fn run_online<O: Oracle>(oracle: &O, cfg: &OnlineConfig) -> Result<OnlineResult, OnlineAborted> {
    let fail = |source: RunError, partial: OnlineResult| OnlineAborted {
        source,
        partial: Box::new(partial),
    };

    if !(2 <= cfg.n_pretrain && cfg.n_pretrain < cfg.n_total) {
        return Err(fail(
            RunError::InvalidConfig(format!(
                "need 2 <= n_pretrain < n_total, got n_pretrain={} n_total={}",
                cfg.n_pretrain, cfg.n_total
            )),
            OnlineResult::default(),
        ));
    }
    if cfg.n_init < 2 {
        return Err(fail(
            RunError::InvalidConfig(format!("n_init must be >= 2, got {}", cfg.n_init)),
            OnlineResult::default(),
        ));
    }
    if matches!(cfg.stop, StopRule::GapFraction(_)) && oracle.known_minimum().is_none() {
        return Err(fail(
            RunError::InvalidConfig(
                "gap-fraction stop rule needs an oracle with a known minimum".into(),
            ),
            OnlineResult::default(),
        ));
    }

    let bounds = oracle.bounds().clone();
    let mut engine =
        ProposalEngine::new(&bounds, cfg.n_init, cfg.n_candidates, cfg.pool.clone(), cfg.seed);
    let started = Instant::now();

    let mut res = OnlineResult {
        stop_target: match cfg.stop {
            StopRule::TargetPower(t) => Some(t),
            _ => None,
        },
        ..OnlineResult::default()
    };
    let mut physics_data: Vec<LabeledSample> = Vec::new();
    let mut model: Option<GpModel> = None;
    let mut ub_initialized = false;

    let fit = |data: &[LabeledSample]| -> Result<GpModel, RunError> {
        let xs: Vec<DesignPoint> = data.iter().map(|s| s.x.clone()).collect();
        let ys: Vec<f64> = data.iter().map(|s| s.power).collect();
        GpModel::fit(&xs, &ys, &cfg.params, &bounds).map_err(RunError::from)
    };

    for iter in 1..=cfg.n_total {
        let incumbent = res.best_physics.as_ref().map(|s| (s.x.clone(), s.power));
        let x = engine.propose(
            iter,
            model.as_ref(),
            incumbent.as_ref().map(|(bx, by)| (bx, *by)),
            &bounds,
        );

        let pretraining = iter <= cfg.n_pretrain;
        if !pretraining && !ub_initialized {
            // Transition: initialize the threshold from the posterior
            // variances of the pretraining samples under the final
            // pretraining model, and backfill those variances into the trace.
            let m = model.as_ref().expect("pretraining fitted a model");
            let inputs: Vec<DesignPoint> = physics_data.iter().map(|s| s.x.clone()).collect();
            let preds = m.predict_many(&inputs);
            for (row, pred) in res.trace.iter_mut().zip(&preds) {
                row.variance = Some(pred.standardized_variance);
                res.threshold.observe(pred.standardized_variance);
            }
            ub_initialized = true;
        }

        if pretraining {
            let power = match oracle.evaluate(&x) {
                Ok(p) => p,
                Err(e) => return Err(fail(e.into(), finish(res, started, None, &physics_data))),
            };
            res.pretrain_calls += 1;
            let sample = LabeledSample { x: x.clone(), power };
            physics_data.push(sample.clone());
            model = match fit(&physics_data) {
                Ok(m) => Some(m),
                Err(e) => return Err(fail(e, finish(res, started, None, &physics_data))),
            };
            res.refit_count += 1;
            res.trace.push(TraceRow {
                iter,
                phase: Phase::Pretrain,
                source: Source::Physics,
                x,
                power,
                variance: None,
                ub: None,
                physics_calls_cum: res.pretrain_calls + res.physics_calls,
            });
            update_best(&mut res, &sample);
        } else {
            let m = model.as_ref().expect("model exists after pretraining");
            let pred = m.predict(&x);
            let variance = pred.standardized_variance;
            let ub_decision = cfg
                .ub_override
                .unwrap_or_else(|| res.threshold.ub().expect("threshold initialized"));

            if variance < ub_decision {
                let power = pred.mean;
                res.gp_answers += 1;
                res.threshold.observe(variance);
                res.trace.push(TraceRow {
                    iter,
                    phase: Phase::Online,
                    source: Source::Gp,
                    x,
                    power,
                    variance: Some(variance),
                    ub: Some(ub_decision),
                    physics_calls_cum: res.pretrain_calls + res.physics_calls,
                });
            } else {
                let power = match oracle.evaluate(&x) {
                    Ok(p) => p,
                    Err(e) => {
                        return Err(fail(e.into(), finish(res, started, None, &physics_data)))
                    }
                };
                res.physics_calls += 1;
                let sample = LabeledSample { x: x.clone(), power };
                physics_data.push(sample.clone());
                model = match fit(&physics_data) {
                    Ok(m) => Some(m),
                    Err(e) => return Err(fail(e, finish(res, started, None, &physics_data))),
                };
                res.refit_count += 1;
                res.threshold.observe(variance);
                res.trace.push(TraceRow {
                    iter,
                    phase: Phase::Online,
                    source: Source::Physics,
                    x,
                    power,
                    variance: Some(variance),
                    ub: Some(ub_decision),
                    physics_calls_cum: res.pretrain_calls + res.physics_calls,
                });
                update_best(&mut res, &sample);
            }
        }

        if iter == engine.n_init() {
            if let StopRule::GapFraction(frac) = cfg.stop {
                let minimum = oracle.known_minimum().expect("checked above");
                let init_best = res
                    .best_physics
                    .as_ref()
                    .map(|s| s.power)
                    .expect("initial design made physics calls");
                res.stop_target = Some(minimum + frac * (init_best - minimum));
            }
        }

        if iter == cfg.n_pretrain {
            res.pretrain_wall = started.elapsed();
        }

        if let (Some(target), Some(best)) = (res.stop_target, &res.best_physics) {
            if best.power <= target && res.iters_to_target.is_none() {
                res.iters_to_target = Some(iter);
                break;
            }
        }
    }

    Ok(finish(res, started, model, &physics_data))
}

fn update_best(res: &mut OnlineResult, sample: &LabeledSample) {
    let better = res.best_physics.as_ref().map_or(true, |b| sample.power < b.power);
    if better {
        res.best_physics = Some(sample.clone());
    }
}

fn finish(
    mut res: OnlineResult,
    started: Instant,
    model: Option<GpModel>,
    physics_data: &[LabeledSample],
) -> OnlineResult {
    res.total_wall = started.elapsed();
    res.train_size = model.map_or(physics_data.len(), |m| m.len());
    res
}
