//! Pool-based active learning on a fixed labeled corpus.
//!
//! A seeded holdout split is fixed up front; the learner starts from a small
//! labeled set and moves one pool sample per round into the training set,
//! picked either by maximum predictive variance or uniformly at random. After
//! every refit the holdout metrics are recorded for the predictions and for
//! their ±1σ bands, yielding a learning curve per strategy.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::gp::GpModel;
use crate::kernel::KernelParams;
use crate::metrics::{compute_metrics, Metrics};
use crate::space::{Bounds, DesignPoint, LabeledSample};
use crate::RunError;

/// Acquisition strategy for the next pool sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    MaxVariance,
    Random,
}

impl Strategy {
    pub fn label(self) -> &'static str {
        match self {
            Strategy::MaxVariance => "max_variance",
            Strategy::Random => "random",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max_variance" => Ok(Strategy::MaxVariance),
            "random" => Ok(Strategy::Random),
            other => Err(format!("unknown strategy '{other}' (max_variance | random)")),
        }
    }
}

/// Holdout metrics after one round, for predictions and their ±σ bands.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub n_labeled: usize,
    pub metrics: Metrics,
    pub metrics_plus: Metrics,
    pub metrics_minus: Metrics,
}

/// Final state of one offline run. Index vectors refer into the input corpus.
#[derive(Debug)]
pub struct AlState {
    pub labeled: Vec<usize>,
    pub pool: Vec<usize>,
    pub test: Vec<usize>,
    pub model: GpModel,
    pub curve: Vec<CurvePoint>,
    /// Set when the pool ran out before the requested number of rounds.
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct OfflineConfig {
    pub strategy: Strategy,
    pub init_size: usize,
    pub n_rounds: usize,
    pub test_fraction: f64,
    pub params: KernelParams,
    pub seed: u64,
}

/// Index of the pool candidate with the largest predictive variance; ties go
/// to the lowest index.
pub fn query_max_variance(model: &GpModel, pool: &[DesignPoint]) -> usize {
    assert!(!pool.is_empty(), "pool must be nonempty");
    let preds = model.predict_many(pool);
    let mut best = 0;
    for (i, p) in preds.iter().enumerate() {
        if p.standardized_variance > preds[best].standardized_variance {
            best = i;
        }
    }
    best
}

/// Uniform pool pick, a pure function of `seed`.
pub fn query_random(pool_len: usize, seed: u64) -> usize {
    assert!(pool_len > 0, "pool must be nonempty");
    ChaCha8Rng::seed_from_u64(seed).random_range(0..pool_len)
}

/// Runs one offline active-learning pass over `dataset` and returns the
/// learning curve (one entry for the initial fit plus one per completed
/// round).
pub fn run_offline_al(
    dataset: &[LabeledSample],
    bounds: &Bounds,
    cfg: &OfflineConfig,
) -> Result<AlState, RunError> {
    let n = dataset.len();
    if cfg.init_size < 1 {
        return Err(RunError::InvalidConfig("init_size must be >= 1".into()));
    }
    if !(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0) {
        return Err(RunError::InvalidConfig(format!(
            "test_fraction must lie in (0, 1), got {}",
            cfg.test_fraction
        )));
    }
    let test_count = ((cfg.test_fraction * n as f64).floor() as usize).max(1);
    if cfg.init_size + test_count > n {
        return Err(RunError::InvalidConfig(format!(
            "dataset of {n} cannot hold a {test_count}-sample holdout plus {} initial labels",
            cfg.init_size
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let test: Vec<usize> = order[..test_count].to_vec();
    let mut labeled: Vec<usize> = order[test_count..test_count + cfg.init_size].to_vec();
    let mut pool: Vec<usize> = order[test_count + cfg.init_size..].to_vec();

    let test_x: Vec<DesignPoint> = test.iter().map(|&i| dataset[i].x.clone()).collect();
    let test_y: Vec<f64> = test.iter().map(|&i| dataset[i].power).collect();

    let fit = |labeled: &[usize]| {
        let xs: Vec<DesignPoint> = labeled.iter().map(|&i| dataset[i].x.clone()).collect();
        let ys: Vec<f64> = labeled.iter().map(|&i| dataset[i].power).collect();
        GpModel::fit(&xs, &ys, &cfg.params, bounds)
    };

    let record = |model: &GpModel, n_labeled: usize| -> Result<CurvePoint, RunError> {
        let preds = model.predict_many(&test_x);
        let (y, (plus, minus)): (Vec<f64>, (Vec<f64>, Vec<f64>)) = preds
            .par_iter()
            .map(|p| (p.mean, (p.mean + p.stddev, p.mean - p.stddev)))
            .unzip();
        Ok(CurvePoint {
            n_labeled,
            metrics: compute_metrics(&test_y, &y).expect("nonempty holdout"),
            metrics_plus: compute_metrics(&test_y, &plus).expect("nonempty holdout"),
            metrics_minus: compute_metrics(&test_y, &minus).expect("nonempty holdout"),
        })
    };

    let mut model = fit(&labeled)?;
    let mut curve = vec![record(&model, labeled.len())?];
    let mut truncated = false;

    for _ in 0..cfg.n_rounds {
        if pool.is_empty() {
            truncated = true;
            break;
        }
        let pick = match cfg.strategy {
            Strategy::MaxVariance => {
                let pool_x: Vec<DesignPoint> =
                    pool.iter().map(|&i| dataset[i].x.clone()).collect();
                query_max_variance(&model, &pool_x)
            }
            Strategy::Random => query_random(pool.len(), rng.next_u64()),
        };
        labeled.push(pool.remove(pick));
        model = fit(&labeled)?;
        curve.push(record(&model, labeled.len())?);
        debug_assert!(labeled.iter().all(|i| !pool.contains(i)));
    }

    Ok(AlState { labeled, pool, test, model, curve, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{Oracle, QuadraticConfig, SyntheticOracle};
    use crate::space::sample_uniform;

    fn corpus(n: usize, seed: u64) -> (Vec<LabeledSample>, Bounds) {
        let bounds = Bounds::unit(4);
        let oracle = SyntheticOracle::new(
            bounds.clone(),
            QuadraticConfig { coupling: 5.0, ..QuadraticConfig::defaults(&bounds) },
        )
        .unwrap();
        let data = sample_uniform(&bounds, n, seed)
            .into_iter()
            .map(|x| {
                let power = oracle.evaluate(&x).unwrap();
                LabeledSample { x, power }
            })
            .collect();
        (data, bounds)
    }

    fn base_cfg(strategy: Strategy, seed: u64) -> OfflineConfig {
        OfflineConfig {
            strategy,
            init_size: 8,
            n_rounds: 20,
            test_fraction: 0.2,
            params: KernelParams::default(),
            seed,
        }
    }

    #[test]
    fn zero_rounds_yields_a_single_curve_entry() {
        let (data, bounds) = corpus(40, 1);
        let cfg = OfflineConfig { n_rounds: 0, ..base_cfg(Strategy::MaxVariance, 5) };
        let st = run_offline_al(&data, &bounds, &cfg).unwrap();
        assert_eq!(st.curve.len(), 1);
        assert_eq!(st.curve[0].n_labeled, 8);
        assert!(!st.truncated);
    }

    #[test]
    fn labeled_and_pool_stay_disjoint_and_grow_correctly() {
        let (data, bounds) = corpus(50, 2);
        let st = run_offline_al(&data, &bounds, &base_cfg(Strategy::MaxVariance, 9)).unwrap();
        assert_eq!(st.curve.len(), 21);
        assert_eq!(st.labeled.len(), 28);
        for i in &st.labeled {
            assert!(!st.pool.contains(i));
            assert!(!st.test.contains(i));
        }
        let universe = st.labeled.len() + st.pool.len() + st.test.len();
        assert_eq!(universe, 50);
    }

    #[test]
    fn pool_exhaustion_truncates_and_flags() {
        let (data, bounds) = corpus(20, 3);
        // holdout 4, init 8 -> pool 8 < 20 rounds.
        let st = run_offline_al(&data, &bounds, &base_cfg(Strategy::Random, 4)).unwrap();
        assert!(st.truncated);
        assert!(st.pool.is_empty());
        assert_eq!(st.curve.len(), 1 + 8);
    }

    #[test]
    fn query_max_variance_singleton_and_far_point() {
        let bounds = Bounds::unit(2);
        let xs = vec![DesignPoint::new(vec![0.1, 0.1])];
        let model = GpModel::fit(&xs, &[1.0], &KernelParams::default(), &bounds).unwrap();
        assert_eq!(query_max_variance(&model, &xs), 0);

        // A training point vs a far corner: the far point must win.
        let pool = vec![DesignPoint::new(vec![0.1, 0.1]), DesignPoint::new(vec![0.95, 0.95])];
        assert_eq!(query_max_variance(&model, &pool), 1);
    }

    #[test]
    fn query_max_variance_matches_exhaustive_rescoring() {
        let bounds = Bounds::unit(3);
        let xs = sample_uniform(&bounds, 12, 6);
        let ys: Vec<f64> = (0..12).map(|i| (i as f64).cos()).collect();
        let model = GpModel::fit(&xs, &ys, &KernelParams::default(), &bounds).unwrap();
        let pool = sample_uniform(&bounds, 40, 7);
        let picked = query_max_variance(&model, &pool);
        let max_var = pool
            .iter()
            .map(|p| model.predict(p).standardized_variance)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(model.predict(&pool[picked]).standardized_variance, max_var);
    }

    #[test]
    fn query_random_is_seeded_and_roughly_uniform() {
        assert_eq!(query_random(1, 42), 0);
        assert_eq!(query_random(17, 5), query_random(17, 5));

        let mut counts = [0usize; 4];
        for seed in 0..10_000u64 {
            counts[query_random(4, seed)] += 1;
        }
        for c in counts {
            let f = c as f64 / 10_000.0;
            assert!((0.22..=0.28).contains(&f), "frequency {f} outside [0.22, 0.28]");
        }
    }

    #[test]
    fn more_data_does_not_end_worse_on_most_seeds() {
        // Final-round RMSE <= first-round RMSE in >= 95% of 20 seeded runs.
        let mut ok = 0;
        for seed in 0..20u64 {
            let (data, bounds) = corpus(60, 100 + seed);
            let cfg = OfflineConfig {
                init_size: 6,
                n_rounds: 30,
                ..base_cfg(Strategy::MaxVariance, seed)
            };
            let st = run_offline_al(&data, &bounds, &cfg).unwrap();
            let first = st.curve.first().unwrap().metrics.rmse;
            let last = st.curve.last().unwrap().metrics.rmse;
            if last <= first {
                ok += 1;
            }
        }
        assert!(ok >= 19, "final RMSE beat first RMSE in only {ok}/20 runs");
    }

    #[test]
    fn max_variance_dominates_random_at_thirty_percent_budget() {
        // Paired seeds; medians compared at ~30% of the pool labeled.
        let mut al_rmse = Vec::new();
        let mut rand_rmse = Vec::new();
        for seed in 0..20u64 {
            let (data, bounds) = corpus(60, 300 + seed);
            let universe = 60 - 12; // after 20% holdout
            let target = (0.3 * universe as f64).ceil() as usize;
            for (strategy, out) in [
                (Strategy::MaxVariance, &mut al_rmse),
                (Strategy::Random, &mut rand_rmse),
            ] {
                let cfg = OfflineConfig {
                    init_size: 5,
                    n_rounds: target - 5,
                    ..base_cfg(strategy, seed)
                };
                let st = run_offline_al(&data, &bounds, &cfg).unwrap();
                out.push(st.curve.last().unwrap().metrics.rmse);
            }
        }
        let median = |v: &mut Vec<f64>| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[v.len() / 2]
        };
        let al = median(&mut al_rmse);
        let rnd = median(&mut rand_rmse);
        assert!(al <= rnd, "max-variance median {al} worse than random median {rnd}");
    }

    #[test]
    fn preconditions_rejected() {
        let (data, bounds) = corpus(10, 8);
        let bad = OfflineConfig { init_size: 0, ..base_cfg(Strategy::Random, 0) };
        assert!(run_offline_al(&data, &bounds, &bad).is_err());
        let bad = OfflineConfig { init_size: 20, ..base_cfg(Strategy::Random, 0) };
        assert!(run_offline_al(&data, &bounds, &bad).is_err());
        let bad = OfflineConfig { test_fraction: 1.5, ..base_cfg(Strategy::Random, 0) };
        assert!(run_offline_al(&data, &bounds, &bad).is_err());
    }
}
