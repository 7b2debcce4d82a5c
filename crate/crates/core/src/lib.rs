//! Surrogate-assisted design optimization with uncertainty-gated active learning.
//!
//! The crate models an expensive black-box "power" function over a bounded
//! design box and minimizes oracle queries three ways:
//!
//! * [`gp`] — exact Gaussian-process regression with the Matérn kernel family,
//!   Cholesky fitting, and cross-validated grid search ([`cv`]);
//! * [`offline`] — pool-based active learning that queries the most uncertain
//!   candidate, against a uniformly-random acquisition baseline;
//! * [`online`] — a streaming loop where every optimizer query is routed to
//!   either the surrogate or the expensive oracle depending on whether the
//!   predictive variance clears a running uncertainty threshold.
//!
//! [`bo`] provides the Expected-Improvement optimizer that drives both dataset
//! generation and the online loop, and [`oracle`] the synthetic stand-in for
//! the expensive simulator.

pub mod bo;
pub mod cv;
pub mod gp;
pub mod kernel;
pub mod metrics;
pub mod offline;
pub mod online;
pub mod oracle;
pub mod space;

pub use bo::{candidate_pool, expected_improvement, propose_next, run_bo, BoAborted, BoConfig, BoState, PoolShape};
pub use cv::{grid_search_cv, CvCell, GridSearchOutcome};
pub use gp::{GpError, GpModel, Prediction};
pub use kernel::{kernel_eval, KernelParams, MaternNu};
pub use metrics::{compute_metrics, Metrics, MetricsError};
pub use offline::{query_max_variance, query_random, run_offline_al, AlState, CurvePoint, OfflineConfig, Strategy};
pub use online::{
    run_online, OnlineAborted, OnlineConfig, OnlineResult, Phase, Source, StopRule, ThresholdState, TraceRow,
};
pub use oracle::{Oracle, OracleError, OracleStats, QuadraticConfig, SyntheticOracle};
pub use space::{sample_uniform, Bounds, BoundsError, DesignPoint, LabeledSample};

/// Errors surfaced by the optimization loops.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error(transparent)]
    Gp(#[from] gp::GpError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
