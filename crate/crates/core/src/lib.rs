//! Rare-event probability estimation for random geometric (Gilbert) graphs.
//!
//! Points of a homogeneous Poisson process on the cube `[0, lambda]^d` are
//! joined by an edge whenever they lie within unit Euclidean distance. This
//! crate estimates the probability that such a graph satisfies a hereditary
//! constraint (few edges, low maximum degree, small components, small cliques,
//! few triangles) when that probability is far too small for plain rejection
//! sampling.
//!
//! Three unbiased estimators are provided:
//!
//! - naive Monte Carlo: the indicator of the event;
//! - conditional Monte Carlo: the Poisson cdf evaluated at the largest prefix
//!   of a uniform point stream still satisfying the constraint;
//! - grid-based importance sampling: points are drawn only over the part of
//!   the window where insertion can still keep the constraint alive, with the
//!   accumulated likelihood ratio correcting the bias.
//!
//! All randomness flows through counter-based streams keyed by
//! `(base_seed, trial_index)`, so serial, parallel, and replayed runs produce
//! bit-identical estimates.

pub mod error;
pub mod estimators;
pub mod event;
pub mod graph;
pub mod grid;
pub mod oracles;
pub mod poisson;
pub mod rng;
pub mod window;

pub use error::{Error, Result};
pub use estimators::{
    estimate, relative_variance, run_cmc_trial, run_is_trial, run_nmc_trial, EstimateOptions,
    EstimateReport, EstimateStatus, EstimatorKind, TrialConfig, TrialOutcome, TrialRunner,
};
pub use event::{EventKind, EventSpec};
pub use graph::{GraphState, UpdateSummary};
pub use grid::{cell_of, cells_are_neighbors, GridBlocker};
pub use oracles::{
    brute_force_pn, brute_force_statistics, brute_in_event, hard_sphere_1d_exact,
    hard_sphere_1d_pn, pairwise_distance_exact_2d, probe_blocking_soundness,
    run_is_trial_with_unsound_blocking, BruteStatistics, OracleMethod, OracleResult,
    SoundnessReport,
};
pub use poisson::PoissonTable;
pub use rng::{RngStream, ORACLE_STREAM_BASE};
pub use window::{intensity_to_beta, unit_ball_volume, Window};
