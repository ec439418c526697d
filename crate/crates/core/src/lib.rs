//! Bregman and metric projections onto subspaces of finite-dimensional
//! `ℓ_q` spaces, alternating projection methods, and regularity estimates.

pub mod alternating;
pub mod error;
pub mod projection;
pub mod regularity;
pub mod space;
pub mod subspace;

pub use alternating::{
    alternate_bregman, alternate_residual_cyclic, alternate_residual_metric, check_bregman_monotone,
    check_bregman_monotone_at, estimate_linear_rate, estimate_linear_rate_from, Engine, IterationTrace, LimitKind,
    RateEstimate, StopReason, StopRule,
};
pub use error::{Error, Result};
pub use projection::{
    bregman_distance_to, bregman_project, brute_force_project_oracle, metric_project_direct,
    metric_project_via_duality, metric_residual_via_duality, OracleGrid, OracleMode, ProjectionResult, SolverOptions,
};
pub use regularity::{
    dual_condition_gap, dual_kappa_at, dual_regularity_check, estimate_kappa, metric_regularity_ratio,
    regularity_ratio, sqne_gap, RegularityReport, Sampler,
};
pub use space::{
    bregman_distance, dual_norm, duality_map, duality_map_inverse, gauge, norm, three_point_gap, DualVector,
    PrimalVector, SpaceConfig,
};
pub use subspace::{annihilator, contains, intersect, sum, sum_all, Subspace};
