//! Matching-market laboratory for school choice.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: markets, allocations, the rank convention and capacity balancing.
//! - [`io`]: the plain-text market file format.
//! - [`assignment`]: an exact minimum-cost assignment solver, generic over the
//!   cost scalar, plus an exhaustive oracle for small instances.
//! - [`mechanisms`]: deferred acceptance, top trading cycles, random serial
//!   dictatorship and the rank-minimizing mechanism.
//! - [`metrics`]: rank statistics, justified envy and Pareto checks.
//! - [`theory`]: closed-form reference values for uniform random markets,
//!   generic over the float type.
//!
//! The concrete aliases below fix the scalar choices used throughout the
//! simulation harness: integer rank costs and `f64` analytics.

pub mod assignment;
pub mod io;
pub mod mechanisms;
pub mod metrics;
pub mod model;
pub mod seed;
pub mod theory;

pub use mechanisms::{run_mechanism, MechanismError, MechanismKind};
pub use metrics::{
    is_pareto_optimal, justified_envy, rank_stats, threshold_shares, Pareto, RankStats,
};
pub use model::{Allocation, Market, ModelError, SchoolId, StudentId, Violation};
pub use seed::Seed;

/// Rank costs as used by the rank-minimizing mechanism.
pub type RankCostMatrix = assignment::CostMatrix<i64>;
/// Solver output for [`RankCostMatrix`].
pub type RankAssignment = assignment::AssignmentResult<i64>;
/// Analytic reference value in double precision.
pub type TheoryValue = theory::TheoryValue<f64>;
/// Reference asymptotes in double precision.
pub type ReferenceCurves = theory::ReferenceCurves<f64>;
