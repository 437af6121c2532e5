//! Temporal expressions, constraint classification, and symbolic temporal scoring.

mod parse;
mod scoring;
mod types;

pub use parse::{find_dates, parse_timepoints, DateMatch};
pub use scoring::{
    classify_constraint, temporal_score, ConstraintClass, ConstraintKind, InvalidSplineParams, SplineParams,
    AROUND_HALF_WIDTH, IN_ON_HALF_WIDTH, VIOLATION_CUTOFF,
};
pub use types::{
    to_fractional_year, ImplicitCondition, TemporalConstraint, TemporalError, TemporalRelation, TimePoint, MAX_YEAR,
    MIN_YEAR,
};
