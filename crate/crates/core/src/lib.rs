//! Co-occurrence analysis engine: weighted correlation statistics over
//! word/context models, exact-key grouping, correlation upper bounds, and
//! feature selection, with randomized self-verification suites.
//!
//! The statistics kernel is generic over the scalar type (`f32`/`f64`) via
//! [`Real`]; grouping keys are exact rationals regardless of scalar choice.
//! The `*64`/`*32` aliases below pin the common concrete instantiations.

pub mod estimate;
pub mod grouping;
pub mod model;
pub mod real;
pub mod score;
pub mod select;
pub mod series;
pub mod synth;
pub mod theorems;
pub mod verify;

pub use grouping::{grouped_posterior, GroupKey, Grouping};
pub use real::{tol, Real};
pub use score::ScoreFunction;
pub use series::{weighted_corr_sq, weighted_cov, StatError, WeightedSeries};

/// Default (double-precision) series type.
pub type Series64 = series::WeightedSeries<f64>;
/// Single-precision series type.
pub type Series32 = series::WeightedSeries<f32>;
/// Default (double-precision) analytic model.
pub type AnalyticModel64 = model::AnalyticModel<f64>;
/// Single-precision analytic model.
pub type AnalyticModel32 = model::AnalyticModel<f32>;
/// Default score-function instantiation.
pub type ScoreFunction64 = score::ScoreFunction<f64>;
