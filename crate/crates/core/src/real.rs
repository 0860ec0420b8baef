//! Scalar abstraction: the statistics kernel works over any IEEE float type.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the weighted-statistics layer is generic over.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + AddAssign + Sum + Debug + Display + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Convert a tolerance or literal into the working scalar type.
pub(crate) fn real<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("finite f64 literal converts to any Real")
}

/// Absolute tolerances used throughout. Values are part of the public
/// contract: identity checks and degeneracy cutoffs compare against these.
pub mod tol {
    /// Probability weights must sum to one within this.
    pub const WEIGHT_SUM: f64 = 1e-9;
    /// Two series share a support only if weights agree elementwise within this.
    pub const WEIGHT_EQ: f64 = 1e-12;
    /// A variance at or below this is treated as degenerate.
    pub const VARIANCE_FLOOR: f64 = 1e-12;
    /// Exact algebraic identities must hold within this.
    pub const IDENTITY: f64 = 1e-10;
    /// Slack allowed when comparing a statistic against a proven bound.
    pub const BOUND_SLACK: f64 = 1e-12;
    /// Perfect-correlation and slope/intercept checks for structured joints.
    pub const STRUCTURED_JOINT: f64 = 1e-9;
    /// A label series is 0/1-valued if every entry is this close to 0 or 1.
    pub const LABEL_BINARY: f64 = 1e-9;
}
