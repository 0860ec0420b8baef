//! Finite weighted series over a common discrete support, plus the moment,
//! covariance, and squared-correlation kernels everything else builds on.
//!
//! A series pairs one value per support point with a probability weight per
//! point; all statistics are taken under that weighting.

use thiserror::Error;

use crate::real::{real, tol, Real};

/// Errors from the statistics kernel.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatError {
    /// A series constructor was handed data violating a type invariant.
    #[error("invalid weighted series: {0}")]
    InvalidSeries(&'static str),
    /// Two series do not live on the same weighted support.
    #[error("series supports differ (lengths or weights do not match)")]
    MismatchedSupport,
    /// A variance needed in a denominator is at or below the floor.
    #[error("degenerate variance in {series} series (at or below 1e-12)")]
    DegenerateVariance { series: &'static str },
    /// A tabulated score function has no entry for a group key.
    #[error("tabulated score function is missing key {key}")]
    MissingKey { key: String },
    /// A score function cannot be applied to the given key shape or parameters.
    #[error("score function not applicable: {0}")]
    InvalidFunction(&'static str),
}

/// Values on a discrete support together with strictly positive probability
/// weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSeries<F> {
    values: Vec<F>,
    weights: Vec<F>,
}

impl<F: Real> WeightedSeries<F> {
    /// Build a series, checking the type invariants: at least one point,
    /// matching lengths, every weight positive, weights summing to one
    /// within `tol::WEIGHT_SUM`.
    pub fn new(values: Vec<F>, weights: Vec<F>) -> Result<Self, StatError> {
        if values.is_empty() {
            return Err(StatError::InvalidSeries("support must be non-empty"));
        }
        if values.len() != weights.len() {
            return Err(StatError::InvalidSeries(
                "values and weights differ in length",
            ));
        }
        // NaN weights fail the finiteness check, so `<=` alone is safe here.
        if weights.iter().any(|w| *w <= F::zero() || !w.is_finite()) {
            return Err(StatError::InvalidSeries(
                "weights must be strictly positive",
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatError::InvalidSeries("values must be finite"));
        }
        let sum: F = weights.iter().copied().sum();
        if (sum - F::one()).abs() > real(tol::WEIGHT_SUM) {
            return Err(StatError::InvalidSeries("weights must sum to one"));
        }
        Ok(Self { values, weights })
    }

    /// Same-support constructor for internally derived series; invariants
    /// are the caller's responsibility.
    pub(crate) fn from_parts_unchecked(values: Vec<F>, weights: Vec<F>) -> Self {
        debug_assert_eq!(values.len(), weights.len());
        Self { values, weights }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    /// Weighted mean.
    pub fn mean(&self) -> F {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(&v, &w)| w * v)
            .sum()
    }

    /// Weighted variance about the weighted mean (population form).
    pub fn variance(&self) -> F {
        let m = self.mean();
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(&v, &w)| {
                let d = v - m;
                w * d * d
            })
            .sum()
    }

    /// Replace the values, keeping the weights. Lengths must match.
    pub fn with_values(&self, values: Vec<F>) -> Result<Self, StatError> {
        if values.len() != self.weights.len() {
            return Err(StatError::MismatchedSupport);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatError::InvalidSeries("values must be finite"));
        }
        Ok(Self {
            values,
            weights: self.weights.clone(),
        })
    }

    /// True when every value is within `tol` of 0 or 1.
    pub fn is_binary_within(&self, tol: F) -> bool {
        self.values
            .iter()
            .all(|&v| v.abs() <= tol || (v - F::one()).abs() <= tol)
    }

    /// True when both series live on the same support: equal lengths and
    /// weights equal elementwise within `tol::WEIGHT_EQ`.
    pub fn same_support(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(&a, &b)| (a - b).abs() <= real(tol::WEIGHT_EQ))
    }
}

/// Weighted covariance of two series on the same support.
pub fn weighted_cov<F: Real>(a: &WeightedSeries<F>, b: &WeightedSeries<F>) -> Result<F, StatError> {
    if !a.same_support(b) {
        return Err(StatError::MismatchedSupport);
    }
    let ma = a.mean();
    let mb = b.mean();
    Ok(a.values
        .iter()
        .zip(&b.values)
        .zip(&a.weights)
        .map(|((&va, &vb), &w)| w * (va - ma) * (vb - mb))
        .sum())
}

/// Squared weighted correlation `cov(a, b)^2 / (var(a) var(b))`.
///
/// Errors with `DegenerateVariance` if either variance is at or below
/// `tol::VARIANCE_FLOOR`; the payload names which side was constant.
pub fn weighted_corr_sq<F: Real>(
    a: &WeightedSeries<F>,
    b: &WeightedSeries<F>,
) -> Result<F, StatError> {
    let cov = weighted_cov(a, b)?;
    let floor: F = real(tol::VARIANCE_FLOOR);
    let va = a.variance();
    if va <= floor {
        return Err(StatError::DegenerateVariance { series: "left" });
    }
    let vb = b.variance();
    if vb <= floor {
        return Err(StatError::DegenerateVariance { series: "right" });
    }
    Ok(cov * cov / (va * vb))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(values: &[f64]) -> WeightedSeries<f64> {
        let n = values.len() as f64;
        WeightedSeries::new(values.to_vec(), vec![1.0 / n; values.len()]).unwrap()
    }

    #[test]
    fn rejects_empty_support() {
        let err = WeightedSeries::<f64>::new(vec![], vec![]).unwrap_err();
        assert!(matches!(err, StatError::InvalidSeries(_)));
    }

    #[test]
    fn rejects_nonpositive_weights() {
        let err = WeightedSeries::new(vec![1.0, 2.0], vec![1.0, 0.0]).unwrap_err();
        assert!(matches!(err, StatError::InvalidSeries(_)));
    }

    #[test]
    fn rejects_weights_not_summing_to_one() {
        let err = WeightedSeries::new(vec![1.0, 2.0], vec![0.6, 0.6]).unwrap_err();
        assert!(matches!(err, StatError::InvalidSeries(_)));
    }

    #[test]
    fn moments_of_uniform_binary_indicator() {
        let s = uniform(&[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(s.mean(), 0.5);
        assert_eq!(s.variance(), 0.25);
    }

    #[test]
    fn variance_of_constant_is_zero() {
        let s = uniform(&[0.7, 0.7, 0.7]);
        assert_eq!(s.variance(), 0.0);
    }

    #[test]
    fn cov_of_indicator_with_profile() {
        let q = uniform(&[1.0, 1.0, 0.0, 0.0]);
        let p = uniform(&[0.9, 0.7, 0.2, 0.2]);
        assert!((weighted_cov(&q, &p).unwrap() - 0.15).abs() < 1e-15);
    }

    #[test]
    fn cov_with_itself_equals_variance() {
        let s = uniform(&[0.9, 0.7, 0.2, 0.2]);
        assert_eq!(weighted_cov(&s, &s).unwrap(), s.variance());
    }

    #[test]
    fn cov_with_constant_is_zero() {
        let s = uniform(&[0.9, 0.7, 0.2, 0.2]);
        let c = uniform(&[0.3, 0.3, 0.3, 0.3]);
        assert_eq!(weighted_cov(&s, &c).unwrap(), 0.0);
    }

    #[test]
    fn cov_rejects_mismatched_weights() {
        let a = WeightedSeries::new(vec![1.0, 0.0], vec![0.5, 0.5]).unwrap();
        let b = WeightedSeries::new(vec![1.0, 0.0], vec![0.4, 0.6]).unwrap();
        assert_eq!(
            weighted_cov(&a, &b).unwrap_err(),
            StatError::MismatchedSupport
        );
    }

    #[test]
    fn corr_sq_with_itself_is_exactly_one() {
        let s = uniform(&[0.9, 0.7, 0.2, 0.2]);
        assert_eq!(weighted_corr_sq(&s, &s).unwrap(), 1.0);
    }

    #[test]
    fn corr_sq_of_indicator_with_profile() {
        let q = uniform(&[1.0, 1.0, 0.0, 0.0]);
        let p = uniform(&[0.9, 0.7, 0.2, 0.2]);
        let got = weighted_corr_sq(&q, &p).unwrap();
        assert!((got - 18.0 / 19.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn corr_sq_is_affine_invariant() {
        let q = uniform(&[1.0, 1.0, 0.0, 0.0]);
        let p = uniform(&[0.9, 0.7, 0.2, 0.2]);
        let affine = p
            .with_values(p.values().iter().map(|v| 2.0 * v + 3.0).collect())
            .unwrap();
        let base = weighted_corr_sq(&q, &p).unwrap();
        let moved = weighted_corr_sq(&q, &affine).unwrap();
        assert!((base - moved).abs() < 1e-12);
    }

    #[test]
    fn corr_sq_flags_degenerate_side() {
        let q = uniform(&[1.0, 1.0, 0.0, 0.0]);
        let c = uniform(&[0.5, 0.5, 0.5, 0.5]);
        assert_eq!(
            weighted_corr_sq(&c, &q).unwrap_err(),
            StatError::DegenerateVariance { series: "left" }
        );
        assert_eq!(
            weighted_corr_sq(&q, &c).unwrap_err(),
            StatError::DegenerateVariance { series: "right" }
        );
    }

    #[test]
    fn works_in_f32_too() {
        let s = WeightedSeries::<f32>::new(vec![1.0, 0.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(s.mean(), 0.5f32);
        assert_eq!(s.variance(), 0.25f32);
    }
}
