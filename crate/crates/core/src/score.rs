//! Score functions applied to a grouped profile: the `f` whose correlation
//! with the label posterior is being measured and bounded.
//!
//! Analytic kinds act on the scalar a group key denotes; the tabulated kind
//! maps keys directly, which is the only shape that makes sense for vector
//! keys. Squared correlation is invariant under affine maps of `f`, so the
//! affine kind mostly exists to exercise that fact.

use std::collections::HashMap;
use std::fmt;

use crate::grouping::{GroupKey, Grouping};
use crate::real::Real;
use crate::series::{StatError, WeightedSeries};

#[derive(Debug, Clone, PartialEq)]
pub enum ScoreFunction<F> {
    /// `f(s) = s`.
    Identity,
    /// `f(s) = ln(max(s, floor) / marginal)`: pointwise mutual information
    /// of the feature against the word, with a positive floor guarding
    /// zero-probability groups. Requires `marginal > 0` and `floor > 0`.
    LogPmi { marginal: F, floor: F },
    /// `f(s) = scale * s + shift`.
    Affine { scale: F, shift: F },
    /// `f(s) = s^exponent`.
    Power { exponent: F },
    /// Explicit per-group values, keyed by the exact group key.
    Tabulated(HashMap<GroupKey, F>),
}

impl<F: Real> ScoreFunction<F> {
    /// Evaluate at a group key.
    pub fn apply(&self, key: &GroupKey) -> Result<F, StatError> {
        match self {
            ScoreFunction::Tabulated(map) => {
                map.get(key).copied().ok_or_else(|| StatError::MissingKey {
                    key: key.to_string(),
                })
            }
            _ => {
                let s: F = key.realize().ok_or(StatError::InvalidFunction(
                    "analytic kinds need a scalar key",
                ))?;
                self.apply_scalar(s)
            }
        }
    }

    fn apply_scalar(&self, s: F) -> Result<F, StatError> {
        match *self {
            ScoreFunction::Identity => Ok(s),
            ScoreFunction::LogPmi { marginal, floor } => {
                if marginal.is_nan() || marginal <= F::zero() {
                    return Err(StatError::InvalidFunction(
                        "log-pmi marginal must be positive",
                    ));
                }
                if floor.is_nan() || floor <= F::zero() {
                    return Err(StatError::InvalidFunction("log-pmi floor must be positive"));
                }
                Ok((s.max(floor) / marginal).ln())
            }
            ScoreFunction::Affine { scale, shift } => Ok(scale * s + shift),
            ScoreFunction::Power { exponent } => {
                if !exponent.is_finite() {
                    return Err(StatError::InvalidFunction("power exponent must be finite"));
                }
                Ok(s.powf(exponent))
            }
            ScoreFunction::Tabulated(_) => unreachable!("handled in apply"),
        }
    }

    /// Build the per-word series `f(S)` for a grouping, reusing `weights`.
    /// The result is constant within each group by construction.
    pub fn over_grouping(
        &self,
        grouping: &Grouping,
        weights: &[F],
    ) -> Result<WeightedSeries<F>, StatError> {
        if weights.len() != grouping.word_count() {
            return Err(StatError::MismatchedSupport);
        }
        let mut per_group = Vec::with_capacity(grouping.group_count());
        for g in 0..grouping.group_count() {
            per_group.push(self.apply(grouping.key(g))?);
        }
        let values = (0..grouping.word_count())
            .map(|i| per_group[grouping.group_of(i)])
            .collect();
        Ok(WeightedSeries::from_parts_unchecked(
            values,
            weights.to_vec(),
        ))
    }
}

impl<F: Real> fmt::Display for ScoreFunction<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreFunction::Identity => write!(f, "identity"),
            ScoreFunction::LogPmi { marginal, floor } => {
                write!(f, "log-pmi(marginal={marginal}, floor={floor})")
            }
            ScoreFunction::Affine { scale, shift } => write!(f, "affine({scale}, {shift})"),
            ScoreFunction::Power { exponent } => write!(f, "power({exponent})"),
            ScoreFunction::Tabulated(map) => write!(f, "tabulated({} keys)", map.len()),
        }
    }
}
