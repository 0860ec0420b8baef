//! The analytic view of a word/context model: a probability weight per word,
//! one profile column per context feature, one posterior column per task.
//!
//! Empirical count models and synthetic joints both lower into this form, so
//! every score, bound, and decomposition is written once against it. Feature
//! columns carry an exact grouping key per word alongside the float profile
//! value; partitions are always taken on the keys.

use thiserror::Error;

use crate::grouping::{GroupKey, Grouping};
use crate::real::Real;
use crate::series::WeightedSeries;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("invalid model: {0}")]
pub struct InvalidModel(pub String);

/// A context feature's conditional-probability profile `P(C=1 | X=x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn<F> {
    name: String,
    values: Vec<F>,
    keys: Vec<GroupKey>,
}

impl<F: Real> FeatureColumn<F> {
    /// Column with keys quantized from the values (synthetic/real-valued
    /// profiles).
    pub fn from_values(name: impl Into<String>, values: Vec<F>) -> Self {
        let keys = values.iter().map(|&v| GroupKey::quantized(v)).collect();
        FeatureColumn {
            name: name.into(),
            values,
            keys,
        }
    }

    /// Column with caller-supplied exact keys (empirical count fractions).
    pub fn with_exact_keys(
        name: impl Into<String>,
        values: Vec<F>,
        keys: Vec<GroupKey>,
    ) -> Result<Self, InvalidModel> {
        if values.len() != keys.len() {
            return Err(InvalidModel(
                "feature keys and values differ in length".into(),
            ));
        }
        Ok(FeatureColumn {
            name: name.into(),
            values,
            keys,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

/// A task's label posterior `P(Y=1 | X=x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskColumn<F> {
    name: String,
    values: Vec<F>,
}

impl<F: Real> TaskColumn<F> {
    pub fn new(name: impl Into<String>, values: Vec<F>) -> Self {
        TaskColumn {
            name: name.into(),
            values,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticModel<F> {
    weights: Vec<F>,
    features: Vec<FeatureColumn<F>>,
    tasks: Vec<TaskColumn<F>>,
}

impl<F: Real> AnalyticModel<F> {
    /// Build and validate: positive weights summing to one, every column the
    /// same length as the support, every profile and posterior in [0, 1].
    pub fn new(
        weights: Vec<F>,
        features: Vec<FeatureColumn<F>>,
        tasks: Vec<TaskColumn<F>>,
    ) -> Result<Self, InvalidModel> {
        // Series invariants (positivity, normalization) are shared with the
        // statistics kernel; reuse its checks.
        let m = weights.len();
        WeightedSeries::new(vec![F::zero(); m], weights.clone())
            .map_err(|e| InvalidModel(e.to_string()))?;
        let unit = |v: &F| *v >= F::zero() && *v <= F::one();
        for col in &features {
            if col.values.len() != m || col.keys.len() != m {
                return Err(InvalidModel(format!(
                    "feature {} has wrong length",
                    col.name
                )));
            }
            if !col.values.iter().all(unit) {
                return Err(InvalidModel(format!("feature {} leaves [0, 1]", col.name)));
            }
        }
        for col in &tasks {
            if col.values.len() != m {
                return Err(InvalidModel(format!("task {} has wrong length", col.name)));
            }
            if !col.values.iter().all(unit) {
                return Err(InvalidModel(format!("task {} leaves [0, 1]", col.name)));
            }
        }
        Ok(AnalyticModel {
            weights,
            features,
            tasks,
        })
    }

    pub fn word_count(&self) -> usize {
        self.weights.len()
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn feature_name(&self, k: usize) -> &str {
        self.features[k].name()
    }

    pub fn task_name(&self, t: usize) -> &str {
        self.tasks[t].name()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|c| c.name == name)
    }

    pub fn task_index(&self, name: &str) -> Option<usize> {
        self.tasks.iter().position(|c| c.name == name)
    }

    /// Profile series `P(C_k = 1 | X)` under the word weighting.
    pub fn feature_profile(&self, k: usize) -> WeightedSeries<F> {
        WeightedSeries::from_parts_unchecked(self.features[k].values.clone(), self.weights.clone())
    }

    /// Posterior series `P(Y_t = 1 | X)` under the word weighting.
    pub fn task_posterior(&self, t: usize) -> WeightedSeries<F> {
        WeightedSeries::from_parts_unchecked(self.tasks[t].values.clone(), self.weights.clone())
    }

    pub fn feature_key(&self, k: usize, word: usize) -> &GroupKey {
        &self.features[k].keys[word]
    }

    /// Partition of the vocabulary by feature `k`'s exact profile key.
    pub fn feature_grouping(&self, k: usize) -> Grouping {
        Grouping::by_keys(&self.features[k].keys)
    }

    /// Partition by the tuple of profile keys over a feature subset.
    ///
    /// The subset is canonicalized (sorted, deduplicated) first, so the
    /// partition depends only on the set of features, not the order or
    /// multiplicity they were given in.
    pub fn subset_grouping(&self, subset: &[usize]) -> Grouping {
        let mut canon: Vec<usize> = subset.to_vec();
        canon.sort_unstable();
        canon.dedup();
        let keys: Vec<GroupKey> = (0..self.word_count())
            .map(|w| {
                let parts: Vec<GroupKey> = canon
                    .iter()
                    .map(|&k| self.features[k].keys[w].clone())
                    .collect();
                GroupKey::join(&parts)
            })
            .collect();
        Grouping::by_keys(&keys)
    }
}
