//! Partitioning a support by exact key equality, and the group-averaged
//! series ("grouped posterior") induced by a partition.
//!
//! Keys are exact rationals so that equality — and therefore the partition —
//! never depends on floating-point noise. Empirical profiles use reduced
//! count fractions; real-valued profiles are quantized to 12 decimal digits.

use std::collections::HashMap;
use std::fmt;

use num_rational::Ratio;

use crate::real::{real, Real};
use crate::series::{StatError, WeightedSeries};

/// Denominator used when quantizing a real-valued profile to a key.
const QUANT_DEN: i64 = 1_000_000_000_000; // 12 decimal digits

/// Canonical grouping key: a tuple of exact rationals.
///
/// Single-feature keys hold one atom; vector keys concatenate the atoms of
/// their coordinates in a fixed order. Two words fall in the same group
/// exactly when their keys compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupKey(Vec<Ratio<i64>>);

impl GroupKey {
    /// Exact reduced fraction `positive / total`, e.g. a per-word
    /// feature-positive count over the word's occurrence count.
    pub fn from_count_ratio(positive: u64, total: u64) -> Self {
        assert!(total > 0, "count ratio needs a positive denominator");
        let n = i64::try_from(positive).expect("count fits in i64");
        let d = i64::try_from(total).expect("count fits in i64");
        GroupKey(vec![Ratio::new(n, d)])
    }

    /// Real value quantized to 12 decimal digits, then reduced.
    pub fn quantized<F: Real>(value: F) -> Self {
        let v = value.to_f64().expect("scalar converts to f64");
        assert!(v.is_finite(), "cannot key a non-finite value");
        let scaled = (v * QUANT_DEN as f64).round();
        assert!(scaled.abs() < 9.0e18, "value too large to quantize");
        GroupKey(vec![Ratio::new(scaled as i64, QUANT_DEN)])
    }

    /// Concatenate keys into one vector key; coordinate order is significant.
    pub fn join(parts: &[GroupKey]) -> Self {
        GroupKey(parts.iter().flat_map(|k| k.0.iter().copied()).collect())
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    /// The scalar this key denotes, for single-atom keys only.
    pub fn realize<F: Real>(&self) -> Option<F> {
        match self.0.as_slice() {
            [r] => {
                let n = F::from_i64(*r.numer())?;
                let d = F::from_i64(*r.denom())?;
                Some(n / d)
            }
            _ => None,
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, ")")
    }
}

/// A partition of word indices induced by key equality.
///
/// Groups are numbered in order of first appearance, so the partition is
/// deterministic in the input order; every group is non-empty by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    group_of_word: Vec<usize>,
    keys: Vec<GroupKey>,
    members: Vec<Vec<usize>>,
}

impl Grouping {
    /// Partition `keys` by equality.
    pub fn by_keys(keys: &[GroupKey]) -> Self {
        let mut index: HashMap<&GroupKey, usize> = HashMap::with_capacity(keys.len());
        let mut group_of_word = Vec::with_capacity(keys.len());
        let mut group_keys: Vec<GroupKey> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for (word, key) in keys.iter().enumerate() {
            let g = *index.entry(key).or_insert_with(|| {
                group_keys.push(key.clone());
                members.push(Vec::new());
                group_keys.len() - 1
            });
            group_of_word.push(g);
            members[g].push(word);
        }
        Grouping {
            group_of_word,
            keys: group_keys,
            members,
        }
    }

    pub fn word_count(&self) -> usize {
        self.group_of_word.len()
    }

    pub fn group_count(&self) -> usize {
        self.keys.len()
    }

    pub fn group_of(&self, word: usize) -> usize {
        self.group_of_word[word]
    }

    pub fn key(&self, group: usize) -> &GroupKey {
        &self.keys[group]
    }

    pub fn key_of_word(&self, word: usize) -> &GroupKey {
        &self.keys[self.group_of_word[word]]
    }

    /// Word indices in each group, ascending.
    pub fn members(&self, group: usize) -> &[usize] {
        &self.members[group]
    }

    /// Per-group probability mass and weighted mean of `series`.
    pub fn group_masses_and_means<F: Real>(
        &self,
        series: &WeightedSeries<F>,
    ) -> Result<(Vec<F>, Vec<F>), StatError> {
        if series.len() != self.word_count() {
            return Err(StatError::MismatchedSupport);
        }
        let w = series.weights();
        let v = series.values();
        let mut masses = Vec::with_capacity(self.group_count());
        let mut means = Vec::with_capacity(self.group_count());
        for m in &self.members {
            // Singleton groups keep the member's value bit-for-bit.
            if let [only] = m.as_slice() {
                masses.push(w[*only]);
                means.push(v[*only]);
                continue;
            }
            let mut mass = F::zero();
            let mut acc = F::zero();
            for &i in m {
                mass += w[i];
                acc += w[i] * v[i];
            }
            masses.push(mass);
            means.push(acc / mass);
        }
        Ok((masses, means))
    }
}

/// Average `target` within each group and broadcast the group mean back to
/// every member, keeping the original weights.
///
/// This is the conditional expectation of the target given the group, i.e.
/// the series `P(Y=1 | S)` when `target` is `P(Y=1 | X)` and the grouping is
/// `S = g(X)`.
pub fn grouped_posterior<F: Real>(
    grouping: &Grouping,
    target: &WeightedSeries<F>,
) -> Result<WeightedSeries<F>, StatError> {
    let (_, means) = grouping.group_masses_and_means(target)?;
    let values = (0..target.len())
        .map(|i| means[grouping.group_of(i)])
        .collect();
    Ok(WeightedSeries::from_parts_unchecked(
        values,
        target.weights().to_vec(),
    ))
}

/// Max absolute difference allowed when asserting the variance-contraction
/// property in tests; the inequality is exact in real arithmetic.
pub fn variance_contraction_slack<F: Real>() -> F {
    real(1e-12)
}
