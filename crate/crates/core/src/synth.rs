//! Synthetic joint distributions over (word, context-bit, label-bit) with
//! known structure, plus brute-force oracles that cross-check the analytic
//! bounds by blunt enumeration.
//!
//! All randomness is drawn from ChaCha8 seeded explicitly, so every
//! generated distribution and every oracle run is reproducible from its
//! seed on any platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grouping::grouped_posterior;
use crate::model::{AnalyticModel, FeatureColumn, InvalidModel, TaskColumn};
use crate::real::tol;
use crate::series::{weighted_corr_sq, StatError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error(transparent)]
    Stat(#[from] StatError),
    #[error(transparent)]
    Model(#[from] InvalidModel),
    #[error("joint is invalid: {0}")]
    InvalidJoint(String),
    #[error("word {index} carries zero probability mass")]
    ZeroMassWord { index: usize },
    #[error(
        "sampled correlation {found} exceeds the bound {bound} at trial {trial} (seed {seed})"
    )]
    BoundViolated {
        trial: usize,
        seed: u64,
        found: f64,
        bound: f64,
    },
    #[error("grouped posterior misses its own bound by {gap} (seed {seed})")]
    OptimumNotAttained { gap: f64, seed: u64 },
    #[error("exhaustive search handles at most {max} features, got {got}")]
    TooManyFeatures { max: usize, got: usize },
}

/// A joint distribution P(X, C, Y) over `m` words and two binary variables.
///
/// The structured form factorizes as P(Y) P(X|Y) P(C|Y) — context and word
/// are conditionally independent given the label by construction. The table
/// form is arbitrary: one row of four cells per word, ordered
/// `[P(x,C=0,Y=0), P(x,C=0,Y=1), P(x,C=1,Y=0), P(x,C=1,Y=1)]`.
/// Arrays indexed by a label value put y = 0 first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SyntheticJoint {
    Structured {
        p_y1: f64,
        /// `[P(C=1|Y=0), P(C=1|Y=1)]`.
        p_c1_given_y: [f64; 2],
        /// `[P(X|Y=0), P(X|Y=1)]`, each a distribution over words.
        p_x_given_y: [Vec<f64>; 2],
    },
    Table {
        table: Vec<[f64; 4]>,
    },
}

/// Joint marginals of the two binary variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointMarginals {
    pub p_y1: f64,
    pub p_c1: f64,
    pub p_c1_y1: f64,
}

impl SyntheticJoint {
    pub fn word_count(&self) -> usize {
        match self {
            SyntheticJoint::Structured { p_x_given_y, .. } => p_x_given_y[0].len(),
            SyntheticJoint::Table { table } => table.len(),
        }
    }

    /// Check the distribution invariants: non-negative cells, unit total
    /// mass within `tol::BOUND_SLACK`, and (structured form) conditional
    /// distributions that are themselves normalized.
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidJoint(msg));
        match self {
            SyntheticJoint::Structured {
                p_y1,
                p_c1_given_y,
                p_x_given_y,
            } => {
                if !(0.0..=1.0).contains(p_y1) {
                    return bad(format!("p_y1 = {p_y1} is not a probability"));
                }
                if p_c1_given_y.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return bad("p_c1_given_y leaves [0, 1]".into());
                }
                if p_x_given_y[0].len() != p_x_given_y[1].len() || p_x_given_y[0].is_empty() {
                    return bad("p_x_given_y rows must be non-empty and equal length".into());
                }
                for (y, row) in p_x_given_y.iter().enumerate() {
                    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                        return bad(format!("P(X|Y={y}) has a negative or non-finite cell"));
                    }
                    let s: f64 = row.iter().sum();
                    if (s - 1.0).abs() > tol::BOUND_SLACK {
                        return bad(format!("P(X|Y={y}) sums to {s}, not 1"));
                    }
                }
            }
            SyntheticJoint::Table { table } => {
                if table.is_empty() {
                    return bad("table must have at least one word".into());
                }
                if table.iter().flatten().any(|p| !p.is_finite() || *p < 0.0) {
                    return bad("table has a negative or non-finite cell".into());
                }
                let total: f64 = table.iter().flatten().sum();
                if (total - 1.0).abs() > tol::BOUND_SLACK {
                    return bad(format!("table mass is {total}, not 1"));
                }
            }
        }
        Ok(())
    }

    /// Lower to the per-word cell table (validating first).
    pub fn to_table(&self) -> Result<Vec<[f64; 4]>, SynthError> {
        self.validate()?;
        match self {
            SyntheticJoint::Table { table } => Ok(table.clone()),
            SyntheticJoint::Structured {
                p_y1,
                p_c1_given_y,
                p_x_given_y,
            } => {
                let p_y = [1.0 - p_y1, *p_y1];
                Ok((0..self.word_count())
                    .map(|i| {
                        let mut row = [0.0; 4];
                        for y in 0..2 {
                            let p_xy = p_x_given_y[y][i] * p_y[y];
                            row[y] = p_xy * (1.0 - p_c1_given_y[y]); // c = 0
                            row[2 + y] = p_xy * p_c1_given_y[y]; // c = 1
                        }
                        row
                    })
                    .collect())
            }
        }
    }

    /// Marginals P(Y=1), P(C=1), P(C=1, Y=1).
    pub fn marginals(&self) -> Result<JointMarginals, SynthError> {
        let table = self.to_table()?;
        let sum = |pick: fn(&[f64; 4]) -> f64| table.iter().map(pick).sum::<f64>();
        Ok(JointMarginals {
            p_y1: sum(|r| r[1] + r[3]),
            p_c1: sum(|r| r[2] + r[3]),
            p_c1_y1: sum(|r| r[3]),
        })
    }

    /// Derive the analytic model: word weights P(X), the context profile
    /// P(C=1|X) as the single feature `c`, and the label posterior P(Y=1|X)
    /// as the single task `y`.
    pub fn to_analytic(&self) -> Result<AnalyticModel<f64>, SynthError> {
        let table = self.to_table()?;
        let mass: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
        if let Some(index) = mass.iter().position(|&m| m <= 0.0) {
            return Err(SynthError::ZeroMassWord { index });
        }
        let total: f64 = mass.iter().sum();
        let weights: Vec<f64> = mass.iter().map(|m| m / total).collect();
        let profile: Vec<f64> = table
            .iter()
            .zip(&mass)
            .map(|(r, m)| (r[2] + r[3]) / m)
            .collect();
        let posterior: Vec<f64> = table
            .iter()
            .zip(&mass)
            .map(|(r, m)| (r[1] + r[3]) / m)
            .collect();
        Ok(AnalyticModel::new(
            weights,
            vec![FeatureColumn::from_values("c", profile)],
            vec![TaskColumn::new("y", posterior)],
        )?)
    }
}

fn random_simplex(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..m)
        .map(|_| -(rng.gen_range(1e-12..1.0f64)).ln())
        .collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Random conditionally independent joint: P(Y) P(X|Y) P(C|Y), with the two
/// context rates kept at least 0.05 apart so the context actually carries
/// label signal.
pub fn gen_cond_indep(words: usize, seed: u64) -> SyntheticJoint {
    assert!(words >= 2, "need at least two words");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p_y1 = rng.gen_range(0.1..0.9);
    let c0: f64 = rng.gen_range(0.05..0.95);
    let c1 = loop {
        let c: f64 = rng.gen_range(0.05..0.95);
        if (c - c0).abs() >= 0.05 {
            break c;
        }
    };
    let p_x_given_y = [
        random_simplex(&mut rng, words),
        random_simplex(&mut rng, words),
    ];
    SyntheticJoint::Structured {
        p_y1,
        p_c1_given_y: [c0, c1],
        p_x_given_y,
    }
}

/// Arbitrary random joint: a normalized table of positive cells. Carries no
/// special structure, so the perfect-correlation property of conditionally
/// independent joints almost never holds on these.
pub fn gen_random_joint(words: usize, seed: u64) -> SyntheticJoint {
    assert!(words >= 2, "need at least two words");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table: Vec<[f64; 4]> = (0..words)
        .map(|_| std::array::from_fn(|_| rng.gen_range(0.01..1.0)))
        .collect();
    let total: f64 = table.iter().flatten().sum();
    table.iter_mut().flatten().for_each(|c| *c /= total);
    SyntheticJoint::Table { table }
}

/// Result of a brute-force search over random score functions.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceReport {
    /// Var(grouped posterior) / Var(posterior), the claimed maximum.
    pub analytic_bound: f64,
    /// Best squared correlation any sampled `f` achieved.
    pub best_found: f64,
    /// Whether `f` = grouped posterior itself attains the bound within 1e-9.
    pub attained_by_posterior: bool,
    pub trials: usize,
    /// Trials whose sampled `f` was constant across groups.
    pub degenerate_trials: usize,
}

/// Sample `trials` random per-group score functions and verify none beats
/// the analytic bound, and that the grouped posterior itself attains it.
///
/// Every sampled squared correlation must stay within `tol::IDENTITY` of or
/// below the bound, and the grouped posterior must land within 1e-9 of it;
/// violations are returned as errors naming the seed.
pub fn brute_force_upper_bound(
    model: &AnalyticModel<f64>,
    subset: &[usize],
    task: usize,
    trials: usize,
    seed: u64,
) -> Result<BruteForceReport, SynthError> {
    let q = model.task_posterior(task);
    if q.variance() <= tol::VARIANCE_FLOOR {
        return Err(StatError::DegenerateVariance {
            series: "posterior",
        }
        .into());
    }
    let grouping = model.subset_grouping(subset);
    let gp = grouped_posterior(&grouping, &q)?;
    let bound = gp.variance() / q.variance();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let mut degenerate = 0usize;
    for trial in 0..trials {
        let per_group: Vec<f64> = (0..grouping.group_count())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let values: Vec<f64> = (0..q.len())
            .map(|i| per_group[grouping.group_of(i)])
            .collect();
        let fs = q.with_values(values)?;
        if fs.variance() <= tol::VARIANCE_FLOOR {
            degenerate += 1;
            continue;
        }
        let corr = weighted_corr_sq(&q, &fs)?;
        if corr > bound + tol::IDENTITY {
            return Err(SynthError::BoundViolated {
                trial,
                seed,
                found: corr,
                bound,
            });
        }
        if corr > best {
            best = corr;
        }
    }

    let attained_by_posterior = if gp.variance() > tol::VARIANCE_FLOOR {
        let at_gp = weighted_corr_sq(&q, &gp)?;
        let gap = (bound - at_gp).abs();
        if gap > 1e-9 {
            return Err(SynthError::OptimumNotAttained { gap, seed });
        }
        true
    } else {
        false
    };

    Ok(BruteForceReport {
        analytic_bound: bound,
        best_found: best,
        attained_by_posterior,
        trials,
        degenerate_trials: degenerate,
    })
}

/// Exhaustively search every non-empty feature subset (at most 12 features)
/// for the one with the largest grouping bound. Returns the first subset in
/// mask order achieving the maximum.
pub fn exhaustive_vector_bound(
    model: &AnalyticModel<f64>,
    task: usize,
) -> Result<(Vec<usize>, f64), SynthError> {
    const MAX: usize = 12;
    let n = model.feature_count();
    if n > MAX {
        return Err(SynthError::TooManyFeatures { max: MAX, got: n });
    }
    let q = model.task_posterior(task);
    if q.variance() <= tol::VARIANCE_FLOOR {
        return Err(StatError::DegenerateVariance {
            series: "posterior",
        }
        .into());
    }
    let var_q = q.variance();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for mask in 1u32..(1 << n) {
        let subset: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
        let gp = grouped_posterior(&model.subset_grouping(&subset), &q)?;
        let bound = gp.variance() / var_q;
        if best.as_ref().is_none_or(|(_, b)| bound > *b) {
            best = Some((subset, bound));
        }
    }
    Ok(best.expect("at least one subset"))
}

/// Uniform four-word fixture shared by tests and the verification suites:
/// binary labels (1, 1, 0, 0) and three profiles exercising a perfectly
/// separating, an uncorrelated, and a label-mixing feature.
pub fn four_word_fixture() -> AnalyticModel<f64> {
    AnalyticModel::new(
        vec![0.25; 4],
        vec![
            FeatureColumn::from_values("p1", vec![0.9, 0.7, 0.2, 0.2]),
            FeatureColumn::from_values("p2", vec![0.5, 0.1, 0.1, 0.5]),
            FeatureColumn::from_values("p3", vec![0.6, 0.2, 0.6, 0.2]),
        ],
        vec![TaskColumn::new("q", vec![1.0, 1.0, 0.0, 0.0])],
    )
    .expect("fixture is valid")
}

/// The structured joint used as a worked example everywhere: P(Y=1) = 0.5,
/// context rates 0.8 / 0.3, and skewed word distributions per class.
pub fn structured_fixture() -> SyntheticJoint {
    SyntheticJoint::Structured {
        p_y1: 0.5,
        p_c1_given_y: [0.3, 0.8],
        p_x_given_y: [vec![0.1, 0.1, 0.4, 0.4], vec![0.5, 0.3, 0.1, 0.1]],
    }
}
