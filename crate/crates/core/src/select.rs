//! Feature ranking and greedy subset selection on top of the scores and
//! bounds, plus evaluation of the predictor a chosen subset induces.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::grouping::grouped_posterior;
use crate::model::AnalyticModel;
use crate::real::{real, tol, Real};
use crate::series::{weighted_corr_sq, StatError};
use crate::theorems::{
    binary_labels, corollary1_score, raw_corr_score, upper_bound_single, vector_bound, TheoremError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectError {
    #[error(transparent)]
    Theorem(#[from] TheoremError),
    #[error("selection budget must be at least 1")]
    ZeroBudget,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown method `{0}`; expected raw-corr, closed-form, or upper-bound")]
pub struct UnknownMethod(pub String);

/// How a feature's usefulness for a task is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Squared correlation between posterior and profile, from the definition.
    RawCorr,
    /// The closed form for deterministic 0/1 labels.
    ClosedForm,
    /// The f-free grouping ceiling; ranks by attainable score, not any
    /// particular function's score.
    UpperBound,
}

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw-corr" => Ok(Method::RawCorr),
            "closed-form" => Ok(Method::ClosedForm),
            "upper-bound" => Ok(Method::UpperBound),
            other => Err(UnknownMethod(other.to_string())),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        out.write_str(match self {
            Method::RawCorr => "raw-corr",
            Method::ClosedForm => "closed-form",
            Method::UpperBound => "upper-bound",
        })
    }
}

/// One row of a ranking.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureScore<F> {
    pub feature: String,
    pub score: F,
    pub method: Method,
    /// True when the score is 0 because it is undefined for this feature
    /// (constant profile), not because the feature genuinely scores zero.
    pub degenerate: bool,
}

fn by_score_then_name<F: Real>(a: &FeatureScore<F>, b: &FeatureScore<F>) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.feature.cmp(&b.feature))
}

/// Score every feature for `task` and sort by score descending, name
/// ascending. Features whose score is undefined on the profile side come
/// back as zero rows with `degenerate` set; task-side problems (constant
/// posterior, non-0/1 labels for the closed form) fail the whole ranking.
pub fn rank_features<F: Real>(
    model: &AnalyticModel<F>,
    task: usize,
    method: Method,
) -> Result<Vec<FeatureScore<F>>, SelectError> {
    let q = model.task_posterior(task);
    if q.variance() <= real(tol::VARIANCE_FLOOR) {
        return Err(TheoremError::from(StatError::DegenerateVariance {
            series: "posterior",
        })
        .into());
    }
    let mut rows = Vec::with_capacity(model.feature_count());
    for k in 0..model.feature_count() {
        let scored = match method {
            Method::RawCorr => raw_corr_score(model, k, task),
            Method::ClosedForm => corollary1_score(model, k, task),
            Method::UpperBound => upper_bound_single(model, k, task),
        };
        let (score, degenerate) = match scored {
            Ok(s) => (s, false),
            Err(TheoremError::ConstantProfile)
            | Err(TheoremError::Stat(StatError::DegenerateVariance { series: "profile" })) => {
                (F::zero(), true)
            }
            Err(e) => return Err(e.into()),
        };
        rows.push(FeatureScore {
            feature: model.feature_name(k).to_string(),
            score,
            method,
            degenerate,
        });
    }
    rows.sort_by(by_score_then_name);
    Ok(rows)
}

/// Result of greedy forward selection: the chosen feature indices in pick
/// order and the joint bound reached after each pick.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection<F> {
    pub selected: Vec<usize>,
    pub trace: Vec<F>,
}

/// Greedily grow a feature subset, at each step adding the feature whose
/// joint grouping bound improves most (ties broken by feature name).
/// Stops at `budget` features or when no candidate improves the bound by
/// more than `tol::BOUND_SLACK`. The bound never decreases when a feature
/// is added, so the trace is non-decreasing.
pub fn greedy_select<F: Real>(
    model: &AnalyticModel<F>,
    task: usize,
    budget: usize,
) -> Result<Selection<F>, SelectError> {
    if budget == 0 {
        return Err(SelectError::ZeroBudget);
    }
    let q = model.task_posterior(task);
    if q.variance() <= real(tol::VARIANCE_FLOOR) {
        return Err(TheoremError::DegenerateTarget.into());
    }

    let mut selected: Vec<usize> = Vec::new();
    let mut trace: Vec<F> = Vec::new();
    let mut reached = F::zero();
    while selected.len() < budget {
        let mut best: Option<(usize, F)> = None;
        for k in 0..model.feature_count() {
            if selected.contains(&k) {
                continue;
            }
            let mut candidate = selected.clone();
            candidate.push(k);
            let bound = vector_bound(model, &candidate, task)?;
            let wins = match &best {
                None => true,
                Some((bk, bb)) => match bound.partial_cmp(bb).unwrap_or(Ordering::Equal) {
                    Ordering::Greater => true,
                    Ordering::Equal => model.feature_name(k) < model.feature_name(*bk),
                    Ordering::Less => false,
                },
            };
            if wins {
                best = Some((k, bound));
            }
        }
        let Some((k, bound)) = best else { break };
        if bound - reached < real(tol::BOUND_SLACK) {
            break;
        }
        selected.push(k);
        trace.push(bound);
        reached = bound;
    }
    Ok(Selection { selected, trace })
}

/// How well the optimal predictor built from a feature subset does on a
/// deterministic 0/1 task.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorReport<F> {
    /// Corr²(posterior, subset-grouped posterior); `None` when the grouped
    /// posterior is constant and the correlation is undefined.
    pub corr_sq: Option<F>,
    /// Weighted share of words the thresholded grouped posterior labels
    /// correctly.
    pub accuracy: F,
}

/// Evaluate the predictor a subset induces: group words by the subset's
/// key tuples, average the posterior inside each group, and predict the
/// label by thresholding that average at 1/2.
pub fn evaluate_predictor<F: Real>(
    model: &AnalyticModel<F>,
    subset: &[usize],
    task: usize,
) -> Result<PredictorReport<F>, SelectError> {
    if subset.is_empty() {
        return Err(TheoremError::EmptySubset.into());
    }
    let q = model.task_posterior(task);
    let labels = binary_labels(&q)?;
    let gp = grouped_posterior(&model.subset_grouping(subset), &q).map_err(TheoremError::from)?;
    let corr_sq = if gp.variance() > real(tol::VARIANCE_FLOOR) {
        Some(weighted_corr_sq(&q, &gp).map_err(TheoremError::from)?)
    } else {
        None
    };
    let half: F = real(0.5);
    let accuracy = gp
        .values()
        .iter()
        .zip(&labels)
        .zip(q.weights())
        .filter(|((&v, &label), _)| (v >= half) == label)
        .map(|(_, &w)| w)
        .sum();
    Ok(PredictorReport { corr_sq, accuracy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FeatureColumn, TaskColumn};
    use crate::synth::four_word_fixture;

    fn complementary_pair() -> AnalyticModel<f64> {
        AnalyticModel::new(
            vec![0.25; 4],
            vec![
                FeatureColumn::from_values("k1", vec![0.5, 0.5, 0.2, 0.2]),
                FeatureColumn::from_values("k2", vec![0.4, 0.1, 0.4, 0.4]),
            ],
            vec![TaskColumn::new("q", vec![0.9, 0.6, 0.3, 0.1])],
        )
        .unwrap()
    }

    #[test]
    fn method_parses_from_kebab_names() {
        assert_eq!("raw-corr".parse::<Method>().unwrap(), Method::RawCorr);
        assert_eq!("closed-form".parse::<Method>().unwrap(), Method::ClosedForm);
        assert_eq!("upper-bound".parse::<Method>().unwrap(), Method::UpperBound);
        assert_eq!(
            "pmi".parse::<Method>().unwrap_err(),
            UnknownMethod("pmi".to_string())
        );
        for m in [Method::RawCorr, Method::ClosedForm, Method::UpperBound] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
    }

    #[test]
    fn raw_ranking_puts_the_separating_feature_first() {
        let rows = rank_features(&four_word_fixture(), 0, Method::RawCorr).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].feature, "p1");
        assert!((rows[0].score - 18.0 / 19.0).abs() < 1e-12);
        assert!(!rows[0].degenerate);
        assert!(rows[1].score.abs() < 1e-12);
        assert!(rows[2].score.abs() < 1e-12);
    }

    #[test]
    fn upper_bound_ranking_scores_the_grouping_ceiling() {
        let rows = rank_features(&four_word_fixture(), 0, Method::UpperBound).unwrap();
        assert_eq!(
            rows.iter()
                .map(|r| (r.feature.as_str(), r.score))
                .collect::<Vec<_>>(),
            vec![("p1", 1.0), ("p2", 0.0), ("p3", 0.0)]
        );
        assert!(rows
            .iter()
            .all(|r| !r.degenerate && r.method == Method::UpperBound));
    }

    #[test]
    fn exact_ties_break_by_feature_name() {
        let m: AnalyticModel<f64> = AnalyticModel::new(
            vec![0.25; 4],
            vec![
                FeatureColumn::from_values("zeta", vec![0.5, 0.1, 0.1, 0.5]),
                FeatureColumn::from_values("alpha", vec![0.5, 0.1, 0.1, 0.5]),
            ],
            vec![TaskColumn::new("q", vec![1.0, 1.0, 0.0, 0.0])],
        )
        .unwrap();
        let rows = rank_features(&m, 0, Method::UpperBound).unwrap();
        assert_eq!(rows[0].feature, "alpha");
        assert_eq!(rows[1].feature, "zeta");
        assert_eq!(rows[0].score.to_bits(), rows[1].score.to_bits());
    }

    #[test]
    fn closed_form_ranking_marks_constant_profiles_degenerate() {
        let m = AnalyticModel::new(
            vec![0.25; 4],
            vec![
                FeatureColumn::from_values("flat", vec![0.4, 0.4, 0.4, 0.4]),
                FeatureColumn::from_values("good", vec![0.9, 0.7, 0.2, 0.2]),
            ],
            vec![TaskColumn::new("q", vec![1.0, 1.0, 0.0, 0.0])],
        )
        .unwrap();
        let rows = rank_features(&m, 0, Method::ClosedForm).unwrap();
        assert_eq!(rows[0].feature, "good");
        assert!(!rows[0].degenerate);
        assert_eq!(rows[1].feature, "flat");
        assert_eq!(rows[1].score, 0.0);
        assert!(rows[1].degenerate);
    }

    #[test]
    fn raw_ranking_marks_constant_profiles_degenerate_too() {
        let m = AnalyticModel::new(
            vec![0.5, 0.5],
            vec![FeatureColumn::from_values("flat", vec![0.4, 0.4])],
            vec![TaskColumn::new("q", vec![1.0, 0.0])],
        )
        .unwrap();
        let rows = rank_features(&m, 0, Method::RawCorr).unwrap();
        assert!(rows[0].degenerate);
        assert_eq!(rows[0].score, 0.0);
    }

    #[test]
    fn ranking_rejects_a_constant_posterior() {
        let m = AnalyticModel::new(
            vec![0.5, 0.5],
            vec![FeatureColumn::from_values("p", vec![0.9, 0.1])],
            vec![TaskColumn::new("q", vec![1.0, 1.0])],
        )
        .unwrap();
        for method in [Method::RawCorr, Method::UpperBound] {
            assert_eq!(
                rank_features(&m, 0, method).unwrap_err(),
                SelectError::Theorem(
                    StatError::DegenerateVariance {
                        series: "posterior"
                    }
                    .into()
                )
            );
        }
    }

    #[test]
    fn closed_form_ranking_propagates_fractional_labels() {
        let m = AnalyticModel::new(
            vec![0.5, 0.5],
            vec![FeatureColumn::from_values("p", vec![0.9, 0.1])],
            vec![TaskColumn::new("soft", vec![0.7, 0.2])],
        )
        .unwrap();
        assert_eq!(
            rank_features(&m, 0, Method::ClosedForm).unwrap_err(),
            SelectError::Theorem(TheoremError::NotDeterministicLabel)
        );
    }

    #[test]
    fn greedy_takes_the_separating_feature_and_stops() {
        let s = greedy_select(&four_word_fixture(), 0, 3).unwrap();
        assert_eq!(s.selected, vec![0]);
        assert_eq!(s.trace, vec![1.0]);
    }

    #[test]
    fn greedy_combines_complementary_features() {
        let s = greedy_select(&complementary_pair(), 0, 2).unwrap();
        assert_eq!(s.selected, vec![0, 1]);
        assert!(
            (s.trace[0] - 121.0 / 147.0).abs() < 1e-12,
            "trace0 {}",
            s.trace[0]
        );
        assert!(
            (s.trace[1] - 139.0 / 147.0).abs() < 1e-12,
            "trace1 {}",
            s.trace[1]
        );
        assert!(s.trace[0] <= s.trace[1]);
    }

    #[test]
    fn greedy_respects_the_budget() {
        let s = greedy_select(&complementary_pair(), 0, 1).unwrap();
        assert_eq!(s.selected, vec![0]);
        assert_eq!(s.trace.len(), 1);
    }

    #[test]
    fn greedy_rejects_a_zero_budget() {
        assert_eq!(
            greedy_select(&four_word_fixture(), 0, 0).unwrap_err(),
            SelectError::ZeroBudget
        );
    }

    #[test]
    fn greedy_selects_nothing_when_no_feature_helps() {
        let m = AnalyticModel::new(
            vec![0.25; 4],
            vec![FeatureColumn::from_values("mix", vec![0.5, 0.1, 0.1, 0.5])],
            vec![TaskColumn::new("q", vec![1.0, 1.0, 0.0, 0.0])],
        )
        .unwrap();
        let s = greedy_select(&m, 0, 2).unwrap();
        assert!(s.selected.is_empty());
        assert!(s.trace.is_empty());
    }

    #[test]
    fn greedy_rejects_a_constant_posterior() {
        let m = AnalyticModel::new(
            vec![0.5, 0.5],
            vec![FeatureColumn::from_values("p", vec![0.9, 0.1])],
            vec![TaskColumn::new("q", vec![0.5, 0.5])],
        )
        .unwrap();
        assert_eq!(
            greedy_select(&m, 0, 1).unwrap_err(),
            SelectError::Theorem(TheoremError::DegenerateTarget)
        );
    }

    #[test]
    fn predictor_from_the_separating_feature_is_perfect() {
        let r = evaluate_predictor(&four_word_fixture(), &[0], 0).unwrap();
        assert_eq!(r.corr_sq, Some(1.0));
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn predictor_from_a_mixing_feature_is_chance() {
        let r = evaluate_predictor(&four_word_fixture(), &[2], 0).unwrap();
        assert_eq!(r.corr_sq, None);
        assert!((r.accuracy - 0.5).abs() < 1e-12);
    }

    #[test]
    fn predictor_needs_deterministic_labels() {
        let m = AnalyticModel::new(
            vec![0.5, 0.5],
            vec![FeatureColumn::from_values("p", vec![0.9, 0.1])],
            vec![TaskColumn::new("soft", vec![0.7, 0.2])],
        )
        .unwrap();
        assert_eq!(
            evaluate_predictor(&m, &[0], 0).unwrap_err(),
            SelectError::Theorem(TheoremError::NotDeterministicLabel)
        );
    }
}
