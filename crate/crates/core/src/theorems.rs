//! Executable forms of the correlation identities: the grouping lemma, the
//! perfect-correlation property of conditionally independent joints, the
//! fit/bound decomposition, the closed-form scores, and the vector bound
//! with its ratio identity.
//!
//! Every function here computes both sides of its identity from scratch so
//! that the randomized verification suites genuinely cross-check the
//! implementation instead of comparing a value with itself.

use serde::Serialize;
use thiserror::Error;

use crate::grouping::{grouped_posterior, GroupKey, Grouping};
use crate::model::AnalyticModel;
use crate::real::{real, tol, Real};
use crate::score::ScoreFunction;
use crate::series::{weighted_corr_sq, weighted_cov, StatError, WeightedSeries};
use crate::synth::{SynthError, SyntheticJoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoremError {
    #[error(transparent)]
    Stat(#[from] StatError),
    #[error(transparent)]
    Joint(#[from] SynthError),
    #[error("task labels are not 0/1 per word")]
    NotDeterministicLabel,
    #[error("task marginal is degenerate: every word carries the same label")]
    DegenerateTarget,
    #[error("feature profile is constant across the vocabulary")]
    ConstantProfile,
    #[error("context and label are uncorrelated: the closed-form slope is zero")]
    IndependentCY,
    #[error("feature subset must be non-empty")]
    EmptySubset,
    #[error("ratio check needs a member of the subset")]
    MemberNotInSubset,
}

fn degenerate(series: &'static str) -> TheoremError {
    StatError::DegenerateVariance { series }.into()
}

/// Both sides of one algebraic identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck<F> {
    pub lhs: F,
    pub rhs: F,
}

impl<F: Real> IdentityCheck<F> {
    pub fn residual(&self) -> F {
        (self.lhs - self.rhs).abs()
    }
}

/// The four grouping-lemma identities evaluated on one instance. Identities
/// (3) and (4) are skipped (`None`) when a variance they divide by is
/// degenerate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Report<F> {
    /// (1) Cov(target, f(S)) = Cov(grouped posterior, f(S)).
    pub cov_via_groups: IdentityCheck<F>,
    /// (2) Cov(target, grouped posterior) = Var(grouped posterior).
    pub cov_is_variance: IdentityCheck<F>,
    /// (3) Corr²(target, grouped posterior) = Var(grouped) / Var(target).
    pub corr_sq_is_ratio: Option<IdentityCheck<F>>,
    /// (4) Corr²(target, f(S)) = Corr²(grouped, f(S)) · Corr²(target, grouped).
    pub corr_sq_factorizes: Option<IdentityCheck<F>>,
}

impl<F: Real> Lemma1Report<F> {
    /// Largest residual among the identities that were evaluated.
    pub fn max_residual(&self) -> F {
        let mut r = self
            .cov_via_groups
            .residual()
            .max(self.cov_is_variance.residual());
        if let Some(c) = &self.corr_sq_is_ratio {
            r = r.max(c.residual());
        }
        if let Some(c) = &self.corr_sq_factorizes {
            r = r.max(c.residual());
        }
        r
    }

    pub fn holds_within(&self, tolerance: F) -> bool {
        self.max_residual() <= tolerance
    }
}

/// Evaluate the grouping-lemma identities for a target series, a partition
/// of its support, and a per-group score function.
pub fn lemma1_identities<F: Real>(
    target: &WeightedSeries<F>,
    grouping: &Grouping,
    f: &ScoreFunction<F>,
) -> Result<Lemma1Report<F>, TheoremError> {
    let gp = grouped_posterior(grouping, target)?;
    let fs = f.over_grouping(grouping, target.weights())?;
    let floor: F = real(tol::VARIANCE_FLOOR);

    let cov_via_groups = IdentityCheck {
        lhs: weighted_cov(target, &fs)?,
        rhs: weighted_cov(&gp, &fs)?,
    };
    let cov_is_variance = IdentityCheck {
        lhs: weighted_cov(target, &gp)?,
        rhs: gp.variance(),
    };

    let target_ok = target.variance() > floor;
    let gp_ok = gp.variance() > floor;
    let corr_sq_is_ratio = if target_ok && gp_ok {
        Some(IdentityCheck {
            lhs: weighted_corr_sq(target, &gp)?,
            rhs: gp.variance() / target.variance(),
        })
    } else {
        None
    };
    let corr_sq_factorizes = if target_ok && gp_ok && fs.variance() > floor {
        Some(IdentityCheck {
            lhs: weighted_corr_sq(target, &fs)?,
            rhs: weighted_corr_sq(&gp, &fs)? * weighted_corr_sq(target, &gp)?,
        })
    } else {
        None
    };

    Ok(Lemma1Report {
        cov_via_groups,
        cov_is_variance,
        corr_sq_is_ratio,
        corr_sq_factorizes,
    })
}

/// Squared correlation between a task posterior and a feature profile,
/// straight from the definition.
pub fn raw_corr_score<F: Real>(
    model: &AnalyticModel<F>,
    feature: usize,
    task: usize,
) -> Result<F, TheoremError> {
    let q = model.task_posterior(task);
    let p = model.feature_profile(feature);
    let floor: F = real(tol::VARIANCE_FLOOR);
    if q.variance() <= floor {
        return Err(degenerate("posterior"));
    }
    if p.variance() <= floor {
        return Err(degenerate("profile"));
    }
    Ok(weighted_corr_sq(&q, &p)?)
}

fn bound_for_grouping<F: Real>(
    q: &WeightedSeries<F>,
    grouping: &Grouping,
) -> Result<F, TheoremError> {
    if q.variance() <= real(tol::VARIANCE_FLOOR) {
        return Err(degenerate("posterior"));
    }
    let gp = grouped_posterior(grouping, q)?;
    Ok(gp.variance() / q.variance())
}

/// The f-free ceiling on any score of feature `k`: the variance the grouped
/// posterior retains, as a fraction of the posterior's variance. No score
/// function of the profile can correlate above this.
pub fn upper_bound_single<F: Real>(
    model: &AnalyticModel<F>,
    feature: usize,
    task: usize,
) -> Result<F, TheoremError> {
    bound_for_grouping(
        &model.task_posterior(task),
        &model.feature_grouping(feature),
    )
}

/// Same ceiling for a set of features grouped jointly by their key tuples.
pub fn vector_bound<F: Real>(
    model: &AnalyticModel<F>,
    subset: &[usize],
    task: usize,
) -> Result<F, TheoremError> {
    if subset.is_empty() {
        return Err(TheoremError::EmptySubset);
    }
    bound_for_grouping(&model.task_posterior(task), &model.subset_grouping(subset))
}

/// A score split into the part the function choice controls and the part
/// the grouping fixes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport<F> {
    pub feature: String,
    pub task: String,
    pub function: String,
    /// Corr²(posterior, f(profile)).
    pub total: F,
    /// Corr²(grouped posterior, f(profile)): how well `f` tracks the optimum.
    pub fit_part: F,
    /// Var(grouped posterior) / Var(posterior): independent of `f`.
    pub bound_part: F,
}

impl<F: Real> DecompositionReport<F> {
    /// Residual of the product identity `total = fit_part · bound_part`.
    pub fn identity_residual(&self) -> F {
        (self.total - self.fit_part * self.bound_part).abs()
    }
}

/// Split Corr²(posterior, f(profile)) into `fit_part · bound_part`.
///
/// `bound_part` is computed from the grouping alone, before `f` is ever
/// evaluated, so it is bit-identical across score functions for a fixed
/// feature. The product identity holds within `tol::IDENTITY` and `total`
/// never exceeds `bound_part` by more than `tol::BOUND_SLACK`.
pub fn decompose_theorem2<F: Real>(
    model: &AnalyticModel<F>,
    feature: usize,
    task: usize,
    f: &ScoreFunction<F>,
) -> Result<DecompositionReport<F>, TheoremError> {
    let q = model.task_posterior(task);
    let floor: F = real(tol::VARIANCE_FLOOR);
    if q.variance() <= floor {
        return Err(degenerate("posterior"));
    }
    let grouping = model.feature_grouping(feature);
    let gp = grouped_posterior(&grouping, &q)?;
    if gp.variance() <= floor {
        return Err(degenerate("grouped posterior"));
    }
    let bound_part = gp.variance() / q.variance();
    let fs = f.over_grouping(&grouping, q.weights())?;
    if fs.variance() <= floor {
        return Err(degenerate("transformed profile"));
    }
    Ok(DecompositionReport {
        feature: model.feature_name(feature).to_string(),
        task: model.task_name(task).to_string(),
        function: f.to_string(),
        total: weighted_corr_sq(&q, &fs)?,
        fit_part: weighted_corr_sq(&gp, &fs)?,
        bound_part,
    })
}

/// Deterministic 0/1 labels extracted from a posterior, or an error if the
/// task is not in the 0/1 regime or only one class is present.
pub(crate) fn binary_labels<F: Real>(q: &WeightedSeries<F>) -> Result<Vec<bool>, TheoremError> {
    if !q.is_binary_within(real(tol::LABEL_BINARY)) {
        return Err(TheoremError::NotDeterministicLabel);
    }
    let labels: Vec<bool> = q.values().iter().map(|&v| v > real(0.5)).collect();
    let positives = labels.iter().filter(|&&b| b).count();
    if positives == 0 || positives == labels.len() {
        return Err(TheoremError::DegenerateTarget);
    }
    Ok(labels)
}

/// Closed-form score for 0/1 labels:
/// `(P(C=1,Y=1) − P(C=1) P(Y=1))² / (P(Y=1) P(Y=0) Var(profile))`.
///
/// Equals the raw squared correlation in the deterministic-label regime. A
/// zero numerator (feature uncorrelated with the label) scores 0.0; only a
/// degenerate denominator is an error.
pub fn corollary1_score<F: Real>(
    model: &AnalyticModel<F>,
    feature: usize,
    task: usize,
) -> Result<F, TheoremError> {
    let q = model.task_posterior(task);
    binary_labels(&q)?;
    let p = model.feature_profile(feature);
    if p.variance() <= real(tol::VARIANCE_FLOOR) {
        return Err(TheoremError::ConstantProfile);
    }
    let p_y1 = q.mean();
    let p_c1 = p.mean();
    let p_c1_y1: F = q
        .values()
        .iter()
        .zip(p.values())
        .zip(q.weights())
        .map(|((&qi, &pi), &w)| w * qi * pi)
        .sum();
    let num = p_c1_y1 - p_c1 * p_y1;
    Ok(num * num / (p_y1 * (F::one() - p_y1) * p.variance()))
}

/// Which denominator the mutual-information-style form uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiDenominator {
    /// Σ P(x) (P(C=1|x)/P(C=1) − 1)² — the form that matches the closed
    /// form and the raw correlation exactly.
    Weighted,
    /// Σ (P(C=1|x)/P(C=1) − 1)², without the word weight. Kept only as a
    /// diagnostic; it disagrees with the other scores except by accident.
    Unweighted,
}

/// MI-style rewriting of the closed form, built from probability-ratio
/// deviations instead of covariances.
pub fn mi_style_score<F: Real>(
    model: &AnalyticModel<F>,
    feature: usize,
    task: usize,
) -> Result<F, TheoremError> {
    mi_style_score_with(model, feature, task, MiDenominator::Weighted)
}

pub fn mi_style_score_with<F: Real>(
    model: &AnalyticModel<F>,
    feature: usize,
    task: usize,
    denominator: MiDenominator,
) -> Result<F, TheoremError> {
    let q = model.task_posterior(task);
    binary_labels(&q)?;
    let p = model.feature_profile(feature);
    if p.variance() <= real(tol::VARIANCE_FLOOR) {
        return Err(TheoremError::ConstantProfile);
    }
    let p_y1 = q.mean();
    let p_c1 = p.mean();
    let p_c1_y1: F = q
        .values()
        .iter()
        .zip(p.values())
        .zip(q.weights())
        .map(|((&qi, &pi), &w)| w * qi * pi)
        .sum();
    let lift = p_c1_y1 / (p_c1 * p_y1) - F::one();
    let den: F = p
        .values()
        .iter()
        .zip(q.weights())
        .map(|(&pi, &w)| {
            let dev = pi / p_c1 - F::one();
            match denominator {
                MiDenominator::Weighted => w * dev * dev,
                MiDenominator::Unweighted => dev * dev,
            }
        })
        .sum();
    Ok(p_y1 / (F::one() - p_y1) * lift * lift / den)
}

/// The two factors of the label-mediation identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem3Report<F> {
    /// Corr²(P(Y=1|Y), P(C=1|Y)) over the two label values.
    pub label_side: F,
    /// Corr²(P(C=1|X), P(C=1|Y) ∘ Y(X)) over words.
    pub profile_side: F,
    /// Their product; equals the raw score in the 0/1-label regime.
    pub product: F,
}

/// Factor the raw score through the label: the two-point label-side factor
/// (always 1 for a binary label unless degenerate) times the profile-side
/// factor comparing the profile to its label-conditional average.
pub fn theorem3_factors<F: Real>(
    model: &AnalyticModel<F>,
    feature: usize,
    task: usize,
) -> Result<Theorem3Report<F>, TheoremError> {
    let q = model.task_posterior(task);
    let labels = binary_labels(&q)?;
    let p = model.feature_profile(feature);
    let floor: F = real(tol::VARIANCE_FLOOR);
    if p.variance() <= floor {
        return Err(degenerate("profile"));
    }

    // Group words by label; group means of the profile are P(C=1|Y=y).
    let keys: Vec<GroupKey> = labels
        .iter()
        .map(|&b| GroupKey::from_count_ratio(u64::from(b), 1))
        .collect();
    let by_label = Grouping::by_keys(&keys);
    let (masses, means) = by_label.group_masses_and_means(&p)?;

    // Two-point series over Y: P(Y=1|Y=y) is the identity indicator.
    let indicator: Vec<F> = (0..by_label.group_count())
        .map(|g| by_label.key(g).realize().expect("label keys are scalar"))
        .collect();
    let over_y = WeightedSeries::new(indicator, masses.clone()).map_err(TheoremError::Stat)?;
    let cond_profile = over_y.with_values(means).map_err(TheoremError::Stat)?;
    if cond_profile.variance() <= floor {
        return Err(degenerate("label-conditional profile"));
    }
    let label_side = weighted_corr_sq(&over_y, &cond_profile)?;

    let broadcast = grouped_posterior(&by_label, &p)?;
    let profile_side = weighted_corr_sq(&p, &broadcast)?;

    Ok(Theorem3Report {
        label_side,
        profile_side,
        product: label_side * profile_side,
    })
}

/// Both routes to the vector bound for one member feature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioCheck<F> {
    /// Var(grouped-by-subset posterior) / Var(posterior), computed directly.
    pub vector_bound: F,
    /// Corr²(posterior, single grouped) / Corr²(subset grouped, single
    /// grouped): the same quantity reached through the member feature.
    pub via_member: F,
}

impl<F: Real> RatioCheck<F> {
    pub fn residual(&self) -> F {
        (self.vector_bound - self.via_member).abs()
    }
}

/// Cross-check the vector bound against the ratio of correlations through a
/// single member feature's grouping.
pub fn theorem4_ratio_check<F: Real>(
    model: &AnalyticModel<F>,
    subset: &[usize],
    task: usize,
    member: usize,
) -> Result<RatioCheck<F>, TheoremError> {
    if subset.is_empty() {
        return Err(TheoremError::EmptySubset);
    }
    if !subset.contains(&member) {
        return Err(TheoremError::MemberNotInSubset);
    }
    let bound = vector_bound(model, subset, task)?;

    let q = model.task_posterior(task);
    let gp_member = grouped_posterior(&model.feature_grouping(member), &q)?;
    let gp_subset = grouped_posterior(&model.subset_grouping(subset), &q)?;
    let floor: F = real(tol::VARIANCE_FLOOR);
    if gp_member.variance() <= floor {
        return Err(degenerate("member grouped posterior"));
    }
    if gp_subset.variance() <= floor {
        return Err(degenerate("subset grouped posterior"));
    }
    let num = weighted_corr_sq(&q, &gp_member)?;
    let den = weighted_corr_sq(&gp_subset, &gp_member)?;
    Ok(RatioCheck {
        vector_bound: bound,
        via_member: num / den,
    })
}

/// Outcome of checking a joint for the perfect-correlation property of
/// conditional independence, including the proof's linear relation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Report {
    /// Corr²(P(Y=1|X), P(C=1|X)); 1.0 when C ⊥ X given Y.
    pub corr_sq: f64,
    /// Least-squares slope of the profile on the posterior.
    pub fitted_slope: f64,
    /// `(P(C=1,Y=1) − P(C=1) P(Y=1)) / (P(Y=1) P(Y=0))`.
    pub analytic_slope: f64,
    /// Least-squares intercept.
    pub fitted_intercept: f64,
    /// `P(C=1|Y=0)`.
    pub analytic_intercept: f64,
}

impl Theorem1Report {
    /// Worst deviation from the conditional-independence predictions.
    pub fn max_deviation(&self) -> f64 {
        (self.corr_sq - 1.0)
            .abs()
            .max((self.fitted_slope - self.analytic_slope).abs())
            .max((self.fitted_intercept - self.analytic_intercept).abs())
    }

    /// True when the joint behaves as a conditionally independent one.
    pub fn holds(&self) -> bool {
        self.max_deviation() <= tol::STRUCTURED_JOINT
    }
}

/// Verify the perfect-correlation property on a joint: derive the posterior
/// and profile, check Corr² against 1, and compare the least-squares line
/// relating them with the analytic slope and intercept.
pub fn theorem1_verify(joint: &SyntheticJoint) -> Result<Theorem1Report, TheoremError> {
    let marginals = joint.marginals().map_err(TheoremError::Joint)?;
    let model = joint.to_analytic().map_err(TheoremError::Joint)?;
    let q = model.task_posterior(0);
    let p = model.feature_profile(0);

    let p_y0 = 1.0 - marginals.p_y1;
    if marginals.p_y1 * p_y0 <= tol::VARIANCE_FLOOR {
        return Err(TheoremError::DegenerateTarget);
    }
    let leverage = marginals.p_c1_y1 - marginals.p_c1 * marginals.p_y1;
    if leverage.abs() <= tol::BOUND_SLACK {
        return Err(TheoremError::IndependentCY);
    }
    if q.variance() <= tol::VARIANCE_FLOOR {
        return Err(TheoremError::DegenerateTarget);
    }

    let analytic_slope = leverage / (marginals.p_y1 * p_y0);
    let analytic_intercept = (marginals.p_c1 - marginals.p_c1_y1) / p_y0;
    let fitted_slope = weighted_cov(&q, &p)? / q.variance();
    let fitted_intercept = p.mean() - fitted_slope * q.mean();
    let corr_sq = weighted_corr_sq(&q, &p)?;

    Ok(Theorem1Report {
        corr_sq,
        fitted_slope,
        analytic_slope,
        fitted_intercept,
        analytic_intercept,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::model::{AnalyticModel, FeatureColumn, TaskColumn};
    use crate::synth::{four_word_fixture, structured_fixture, SyntheticJoint};

    const EIGHTEEN_NINETEENTHS: f64 = 18.0 / 19.0;

    fn uniform(values: &[f64]) -> WeightedSeries<f64> {
        let n = values.len() as f64;
        WeightedSeries::new(values.to_vec(), vec![1.0 / n; values.len()]).unwrap()
    }

    #[test]
    fn raw_score_on_the_fixture() {
        let m = four_word_fixture();
        let got = raw_corr_score(&m, 0, 0).unwrap();
        assert!((got - EIGHTEEN_NINETEENTHS).abs() < 1e-12, "got {got}");
        assert!(raw_corr_score(&m, 2, 0).unwrap() < 1e-15); // p3 is uncorrelated
    }

    #[test]
    fn raw_score_rejects_constant_series() {
        let m = AnalyticModel::new(
            vec![0.5, 0.5],
            vec![FeatureColumn::from_values("flat", vec![0.4, 0.4])],
            vec![TaskColumn::new("q", vec![1.0, 0.0])],
        )
        .unwrap();
        assert_eq!(raw_corr_score(&m, 0, 0).unwrap_err(), degenerate("profile"));
    }

    #[test]
    fn upper_bound_on_the_fixture() {
        let m = four_word_fixture();
        assert_eq!(upper_bound_single(&m, 0, 0).unwrap(), 1.0); // p1 separates
        assert_eq!(upper_bound_single(&m, 2, 0).unwrap(), 0.0); // p3 mixes
        assert_eq!(upper_bound_single(&m, 1, 0).unwrap(), 0.0); // p2 mixes too
    }

    #[test]
    fn raw_score_never_exceeds_the_bound() {
        let m = four_word_fixture();
        for k in 0..3 {
            let raw = raw_corr_score(&m, k, 0).unwrap();
            let bound = upper_bound_single(&m, k, 0).unwrap();
            assert!(
                raw <= bound + tol::BOUND_SLACK,
                "feature {k}: {raw} > {bound}"
            );
        }
    }

    #[test]
    fn vector_bound_on_fixture_subsets() {
        let m = four_word_fixture();
        // (p3, p2) tuples are all distinct: grouping is the identity.
        assert_eq!(vector_bound(&m, &[2, 1], 0).unwrap(), 1.0);
        assert_eq!(
            vector_bound(&m, &[2, 2], 0).unwrap(),
            vector_bound(&m, &[2], 0).unwrap()
        );
        assert_eq!(
            vector_bound(&m, &[], 0).unwrap_err(),
            TheoremError::EmptySubset
        );
    }

    #[test]
    fn vector_bound_grows_with_the_subset() {
        let m = four_word_fixture();
        let single = vector_bound(&m, &[1], 0).unwrap();
        let pair = vector_bound(&m, &[1, 2], 0).unwrap();
        let all = vector_bound(&m, &[0, 1, 2], 0).unwrap();
        assert!(single <= pair + tol::BOUND_SLACK);
        assert!(pair <= all + tol::BOUND_SLACK);
    }

    #[test]
    fn lemma1_identities_on_the_fixture() {
        let m = four_word_fixture();
        let q = m.task_posterior(0);
        let g = m.feature_grouping(0);
        let f = ScoreFunction::Power { exponent: 2.0 };
        let report = lemma1_identities(&q, &g, &f).unwrap();
        assert!(
            report.holds_within(tol::IDENTITY),
            "residual {}",
            report.max_residual()
        );
        let ratio = report.corr_sq_is_ratio.unwrap();
        assert!((ratio.lhs - 1.0).abs() < 1e-12); // p1's grouping recovers q
    }

    #[test]
    fn lemma1_on_a_single_group_skips_the_degenerate_identities() {
        let q = uniform(&[1.0, 1.0, 0.0, 0.0]);
        let g = Grouping::by_keys(&vec![GroupKey::from_count_ratio(1, 2); 4]);
        let f = ScoreFunction::Identity;
        let report = lemma1_identities(&q, &g, &f).unwrap();
        assert_eq!(report.cov_via_groups.lhs, 0.0);
        assert_eq!(report.cov_via_groups.rhs, 0.0);
        assert!(report.corr_sq_is_ratio.is_none());
        assert!(report.corr_sq_factorizes.is_none());
    }

    #[test]
    fn lemma1_propagates_missing_tabulated_keys() {
        let q = uniform(&[1.0, 0.0]);
        let keys = [
            GroupKey::from_count_ratio(1, 2),
            GroupKey::from_count_ratio(1, 3),
        ];
        let g = Grouping::by_keys(&keys);
        let f = ScoreFunction::Tabulated(HashMap::from([(keys[0].clone(), 1.0)]));
        assert!(matches!(
            lemma1_identities(&q, &g, &f).unwrap_err(),
            TheoremError::Stat(StatError::MissingKey { .. })
        ));
    }

    #[test]
    fn decomposition_with_identity_function() {
        let m = four_word_fixture();
        let r = decompose_theorem2(&m, 0, 0, &ScoreFunction::Identity).unwrap();
        assert_eq!(r.bound_part, 1.0);
        assert!((r.total - EIGHTEEN_NINETEENTHS).abs() < 1e-12);
        assert!((r.fit_part - EIGHTEEN_NINETEENTHS).abs() < 1e-12);
        assert!(r.identity_residual() <= tol::IDENTITY);
        assert!(r.total <= r.bound_part + tol::BOUND_SLACK);
    }

    #[test]
    fn decomposition_bound_is_bit_identical_across_functions() {
        let m = four_word_fixture();
        let fs: Vec<ScoreFunction<f64>> = vec![
            ScoreFunction::Identity,
            ScoreFunction::LogPmi {
                marginal: 0.5,
                floor: 1e-9,
            },
            ScoreFunction::Power { exponent: 2.0 },
            ScoreFunction::Affine {
                scale: -3.0,
                shift: 0.7,
            },
        ];
        let bits: Vec<u64> = fs
            .iter()
            .map(|f| {
                decompose_theorem2(&m, 0, 0, f)
                    .unwrap()
                    .bound_part
                    .to_bits()
            })
            .collect();
        assert!(
            bits.windows(2).all(|w| w[0] == w[1]),
            "bounds differ: {bits:?}"
        );
    }

    #[test]
    fn decomposition_product_identity_under_log_pmi() {
        let m = four_word_fixture();
        let f = ScoreFunction::LogPmi {
            marginal: 0.5,
            floor: 1e-9,
        };
        let r = decompose_theorem2(&m, 0, 0, &f).unwrap();
        assert!(
            r.identity_residual() <= tol::IDENTITY,
            "residual {}",
            r.identity_residual()
        );
    }

    #[test]
    fn decomposition_with_the_grouped_posterior_itself_saturates_fit() {
        let m = four_word_fixture();
        let q = m.task_posterior(0);
        let g = m.feature_grouping(0);
        let gp = grouped_posterior(&g, &q).unwrap();
        let map: HashMap<GroupKey, f64> = (0..g.group_count())
            .map(|gi| (g.key(gi).clone(), gp.values()[g.members(gi)[0]]))
            .collect();
        let r = decompose_theorem2(&m, 0, 0, &ScoreFunction::Tabulated(map)).unwrap();
        assert!((r.fit_part - 1.0).abs() < 1e-12);
        assert!((r.total - r.bound_part).abs() < 1e-12);
    }

    #[test]
    fn decomposition_rejects_label_mixing_feature() {
        let m = four_word_fixture();
        let err = decompose_theorem2(&m, 2, 0, &ScoreFunction::Identity).unwrap_err();
        assert_eq!(err, degenerate("grouped posterior"));
    }

    #[test]
    fn closed_form_matches_the_fixture_value() {
        let m = four_word_fixture();
        let got = corollary1_score(&m, 0, 0).unwrap();
        assert!((got - EIGHTEEN_NINETEENTHS).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn closed_form_scores_zero_on_uncorrelated_features() {
        let m = four_word_fixture();
        assert!(corollary1_score(&m, 2, 0).unwrap() < 1e-25);
    }

    #[test]
    fn closed_form_rejects_fractional_labels() {
        let m = AnalyticModel::new(
            vec![0.5, 0.5],
            vec![FeatureColumn::from_values("p", vec![0.9, 0.1])],
            vec![TaskColumn::new("soft", vec![0.7, 0.2])],
        )
        .unwrap();
        assert_eq!(
            corollary1_score(&m, 0, 0).unwrap_err(),
            TheoremError::NotDeterministicLabel
        );
    }

    #[test]
    fn closed_form_rejects_single_class_and_constant_profile() {
        let one_class = AnalyticModel::new(
            vec![0.5, 0.5],
            vec![FeatureColumn::from_values("p", vec![0.9, 0.1])],
            vec![TaskColumn::new("q", vec![1.0, 1.0])],
        )
        .unwrap();
        assert_eq!(
            corollary1_score(&one_class, 0, 0).unwrap_err(),
            TheoremError::DegenerateTarget
        );
        let flat = AnalyticModel::new(
            vec![0.5, 0.5],
            vec![FeatureColumn::from_values("p", vec![0.4, 0.4])],
            vec![TaskColumn::new("q", vec![1.0, 0.0])],
        )
        .unwrap();
        assert_eq!(
            corollary1_score(&flat, 0, 0).unwrap_err(),
            TheoremError::ConstantProfile
        );
    }

    #[test]
    fn mi_style_agrees_with_the_closed_form() {
        let m = four_word_fixture();
        let mi = mi_style_score(&m, 0, 0).unwrap();
        let cf = corollary1_score(&m, 0, 0).unwrap();
        assert!((mi - cf).abs() < 1e-12);
        assert!((mi - EIGHTEEN_NINETEENTHS).abs() < 1e-12);
    }

    #[test]
    fn unweighted_diagnostic_differs_by_the_support_size_under_uniform_weights() {
        let m = four_word_fixture();
        let weighted = mi_style_score(&m, 0, 0).unwrap();
        let unweighted = mi_style_score_with(&m, 0, 0, MiDenominator::Unweighted).unwrap();
        assert!((unweighted * 4.0 - weighted).abs() < 1e-12);
    }

    #[test]
    fn label_factorization_on_the_fixture() {
        let m = four_word_fixture();
        let r = theorem3_factors(&m, 0, 0).unwrap();
        assert!((r.label_side - 1.0).abs() < 1e-12);
        assert!((r.profile_side - EIGHTEEN_NINETEENTHS).abs() < 1e-12);
        let raw = raw_corr_score(&m, 0, 0).unwrap();
        assert!((r.product - raw).abs() <= tol::IDENTITY);
    }

    #[test]
    fn label_factorization_needs_label_signal() {
        // P(C=1|Y=1) = P(C=1|Y=0): the label-conditional profile is flat.
        let m = AnalyticModel::new(
            vec![0.25; 4],
            vec![FeatureColumn::from_values("p", vec![0.6, 0.2, 0.6, 0.2])],
            vec![TaskColumn::new("q", vec![1.0, 1.0, 0.0, 0.0])],
        )
        .unwrap();
        assert_eq!(
            theorem3_factors(&m, 0, 0).unwrap_err(),
            degenerate("label-conditional profile")
        );
    }

    #[test]
    fn ratio_check_agrees_with_the_direct_bound() {
        let m = AnalyticModel::new(
            vec![0.25; 4],
            vec![
                FeatureColumn::from_values("k1", vec![0.5, 0.5, 0.2, 0.2]),
                FeatureColumn::from_values("k2", vec![0.4, 0.1, 0.4, 0.4]),
            ],
            vec![TaskColumn::new("q", vec![0.9, 0.6, 0.3, 0.1])],
        )
        .unwrap();
        let r = theorem4_ratio_check(&m, &[0, 1], 0, 0).unwrap();
        assert!(r.residual() <= tol::IDENTITY, "residual {}", r.residual());
        assert!((r.vector_bound - 0.086875 / 0.091875).abs() < 1e-12);
    }

    #[test]
    fn ratio_check_validates_membership() {
        let m = four_word_fixture();
        assert_eq!(
            theorem4_ratio_check(&m, &[0], 0, 1).unwrap_err(),
            TheoremError::MemberNotInSubset
        );
    }

    #[test]
    fn conditionally_independent_fixture_satisfies_the_property() {
        let report = theorem1_verify(&structured_fixture()).unwrap();
        assert!(report.holds(), "max deviation {}", report.max_deviation());
        assert!((report.corr_sq - 1.0).abs() <= 1e-9);
        assert!((report.analytic_slope - 0.5).abs() < 1e-12);
        assert!((report.analytic_intercept - 0.3).abs() < 1e-12);
        assert!((report.fitted_slope - 0.5).abs() < 1e-9);
        assert!((report.fitted_intercept - 0.3).abs() < 1e-9);
    }

    #[test]
    fn tampered_table_breaks_the_property() {
        let mut table = structured_fixture().to_table().unwrap();
        // Shift mass between cells of one word, keeping the total.
        table[0][0] += 0.05;
        table[0][3] -= 0.05;
        let report = theorem1_verify(&SyntheticJoint::Table { table }).unwrap();
        assert!(!report.holds());
        assert!(report.corr_sq < 1.0 - 1e-6);
    }

    #[test]
    fn context_independent_of_label_is_flagged() {
        let joint = SyntheticJoint::Structured {
            p_y1: 0.5,
            p_c1_given_y: [0.4, 0.4],
            p_x_given_y: [vec![0.1, 0.1, 0.4, 0.4], vec![0.5, 0.3, 0.1, 0.1]],
        };
        assert_eq!(
            theorem1_verify(&joint).unwrap_err(),
            TheoremError::IndependentCY
        );
    }
}
