//! Property tests: invariants that must hold on arbitrary inputs, not just
//! the curated fixtures.

use proptest::prelude::*;

use cooccur_core::estimate::{build_model, merge_counts, model_to_json, ContextSpec, LabelSource};
use cooccur_core::{grouped_posterior, tol, GroupKey, Grouping, WeightedSeries};
use cooccur_core::{weighted_corr_sq, weighted_cov};

/// Entries are (value, raw weight, group id); weights get normalized.
fn series_and_grouping(entries: &[(f64, f64, u64)]) -> (WeightedSeries<f64>, Grouping) {
    let total: f64 = entries.iter().map(|e| e.1).sum();
    let values = entries.iter().map(|e| e.0).collect();
    let weights = entries.iter().map(|e| e.1 / total).collect();
    let keys: Vec<GroupKey> = entries
        .iter()
        .map(|e| GroupKey::from_count_ratio(e.2 + 1, 5))
        .collect();
    (
        WeightedSeries::new(values, weights).unwrap(),
        Grouping::by_keys(&keys),
    )
}

proptest! {
    /// Averaging within groups can only remove variance, never add it.
    #[test]
    fn grouping_never_increases_variance(
        entries in prop::collection::vec((0.0..1.0f64, 0.1..1.0f64, 0..5u64), 2..24),
    ) {
        let (series, grouping) = series_and_grouping(&entries);
        let grouped = grouped_posterior(&grouping, &series).unwrap();
        prop_assert!(grouped.variance() <= series.variance() + tol::BOUND_SLACK);
    }

    /// Group averaging conserves probability mass, so the mean survives.
    #[test]
    fn grouping_preserves_the_mean(
        entries in prop::collection::vec((0.0..1.0f64, 0.1..1.0f64, 0..5u64), 2..24),
    ) {
        let (series, grouping) = series_and_grouping(&entries);
        let grouped = grouped_posterior(&grouping, &series).unwrap();
        prop_assert!((grouped.mean() - series.mean()).abs() <= 1e-12);
    }

    /// Squared correlation ignores affine rescaling of either series.
    #[test]
    fn correlation_is_affine_invariant(
        entries in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0.1..1.0f64), 3..24),
        scale in 0.5..3.0f64,
        negate in any::<bool>(),
        shift in -2.0..2.0f64,
    ) {
        let total: f64 = entries.iter().map(|e| e.2).sum();
        let weights: Vec<f64> = entries.iter().map(|e| e.2 / total).collect();
        let x = WeightedSeries::new(entries.iter().map(|e| e.0).collect(), weights.clone()).unwrap();
        let y = WeightedSeries::new(entries.iter().map(|e| e.1).collect(), weights.clone()).unwrap();
        prop_assume!(x.variance() > 1e-4 && y.variance() > 1e-4);

        let a = if negate { -scale } else { scale };
        let mapped =
            WeightedSeries::new(entries.iter().map(|e| a * e.0 + shift).collect(), weights).unwrap();

        let before = weighted_corr_sq(&x, &y).unwrap();
        let after = weighted_corr_sq(&mapped, &y).unwrap();
        prop_assert!((before - after).abs() <= 1e-9, "corr² moved from {before} to {after}");
        // The covariance itself scales by exactly a.
        let cov_x = weighted_cov(&x, &y).unwrap();
        let cov_mapped = weighted_cov(&mapped, &y).unwrap();
        prop_assert!((cov_mapped - a * cov_x).abs() <= 1e-9);
    }

    /// Counting any line-split of a corpus in two passes and merging gives
    /// the same model as one pass over the whole corpus, in either merge
    /// order.
    #[test]
    fn split_counts_merge_to_the_whole(
        lines in prop::collection::vec(prop::collection::vec(0..6usize, 1..8), 2..10),
        split_seed in any::<usize>(),
    ) {
        const WORDS: [&str; 6] = ["alpha", "beta", "gamma", "delta", "eps", "zeta"];
        let render = |lines: &[Vec<usize>]| -> String {
            lines
                .iter()
                .map(|l| l.iter().map(|&w| WORDS[w]).collect::<Vec<_>>().join(" "))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let spec = ContextSpec::default();
        let features = vec!["alpha".to_string(), "gamma".to_string()];
        let labels = LabelSource::parse(
            "word\ttopic\nalpha\t1\nbeta\t0\ngamma\t1\ndelta\t0\neps\t1\nzeta\t0\n",
        )
        .unwrap();

        let split = 1 + split_seed % (lines.len() - 1);
        let (whole, _) = build_model(&render(&lines), &spec, &features, &labels).unwrap();
        let (head, _) = build_model(&render(&lines[..split]), &spec, &features, &labels).unwrap();
        let (tail, _) = build_model(&render(&lines[split..]), &spec, &features, &labels).unwrap();

        let expected = model_to_json(&whole);
        prop_assert_eq!(&model_to_json(&merge_counts(&head, &tail).unwrap()), &expected);
        prop_assert_eq!(&model_to_json(&merge_counts(&tail, &head).unwrap()), &expected);
    }
}
