use proptest::prelude::*;
use retest_core::scoring::{aggregate_mc, assign_class, severity_score};
use retest_core::{AggregatedPrediction, HeadKind, McIndex, PredictionRecord};

fn simplex(raw: &[f64]) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

fn row(head: HeadKind, mc: u32, outputs: Vec<f64>) -> PredictionRecord {
    PredictionRecord {
        subject_id: "s".into(),
        session_id: "v".into(),
        image_id: "a".into(),
        head,
        mc_index: McIndex::Sample(mc),
        outputs,
    }
}

fn agg(head: HeadKind, outputs: Vec<f64>) -> AggregatedPrediction {
    AggregatedPrediction {
        head,
        outputs,
        n_samples_used: 1,
        deterministic: true,
    }
}

/// `n` rows of valid outputs for `head`.
fn rows_strategy() -> impl Strategy<Value = (HeadKind, Vec<Vec<f64>>)> {
    (0usize..4, 2usize..7, 1usize..12).prop_flat_map(|(kind, k, n)| {
        let head = match kind {
            0 => HeadKind::Binary,
            1 => HeadKind::MultiClass(k),
            2 => HeadKind::Ordinal(k),
            _ => HeadKind::Regression(k),
        };
        let len = head.output_len();
        let lo = if matches!(head, HeadKind::Regression(_)) { -1.0 } else { 0.0 };
        let hi = if matches!(head, HeadKind::Regression(_)) { k as f64 } else { 1.0 };
        let sample = prop::collection::vec(lo..hi, len).prop_map(move |v| {
            if matches!(head, HeadKind::MultiClass(_)) {
                simplex(&v.iter().map(|x| x + 1e-3).collect::<Vec<_>>())
            } else {
                v
            }
        });
        (Just(head), prop::collection::vec(sample, n))
    })
}

proptest! {
    /// One-based and zero-based readings of the probability-weighted class
    /// index differ by exactly one on the simplex.
    #[test]
    fn one_and_zero_based_readings_agree(raw in prop::collection::vec(0.001f64..1.0, 2..9)) {
        let p = simplex(&raw);
        let one_based: f64 = p.iter().enumerate().map(|(i, v)| v * (i + 1) as f64).sum();
        let zero_based = severity_score(&agg(HeadKind::MultiClass(p.len()), p.clone())).value;
        prop_assert!((zero_based - (one_based - 1.0)).abs() <= 1e-12);
    }

    #[test]
    fn scores_are_linear_in_samples((head, samples) in rows_strategy()) {
        let rows: Vec<_> = samples.iter().enumerate().map(|(i, o)| row(head, i as u32, o.clone())).collect();
        let a = aggregate_mc(&rows, rows.len()).unwrap();
        let mean_of_scores = samples
            .iter()
            .map(|o| severity_score(&agg(head, o.clone())).value)
            .sum::<f64>()
            / samples.len() as f64;
        prop_assert!((severity_score(&a).value - mean_of_scores).abs() <= 1e-12);
    }

    #[test]
    fn ordinal_score_is_monotone(
        q in prop::collection::vec(0.0f64..1.0, 1..8),
        unit in 0usize..8,
        bump in 0.0f64..1.0,
    ) {
        let k = q.len() + 1;
        let before = severity_score(&agg(HeadKind::Ordinal(k), q.clone())).value;
        let mut raised = q.clone();
        let u = unit % q.len();
        raised[u] = (raised[u] + bump).min(1.0);
        prop_assert!(severity_score(&agg(HeadKind::Ordinal(k), raised)).value >= before);
    }

    /// Only the set of the first `n` samples by `mc_index` matters, not the
    /// index values or the row order.
    #[test]
    fn class_ignores_monotone_renumbering(
        (head, samples) in rows_strategy(),
        gaps in prop::collection::vec(1u32..50, 12),
        n_frac in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let n = 1 + ((samples.len() - 1) as f64 * n_frac) as usize;
        let plain: Vec<_> = samples.iter().enumerate().map(|(i, o)| row(head, i as u32, o.clone())).collect();
        let mut next = 0u32;
        let mut renumbered: Vec<_> = samples
            .iter()
            .zip(&gaps)
            .map(|(o, g)| {
                next += g;
                row(head, next, o.clone())
            })
            .collect();
        // Shuffle the renumbered rows; aggregation sorts by mc_index.
        let mut rng = retest_core::rng::substream(seed, 0);
        retest_core::rng::shuffle(&mut rng, &mut renumbered);
        let a = aggregate_mc(&plain, n).unwrap();
        let b = aggregate_mc(&renumbered, n).unwrap();
        prop_assert_eq!(assign_class(&a), assign_class(&b));
        prop_assert!((severity_score(&a).value - severity_score(&b).value).abs() <= 1e-12);
    }

    /// Classification depends on the samples only through their mean vector.
    #[test]
    fn class_depends_only_on_the_mean((head, samples) in rows_strategy()) {
        let rows: Vec<_> = samples.iter().enumerate().map(|(i, o)| row(head, i as u32, o.clone())).collect();
        let a = aggregate_mc(&rows, rows.len()).unwrap();
        let n = samples.len() as f64;
        let mean: Vec<f64> = (0..head.output_len())
            .map(|j| samples.iter().map(|o| o[j]).sum::<f64>() / n)
            .collect();
        prop_assert_eq!(assign_class(&a), assign_class(&agg(head, mean.clone())));
        for (x, y) in a.outputs.iter().zip(&mean) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}
