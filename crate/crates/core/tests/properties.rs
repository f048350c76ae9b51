use histolab_core::{
    compress, describe, mse, recall_precision, reconstruct_like, rmse, suggest_policy, AnomalyLabels, Deviation,
    SignalStats, TimeSeries,
};
use proptest::prelude::*;

/// Brute-force check of the SDT interpolation contract, independent of the
/// reconstruction module: for every original sample, find the surrounding
/// retained pair by linear scan and interpolate.
fn worst_gap(original: &TimeSeries, kept: &[usize]) -> f64 {
    let t = original.timestamps();
    let v = original.values();
    let mut worst: f64 = 0.0;
    for i in 0..original.len() {
        let k = kept.iter().rposition(|&k| k <= i).unwrap();
        let approx = if kept[k] == i {
            v[i]
        } else {
            let (a, b) = (kept[k], kept[k + 1]);
            v[a] + (v[b] - v[a]) * (t[i] - t[a]) / (t[b] - t[a])
        };
        worst = worst.max((approx - v[i]).abs());
    }
    worst
}

fn arb_series() -> impl Strategy<Value = TimeSeries> {
    (2usize..200)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0.01f64..3.0, n),
                prop::collection::vec(-50.0f64..50.0, n),
            )
        })
        .prop_map(|(gaps, values)| {
            let mut t = 0.0;
            let timestamps = gaps
                .iter()
                .map(|g| {
                    t += g;
                    t
                })
                .collect();
            TimeSeries::new(timestamps, values, "").unwrap()
        })
}

proptest! {
    #[test]
    fn retained_points_honour_the_deviation(ts in arb_series(), d in 0.0f64..20.0) {
        let c = compress(&ts, Deviation::new(d).unwrap()).unwrap();
        let slack = 1e-9 * (1.0 + d);
        prop_assert!(worst_gap(&ts, &c.source_indices) <= d + slack);
        let recon = reconstruct_like(&c, &ts).unwrap();
        prop_assert!(rmse(&ts, &recon).unwrap() <= d + slack);
    }

    #[test]
    fn retained_is_an_exact_subsequence(ts in arb_series(), d in 0.0f64..20.0) {
        let c = compress(&ts, Deviation::new(d).unwrap()).unwrap();
        prop_assert_eq!(c.source_indices.first(), Some(&0));
        prop_assert_eq!(c.source_indices.last(), Some(&(ts.len() - 1)));
        prop_assert!(c.source_indices.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(c.retained.len(), c.source_indices.len());
        prop_assert!(c.len() >= 2 && c.len() <= ts.len());
        for (k, &i) in c.source_indices.iter().enumerate() {
            prop_assert_eq!(c.retained.timestamps()[k].to_bits(), ts.timestamps()[i].to_bits());
            prop_assert_eq!(c.retained.values()[k].to_bits(), ts.values()[i].to_bits());
        }
    }

    #[test]
    fn reconstruction_exact_on_retained(ts in arb_series(), d in 0.0f64..5.0) {
        let c = compress(&ts, Deviation::new(d).unwrap()).unwrap();
        let recon = reconstruct_like(&c, &ts).unwrap();
        for &i in &c.source_indices {
            prop_assert_eq!(recon.values()[i], ts.values()[i]);
        }
    }

    #[test]
    fn mse_is_rmse_squared(a in prop::collection::vec(-1e3f64..1e3, 1..100), shift in -5.0f64..5.0) {
        let x = TimeSeries::from_values(a.clone(), 1.0).unwrap();
        let y = TimeSeries::from_values(a.iter().map(|v| v + shift * v.sin()).collect(), 1.0).unwrap();
        let m = mse(&x, &y).unwrap();
        let r = rmse(&x, &y).unwrap();
        prop_assert!((r * r - m).abs() <= 1e-12 * m.max(f64::MIN_POSITIVE));
        prop_assert_eq!(rmse(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn stats_are_ordered(values in prop::collection::vec(-1e6f64..1e6, 1..300)) {
        let s = describe(&TimeSeries::from_values(values, 1.0).unwrap()).unwrap();
        prop_assert!(s.min <= s.mean && s.mean <= s.max);
        prop_assert!(s.range >= 0.0 && s.std_dev >= 0.0);
        prop_assert_eq!(s.range, s.max - s.min);
    }

    #[test]
    fn suggestion_scales_with_the_signal(values in prop::collection::vec(-100.0f64..100.0, 3..200), k in 0.01f64..100.0) {
        let base = describe(&TimeSeries::from_values(values.clone(), 1.0).unwrap()).unwrap();
        prop_assume!(base.range > 1e-6);
        let scaled = describe(&TimeSeries::from_values(values.iter().map(|v| v * k).collect(), 1.0).unwrap()).unwrap();
        let (p1, d1) = suggest_policy(&base).unwrap();
        let ratio = base.std_dev / base.range;
        // Policy identity can flip only if rounding moves the ratio across a breakpoint.
        prop_assume!((ratio - 0.1).abs() > 1e-9 && (ratio - 0.3).abs() > 1e-9);
        let (p2, d2) = suggest_policy(&scaled).unwrap();
        prop_assert_eq!(p1, p2);
        prop_assert!((d2.value() - k * d1.value()).abs() <= 1e-9 * k * d1.value());
    }

    #[test]
    fn suggestion_is_piecewise_constant(ratio in 0.0f64..1.0) {
        let stats = SignalStats::from_std_range(ratio, 1.0);
        let (policy, _) = suggest_policy(&stats).unwrap();
        let expected = if ratio < 0.1 { "aggressive" } else if ratio <= 0.3 { "moderate" } else { "conservative" };
        prop_assert_eq!(policy.name(), expected);
    }

    #[test]
    fn recall_and_precision_bounded(
        starts in prop::collection::btree_set(0usize..500, 0..20),
        detections in prop::collection::vec(0usize..520, 0..40),
        tol in 0usize..5,
    ) {
        // Width 1 with distinct starts never overlaps.
        let idx: Vec<usize> = starts.into_iter().collect();
        let labels = AnomalyLabels::new(idx.clone(), vec![1.0; idx.len()], 1).unwrap();
        let mut det = detections;
        det.sort_unstable();
        det.dedup();
        let (r, p) = recall_precision(&labels, &det, tol);
        prop_assert!((0.0..=1.0).contains(&r) && (0.0..=1.0).contains(&p));
    }
}
