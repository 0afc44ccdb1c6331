//! Property tests for the model invariants: linearity and scaling laws,
//! correction round trips, impact bounds, and statistic plumbing.

use gtcorrect_core::approx::{builtin_constants, delta_exact, MetricKind};
use gtcorrect_core::compare::{compare_impacts, impact_threshold, Dominant};
use gtcorrect_core::correct::{
    correct_marking, marking_impact_bounds, CorrectionConfig,
};
use gtcorrect_core::estimate::{ecdf_points, summary_stats, SUMMARY_QUANTILES};
use gtcorrect_core::{RayleighParams, RiceParams};
use proptest::prelude::*;

proptest! {
    // Rayleigh quantiles are linear in sigma: q(sigma, p) = sigma * q(1, p)
    #[test]
    fn rayleigh_quantile_linear_in_sigma(
        sigma in 1e-3..1e3f64,
        q in 1e-4..0.9999f64,
    ) {
        let unit = RayleighParams::new(1.0).unwrap().quantile(q).unwrap();
        let scaled = RayleighParams::new(sigma).unwrap().quantile(q).unwrap();
        prop_assert!((scaled - sigma * unit).abs() <= 1e-12 * scaled.abs());
    }

    // forward model (sigma_val^2 = sigma_real^2 + sigma_mark^2) then
    // correction recovers the real statistic. The u^2 - v^2 cancellation
    // amplifies rounding by (sigma_mark / sigma_real)^2, so the 1e-12
    // bound holds on the model's domain of interest (marking error not
    // dwarfing the real error), not for arbitrarily extreme ratios.
    #[test]
    fn marking_round_trip_is_exact(
        sigma_real in 1e-3..1e3f64,
        ratio in 0.0..2.0f64,
        metric_idx in 0usize..4,
    ) {
        let sigma_mark = ratio * sigma_real;
        let metric = [
            MetricKind::Mean,
            MetricKind::Median,
            MetricKind::Tail95,
            MetricKind::Quantile(0.25),
        ][metric_idx];
        let gamma = metric.gamma();
        let u = gamma * (sigma_real * sigma_real + sigma_mark * sigma_mark).sqrt();
        let v = gamma * sigma_mark;
        let r = correct_marking(u, v, metric).unwrap();
        let want = gamma * sigma_real;
        prop_assert!(
            (r.real_stat - want).abs() <= 1e-12 * want,
            "got {}, want {want}", r.real_stat
        );
    }

    // v^2/2u < u - sqrt(u^2 - v^2) < v^2/(2u - v) for 0 < v < u
    #[test]
    fn impact_bounds_sandwich_impact(
        u in 1e-3..1e4f64,
        ratio in 1e-4..0.9999f64,
    ) {
        let v = ratio * u;
        let (lo, hi) = marking_impact_bounds(u, v).unwrap();
        let impact = u - (u * u - v * v).sqrt();
        prop_assert!(lo < impact, "lower {lo} !< impact {impact}");
        prop_assert!(impact < hi, "impact {impact} !< upper {hi}");
    }

    // marking impact is quadratic in v for small v
    #[test]
    fn marking_impact_quadratic_for_small_v(u in 0.1..1e3f64) {
        let v = u / 100.0;
        let d1 = correct_marking(u, v, MetricKind::Mean).unwrap().impact;
        let d2 = correct_marking(u, 2.0 * v, MetricKind::Mean).unwrap().impact;
        prop_assert!((d2 / d1 - 4.0).abs() < 0.04);
    }

    // Delta(v, sigma) = sigma * Delta(v/sigma, 1) (mean metric: closed form)
    #[test]
    fn delta_scaling_identity(
        v in 0.0..50.0f64,
        sigma in 0.05..20.0f64,
    ) {
        let lhs = delta_exact(v, sigma, MetricKind::Mean);
        let rhs = sigma * delta_exact(v / sigma, 1.0, MetricKind::Mean);
        prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1e-8));
    }

    // summary statistics ignore input order and stay monotone in q
    #[test]
    fn summary_stats_permutation_invariant(
        base in prop::collection::vec(0.0..100.0f64, 1..200),
    ) {
        let stats = summary_stats(&base).unwrap();
        let mut reversed = base.clone();
        reversed.reverse();
        let stats_rev = summary_stats(&reversed).unwrap();
        prop_assert_eq!(stats.clone(), stats_rev);
        let mut prev = f64::NEG_INFINITY;
        for q in SUMMARY_QUANTILES {
            let value = stats.quantile(q).unwrap();
            prop_assert!(value >= prev);
            prev = value;
        }
    }

    // ECDF: x ascending, F ascending, ends at (max, 1)
    #[test]
    fn ecdf_shape(norms in prop::collection::vec(0.0..50.0f64, 1..100)) {
        let pts = ecdf_points(&norms).unwrap();
        prop_assert_eq!(pts.len(), norms.len());
        for w in pts.windows(2) {
            prop_assert!(w[0].0 <= w[1].0);
            prop_assert!(w[0].1 < w[1].1);
        }
        let last = pts.last().unwrap();
        prop_assert_eq!(last.1, 1.0);
    }
}

proptest! {
    // Rice collapses onto Rayleigh at v = 0 (quantile route is the
    // expensive one; fewer cases keep the run short)
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn rice_v0_quantiles_match_rayleigh(
        sigma in 0.1..10.0f64,
        q in 0.05..0.95f64,
    ) {
        let rice = RiceParams::new(0.0, sigma).unwrap();
        let ray = RayleighParams::new(sigma).unwrap();
        let got = rice.quantile(q).unwrap();
        let want = ray.quantile(q).unwrap();
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0));
    }
}

// with the built-in constants, the approximation tracks the exact impact
// within 0.02 everywhere on v in [0, 10] step 0.01, for all three metrics
#[test]
fn builtin_constants_track_exact_impact() {
    use gtcorrect_core::approx::{delta_approx, ApproxConstants};
    let check = |metric: MetricKind| {
        let c: ApproxConstants = builtin_constants(metric).unwrap();
        let mut worst = 0.0f64;
        for i in 0..=1000 {
            let v = i as f64 * 0.01;
            let gap = (delta_exact(v, 1.0, metric) - delta_approx(v, 1.0, &c)).abs();
            worst = worst.max(gap);
        }
        assert!(worst < 0.02, "{metric}: max |Delta - delta| = {worst}");
    };
    check(MetricKind::Mean);
    check(MetricKind::Median);
    check(MetricKind::Tail95);
}

// both the exact impact and the approximation approach slope 1
#[test]
fn impact_slope_tends_to_one_for_all_metrics() {
    for metric in [MetricKind::Mean, MetricKind::Median, MetricKind::Tail95] {
        let exact = delta_exact(1000.0, 1.0, metric) / 1000.0;
        assert!((0.995..=1.0).contains(&exact), "{metric}: Delta ratio {exact}");
        let c = builtin_constants(metric).unwrap();
        let approx = gtcorrect_core::approx::delta_approx(1000.0, 1.0, &c) / 1000.0;
        assert!((0.995..=1.0).contains(&approx), "{metric}: delta ratio {approx}");
    }
}

// verdict from computing both impacts == verdict from the threshold rule,
// over 200 pairs per metric (away from the threshold itself)
#[test]
fn dominance_verdict_consistent_with_threshold_rule() {
    let cfg = CorrectionConfig::default();
    for metric in [MetricKind::Mean, MetricKind::Median, MetricKind::Tail95] {
        let c = builtin_constants(metric).unwrap();
        let threshold = impact_threshold(&c);
        let mut state = 0x9e3779b97f4a7c15u64 ^ metric.gamma().to_bits();
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut checked = 0;
        while checked < 200 {
            let u = 0.5 + 99.5 * next();
            let ratio = 0.01 + 0.98 * next();
            if let Some(t) = threshold {
                if (ratio - t).abs() < 1e-3 {
                    continue;
                }
            }
            let verdict = compare_impacts(u, ratio * u, &c, &cfg).unwrap();
            let by_rule = match threshold {
                Some(t) if ratio < t => Dominant::Marking,
                _ => Dominant::Map,
            };
            assert_eq!(
                verdict.dominant, by_rule,
                "{metric}: u={u} ratio={ratio} threshold={threshold:?}"
            );
            checked += 1;
        }
    }
}
