//! Property-based invariants.

use std::f64::consts::{E, PI};

use proptest::prelude::*;
use tadpole_nls::config::RunConfig;
use tadpole_nls::evolution::{aligned_distance, f_trunc, random_perturbation};
use tadpole_nls::graph::{GraphDomain, NormWeights};
use tadpole_nls::num_complex::Complex64;
use tadpole_nls::phase_plane::{period, turning_point, well, well_excess, R_STAR};
use tadpole_nls::report::fmt_f64;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn period_is_decreasing(a in 0.05f64..2.7, b in 0.05f64..2.7) {
        prop_assume!((a - b).abs() > 1e-6);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(period(lo).unwrap() > period(hi).unwrap());
    }

    #[test]
    fn turning_point_is_on_the_level_curve(r0 in 1e-6f64..(E - 1e-6)) {
        let rp = turning_point(r0).unwrap();
        prop_assert!((R_STAR..E).contains(&rp));
        let target = 0.75 * well(r0);
        prop_assert!((well(rp) - target).abs() <= 1e-12 * well(R_STAR));
    }

    #[test]
    fn centre_is_the_maximum_of_the_well(phi in 1e-3f64..E) {
        let ex = well_excess(phi);
        prop_assert!(ex <= 0.0);
        prop_assert!((ex - (well(phi) - E)).abs() <= 1e-14 * E);
    }

    #[test]
    fn truncation_clamps(s in 0.0f64..1e6, n in 1.0f64..60.0) {
        let f = f_trunc(s, n).unwrap();
        prop_assert!((-n..=n).contains(&f));
        if s >= (-n).exp() && s <= n.exp() {
            prop_assert_eq!(f, s.ln());
        }
    }

    #[test]
    fn floats_round_trip_through_reports(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn run_config_round_trips(
        c in -5.0f64..5.0,
        l in 0.1f64..10.0,
        h in 1e-4f64..1e-1,
        dt in 1e-5f64..1e-1,
        eta in 0.0f64..0.1,
        seed in any::<u64>(),
        ring in proptest::option::of(8usize..10_000),
    ) {
        let mut cfg = RunConfig { c, l, eta, seed, dt, ..RunConfig::default() };
        cfg.grid.h = h;
        cfg.grid.ring = ring.map(|r| r * 2);
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn orbital_distance_ignores_global_phase(seed in any::<u64>(), theta in 0.0f64..(2.0 * PI)) {
        let d = GraphDomain::new(PI, 6.0, 200, 300).unwrap();
        let w = NormWeights::default();
        let u = random_perturbation(&d, &w, seed).unwrap();
        let v = random_perturbation(&d, &w, seed.wrapping_add(1)).unwrap();
        let rotated = u.scaled(Complex64::from_polar(1.0, theta));
        let (_, d0) = aligned_distance(&u, &v, &w, &d).unwrap();
        let (_, d1) = aligned_distance(&rotated, &v, &w, &d).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-12 * d0.max(1.0));
    }
}
