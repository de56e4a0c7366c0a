mod common;

use common::{data, naive_prefix_potential, naive_weights};
use proptest::prelude::*;
use stickyrelax::potentials::{
    argmax_prefix, argmin_prefix, g_prefix_values, h_prefix_values, minimize_f, minimize_fbar, minimize_unrestricted,
    minimize_with, default_k,
};
use stickyrelax::{Solution, Tol, Weights};

const TIE: f64 = 1e-12;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn window_agrees_with_full_scan(d in data(30), x in -25.0..25.0f64, t in 0.01..12.0f64) {
        let w = Weights::euler_poisson(d.tau(), t).unwrap();
        let r = minimize_with(&d, &w, x, TIE).unwrap();
        let (nu, a, b) = minimize_unrestricted(&d, &w, x, TIE).unwrap();
        prop_assert_eq!((r.nu, r.k_min, r.k_max), (nu, a, b));
    }

    #[test]
    fn prefix_values_match_termwise_sum(d in data(20), x in -20.0..20.0f64, t in 0.1..8.0f64) {
        let (a, b) = naive_weights(d.tau(), t);
        let r = minimize_f(&d, x, t, TIE).unwrap();
        let naive: Vec<f64> = (0..=d.len()).map(|k| naive_prefix_potential(&d, a, b, x, k)).collect();
        let scale = naive.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        let best = naive.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!((r.nu - best).abs() <= 1e-11 * scale);
        prop_assert!(naive[r.k_min] - best <= 1e-10 * scale);
    }

    #[test]
    fn minimizing_prefix_is_monotone_in_x(d in data(25), x in -20.0..20.0f64, dx in 1e-6..3.0f64, t in 0.01..10.0f64) {
        let lo = minimize_f(&d, x, t, TIE).unwrap();
        let hi = minimize_f(&d, x + dx, t, TIE).unwrap();
        prop_assert!(lo.k_min <= lo.k_max);
        prop_assert!(lo.k_min <= hi.k_min && lo.k_max <= hi.k_max);
        prop_assert!(lo.y_star <= hi.y_star);
    }

    #[test]
    fn k_max_is_the_right_limit(d in data(20), x in -20.0..20.0f64, t in 0.05..10.0f64) {
        let r = minimize_f(&d, x, t, TIE).unwrap();
        let right = minimize_f(&d, x + 1e-7 * (1.0 + x.abs()), t, TIE).unwrap();
        prop_assert!(right.k_min >= r.k_max);
    }

    #[test]
    fn drift_potential_is_the_at_rest_potential_with_drift_weights(d in data(25), x in -20.0..20.0f64, t in 0.01..10.0f64) {
        let w = Weights::drift(t).unwrap();
        let r = minimize_fbar(d.measure(), x, t, TIE).unwrap();
        let s = minimize_with(&d.at_rest(), &w, x, TIE).unwrap();
        prop_assert_eq!((r.nu, r.k_min, r.k_max), (s.nu, s.k_min, s.k_max));
        let (nu, a, b) = minimize_unrestricted(&d.at_rest(), &w, x, TIE).unwrap();
        prop_assert_eq!((nu, a, b), (r.nu, r.k_min, r.k_max));
    }

    #[test]
    fn second_and_third_potentials_select_the_same_prefix(d in data(12), x in -20.0..20.0f64, t in 0.05..6.0f64) {
        let sol = Solution::new(d.clone());
        let fwd = sol.forward_positions(t).unwrap();
        let r = sol.minimize(x, t).unwrap();
        let k0 = default_k(&d);
        for k in [k0, 3.0 * k0] {
            let g = g_prefix_values(&d, &fwd, x, t, k).unwrap();
            let h = h_prefix_values(&d, &fwd, x, t, k).unwrap();
            let scale = g.iter().chain(&h).fold(1.0f64, |s, v| s.max(v.abs()));
            let (gmin, _, _) = argmin_prefix(&g, 0.0);
            let (hmax, _, _) = argmax_prefix(&h, 0.0);
            // every F-minimizing prefix also extremizes G and H
            for j in [r.k_min, r.k_max] {
                prop_assert!(g[j] - gmin <= 1e-9 * scale, "G: {} vs {}", g[j], gmin);
                prop_assert!(hmax - h[j] <= 1e-9 * scale, "H: {} vs {}", h[j], hmax);
            }
        }
    }
}

#[test]
fn tolerances_default_is_positive() {
    let t = Tol::default();
    assert!(t.tie > 0.0 && t.position > 0.0 && t.event > 0.0 && t.root > 0.0);
}
