mod common;

use common::data;
use proptest::prelude::*;
use stickyrelax::instances::{asymmetric_pair, symmetric_pair};
use stickyrelax::{Branch, EntropySolution, Solution};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn forward_positions_land_on_snapshot_clusters(d in data(20), t in 0.05..10.0f64) {
        let sol = Solution::new(d.clone());
        let snap = sol.snapshot(t).unwrap();
        for i in 0..d.len() {
            let x = sol.forward_position(i, t).unwrap();
            let c = snap.cluster_of_atom(i);
            prop_assert!((x - c.position).abs() <= 1e-9 * (1.0 + x.abs()), "atom {}: {} vs {}", i, x, c.position);
        }
    }

    #[test]
    fn snapshot_momentum_decays_exponentially(d in data(30), t in 0.01..10.0f64) {
        let sol = Solution::new(d.clone());
        let snap = sol.snapshot(t).unwrap();
        let q: f64 = snap.clusters().iter().map(|c| c.mass * c.velocity).sum();
        let expected = d.total_momentum() * (-t / d.tau()).exp();
        let scale = d.total_mass() * (d.max_speed() + 0.5 * d.tau() * d.total_mass());
        prop_assert!((q - expected).abs() <= 1e-12 * scale, "{} vs {}", q, expected);
    }

    #[test]
    fn cluster_velocity_is_momentum_jump_over_mass_jump(d in data(15), t in 0.05..8.0f64) {
        let sol = Solution::new(d.clone());
        let snap = sol.snapshot(t).unwrap();
        let c = snap.clusters();
        for (j, cl) in c.iter().enumerate() {
            let mut gap: f64 = 1.0;
            if j > 0 { gap = gap.min(cl.position - c[j - 1].position); }
            if j + 1 < c.len() { gap = gap.min(c[j + 1].position - cl.position); }
            prop_assume!(gap > 1e-6);
            let (a, b) = (cl.position - gap / 4.0, cl.position + gap / 4.0);
            let dm = sol.eval_m(b, t).unwrap() - sol.eval_m(a, t).unwrap();
            let dq = sol.eval_q(b, t).unwrap() - sol.eval_q(a, t).unwrap();
            prop_assert!((dm - cl.mass).abs() <= 1e-12 * d.total_mass());
            prop_assert!((dq / dm - cl.velocity).abs() <= 1e-9 * (1.0 + cl.velocity.abs()));
        }
    }

    #[test]
    fn mass_is_monotone_and_speed_bounded(d in data(20), t in 0.01..10.0f64, x0 in -25.0..0.0f64) {
        let sol = Solution::new(d.clone());
        let xs: Vec<f64> = (0..200).map(|j| x0 + 0.25 * j as f64).collect();
        let samples = sol.eval_grid(&xs, t).unwrap();
        let bound = d.max_speed() + 0.5 * d.tau() * d.total_mass();
        for w in samples.windows(2) {
            prop_assert!(w[0].m <= w[1].m);
        }
        for s in &samples {
            prop_assert!(s.m >= 0.0 && s.m <= d.total_mass() * (1.0 + 1e-15));
            prop_assert!(s.u.abs() <= bound * (1.0 + 1e-12), "{} exceeds {}", s.u, bound);
            prop_assert!(s.energy >= -1e-12);
        }
    }
}

#[test]
fn single_precision_tracks_double_precision() {
    let d64 = asymmetric_pair::<f64>();
    let d32 = asymmetric_pair::<f32>();
    let s64 = EntropySolution::new(d64);
    let s32 = EntropySolution::new(d32);
    for &t in &[0.5f32, 2.0, 6.0] {
        for &x in &[-3.0f32, -0.5, 0.2, 0.7, 3.0] {
            let a = s64.eval(x as f64, t as f64).unwrap();
            let b = s32.eval(x, t).unwrap();
            assert!((a.m - b.m as f64).abs() < 1e-6);
            assert!((a.u - b.u as f64).abs() < 1e-5);
        }
    }
}

#[test]
fn symmetric_pair_merges_at_the_origin() {
    let sol = Solution::new(symmetric_pair());
    let before = sol.snapshot(4.9).unwrap();
    assert_eq!(before.clusters().len(), 2);
    let after = sol.snapshot(5.1).unwrap();
    assert_eq!(after.clusters().len(), 1);
    assert_eq!(after.clusters()[0].position, 0.0);
    assert_eq!(sol.eval_u(0.0, 6.0).unwrap(), (0.0, Branch::DeltaShock));
}
