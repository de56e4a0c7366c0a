#![allow(dead_code)]

use proptest::prelude::*;
use stickyrelax::{Atom, Data};

pub fn atom() -> impl Strategy<Value = Atom<f64>> {
    (-10.0..10.0f64, 0.01..2.0f64, -2.0..2.0f64).prop_map(|(x, w, u)| Atom::new(x, w, u))
}

pub fn data(max_atoms: usize) -> impl Strategy<Value = Data> {
    (prop::collection::vec(atom(), 1..=max_atoms), prop::sample::select(vec![1.0, 0.5, 0.1]))
        .prop_map(|(atoms, tau)| Data::new(atoms, tau).unwrap())
}

/// `(1 - e^{-z}, e^{-z} - 1 + z)` evaluated naively, valid away from `z = 0`.
pub fn naive_weights(tau: f64, t: f64) -> (f64, f64) {
    let z = t / tau;
    (tau * (1.0 - (-z).exp()), -tau * tau * ((-z).exp() - 1.0 + z))
}

/// `F` at prefix length `k`, summed term by term from the atoms.
pub fn naive_prefix_potential(d: &Data, a: f64, b: f64, x: f64, k: usize) -> f64 {
    let total = d.total_mass();
    let mut left = 0.0;
    let mut f = 0.0;
    for (i, at) in d.atoms().enumerate() {
        let mt = left + 0.5 * at.mass - 0.5 * total;
        if i < k {
            f += at.mass * (at.position + a * at.velocity + b * mt - x);
        }
        left += at.mass;
    }
    f
}
