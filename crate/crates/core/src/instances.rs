//! Benchmark initial data and seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::measure::{Atom, InitialData};
use crate::scalar::{lit, Scalar};

/// Ranges for random instances.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSpec {
    pub max_atoms: usize,
    pub position: (f64, f64),
    pub mass: (f64, f64),
    pub velocity: (f64, f64),
    /// Relaxation times drawn uniformly from this list.
    pub taus: Vec<f64>,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            max_atoms: 50,
            position: (-10.0, 10.0),
            mass: (0.01, 2.0),
            velocity: (-2.0, 2.0),
            taus: vec![1.0, 0.5, 0.1],
        }
    }
}

/// Draws one instance with `1..=max_atoms` atoms.
pub fn random_instance<T: Scalar, R: Rng>(rng: &mut R, spec: &RandomSpec) -> InitialData<T> {
    let n = rng.random_range(1..=spec.max_atoms.max(1));
    let atoms: Vec<Atom<T>> = (0..n)
        .map(|_| {
            Atom::new(
                lit(rng.random_range(spec.position.0..=spec.position.1)),
                lit(rng.random_range(spec.mass.0..=spec.mass.1)),
                lit(rng.random_range(spec.velocity.0..=spec.velocity.1)),
            )
        })
        .collect();
    let tau = spec.taus[rng.random_range(0..spec.taus.len())];
    InitialData::new(atoms, lit(tau)).expect("random ranges produce valid atoms")
}

/// `count` instances from a fixed seed; identical seeds give identical instances.
pub fn random_instances<T: Scalar>(seed: u64, count: usize, spec: &RandomSpec) -> Vec<InitialData<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng, spec)).collect()
}

/// One unit atom at the origin moving right with unit speed, `tau = 1`.
pub fn single_atom<T: Scalar>() -> InitialData<T> {
    InitialData::new([Atom::new(T::zero(), T::one(), T::one())], T::one()).expect("valid")
}

/// Two half-mass atoms at rest at `-1` and `1`, `tau = 1`.
pub fn symmetric_pair<T: Scalar>() -> InitialData<T> {
    let half = lit(0.5);
    InitialData::new([Atom::new(-T::one(), half, T::zero()), Atom::new(T::one(), half, T::zero())], T::one())
        .expect("valid")
}

/// Atoms of mass 1/3 at `-1` and 2/3 at `1`, at rest, `tau = 1`.
pub fn asymmetric_pair<T: Scalar>() -> InitialData<T> {
    InitialData::new(
        [Atom::new(-T::one(), lit(1.0 / 3.0), T::zero()), Atom::new(T::one(), lit(2.0 / 3.0), T::zero())],
        T::one(),
    )
    .expect("valid")
}
