//! Finite atomic measures on the line and the initial data built on them.
//!
//! All Stieltjes integrals against the initial mass distribution reduce to
//! finite sums over atoms. The prefix sums needed by the potentials are
//! computed once at construction, so every prefix integral is an O(1) lookup
//! after an O(log N) binary search.

use crate::error::{Error, Result};
use crate::scalar::{lit, prefix_sums, to_f64, CompensatedSum, Scalar};

/// One atom of initial data: a point mass with its initial velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<T> {
    pub position: T,
    pub mass: T,
    pub velocity: T,
}

impl<T: Scalar> Atom<T> {
    pub fn new(position: T, mass: T, velocity: T) -> Self {
        Self { position, mass, velocity }
    }
}

/// Record of atoms that shared a position in the input and were merged.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeWarning {
    pub position: f64,
    pub count: usize,
    pub merged_mass: f64,
    pub merged_velocity: f64,
}

/// Sorted finite atomic measure with strictly increasing positions.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure<T> {
    positions: Vec<T>,
    masses: Vec<T>,
    /// `prefix_mass[k]` is the mass of the first `k` atoms.
    prefix_mass: Vec<T>,
    /// Prefix sums of `w_i * eta_i`.
    prefix_moment: Vec<T>,
    /// Prefix sums of `w_i * mtilde_0(eta_i)`.
    prefix_force: Vec<T>,
    total: T,
    merges: Vec<MergeWarning>,
}

fn validate_atom<T: Scalar>(index: usize, a: &Atom<T>) -> Result<()> {
    if !a.position.is_finite() {
        return Err(Error::InvalidAtom { index, reason: "position is not finite" });
    }
    if !a.mass.is_finite() || a.mass <= T::zero() {
        return Err(Error::InvalidAtom { index, reason: "mass must be finite and positive" });
    }
    if !a.velocity.is_finite() {
        return Err(Error::InvalidAtom { index, reason: "velocity is not finite" });
    }
    Ok(())
}

/// Sorts atoms by position and merges exact duplicates, conserving mass and momentum.
fn sort_and_merge<T: Scalar>(mut atoms: Vec<Atom<T>>) -> Result<(Vec<Atom<T>>, Vec<MergeWarning>)> {
    for (i, a) in atoms.iter().enumerate() {
        validate_atom(i, a)?;
    }
    atoms.sort_by(|a, b| a.position.partial_cmp(&b.position).expect("finite positions"));
    let mut out: Vec<Atom<T>> = Vec::with_capacity(atoms.len());
    let mut warnings = Vec::new();
    let mut i = 0;
    while i < atoms.len() {
        let mut j = i + 1;
        while j < atoms.len() && atoms[j].position == atoms[i].position {
            j += 1;
        }
        if j - i == 1 {
            out.push(atoms[i]);
        } else {
            let group = &atoms[i..j];
            let mass: CompensatedSum<T> = group.iter().map(|a| a.mass).collect();
            let momentum: CompensatedSum<T> = group.iter().map(|a| a.mass * a.velocity).collect();
            let merged = Atom::new(atoms[i].position, mass.value(), momentum.value() / mass.value());
            let w = MergeWarning {
                position: to_f64(merged.position),
                count: j - i,
                merged_mass: to_f64(merged.mass),
                merged_velocity: to_f64(merged.velocity),
            };
            log::warn!(
                "merged {} atoms at x = {} (mass {}, velocity {})",
                w.count,
                w.position,
                w.merged_mass,
                w.merged_velocity
            );
            warnings.push(w);
            out.push(merged);
        }
        i = j;
    }
    Ok((out, warnings))
}

impl<T: Scalar> AtomicMeasure<T> {
    /// Builds a measure from `(position, mass)` pairs in any order.
    pub fn new(atoms: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        let atoms = atoms.into_iter().map(|(p, w)| Atom::new(p, w, T::zero())).collect();
        let (atoms, merges) = sort_and_merge(atoms)?;
        Ok(Self::from_sorted(&atoms, merges))
    }

    /// The measure with no atoms.
    pub fn empty() -> Self {
        Self::from_sorted(&[], Vec::new())
    }

    fn from_sorted(atoms: &[Atom<T>], merges: Vec<MergeWarning>) -> Self {
        let positions: Vec<T> = atoms.iter().map(|a| a.position).collect();
        let masses: Vec<T> = atoms.iter().map(|a| a.mass).collect();
        let prefix_mass = prefix_sums(masses.iter().copied());
        let total = *prefix_mass.last().expect("prefix has a leading zero");
        let half_total = total * lit(0.5);
        let prefix_moment = prefix_sums(atoms.iter().map(|a| a.mass * a.position));
        let prefix_force = prefix_sums(
            masses.iter().zip(&prefix_mass).map(|(&w, &before)| w * (before + w * lit(0.5) - half_total)),
        );
        Self { positions, masses, prefix_mass, prefix_moment, prefix_force, total, merges }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    /// Total mass `M`.
    pub fn total_mass(&self) -> T {
        self.total
    }

    /// Mass of the first `k` atoms, `0 <= k <= len()`.
    pub fn prefix_mass(&self, k: usize) -> T {
        self.prefix_mass[k]
    }

    /// `sum_{i<k} w_i eta_i`.
    pub fn prefix_moment(&self, k: usize) -> T {
        self.prefix_moment[k]
    }

    /// `sum_{i<k} w_i mtilde_0(eta_i)`.
    pub fn prefix_force(&self, k: usize) -> T {
        self.prefix_force[k]
    }

    /// Atoms merged at construction because they shared a position.
    pub fn merges(&self) -> &[MergeWarning] {
        &self.merges
    }

    /// Number of atoms strictly left of `x`.
    pub fn count_below(&self, x: T) -> usize {
        self.positions.partition_point(|&p| p < x)
    }

    /// Number of atoms at or left of `x`.
    pub fn count_at_or_below(&self, x: T) -> usize {
        self.positions.partition_point(|&p| p <= x)
    }

    /// `m_0(x-)`: mass strictly left of `x`.
    pub fn cdf_left(&self, x: T) -> T {
        self.prefix_mass[self.count_below(x)]
    }

    /// `m_0(x+)`: mass at or left of `x`.
    pub fn cdf_right(&self, x: T) -> T {
        self.prefix_mass[self.count_at_or_below(x)]
    }

    /// Potential gradient `(m_0(x-) + m_0(x+) - M) / 2`.
    pub fn mtilde0(&self, x: T) -> T {
        (self.cdf_left(x) + self.cdf_right(x) - self.total) * lit(0.5)
    }

    /// `m_0(x-) - M/2`.
    pub fn mtilde0_left(&self, x: T) -> T {
        self.cdf_left(x) - self.total * lit(0.5)
    }

    /// `m_0(x+) - M/2`.
    pub fn mtilde0_right(&self, x: T) -> T {
        self.cdf_right(x) - self.total * lit(0.5)
    }

    /// Symmetric value at atom `i`: mass before it plus half its own mass, minus `M/2`.
    pub fn atom_mtilde(&self, i: usize) -> T {
        self.prefix_mass[i] + self.masses[i] * lit(0.5) - self.total * lit(0.5)
    }

    /// Image of the measure under `x -> -x`.
    pub fn reflect(&self) -> Self {
        let atoms: Vec<Atom<T>> = self
            .positions
            .iter()
            .zip(&self.masses)
            .rev()
            .map(|(&p, &w)| Atom::new(-p, w, T::zero()))
            .collect();
        Self::from_sorted(&atoms, Vec::new())
    }
}

/// Initial data: atomic density, per-atom velocity, and the relaxation time.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData<T> {
    measure: AtomicMeasure<T>,
    velocities: Vec<T>,
    tau: T,
    max_speed: T,
    /// Prefix sums of `w_i u_i`.
    prefix_momentum: Vec<T>,
    /// Prefix sums of `w_i u_i^2`.
    prefix_energy: Vec<T>,
}

impl<T: Scalar> InitialData<T> {
    /// Builds initial data from atoms in any order. Atoms sharing a position are merged.
    pub fn new(atoms: impl IntoIterator<Item = Atom<T>>, tau: T) -> Result<Self> {
        check_tau(tau)?;
        let (atoms, merges) = sort_and_merge(atoms.into_iter().collect())?;
        let measure = AtomicMeasure::from_sorted(&atoms, merges);
        let velocities = atoms.iter().map(|a| a.velocity).collect();
        Ok(Self::assemble(measure, velocities, tau))
    }

    /// Attaches velocities (one per atom, in position order) to an existing measure.
    pub fn from_measure(measure: AtomicMeasure<T>, velocities: Vec<T>, tau: T) -> Result<Self> {
        check_tau(tau)?;
        if velocities.len() != measure.len() {
            return Err(Error::LengthMismatch { expected: measure.len(), got: velocities.len() });
        }
        if let Some(index) = velocities.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidAtom { index, reason: "velocity is not finite" });
        }
        Ok(Self::assemble(measure, velocities, tau))
    }

    fn assemble(measure: AtomicMeasure<T>, velocities: Vec<T>, tau: T) -> Self {
        let max_speed = velocities.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let prefix_momentum =
            prefix_sums(measure.masses().iter().zip(&velocities).map(|(&w, &u)| w * u));
        let prefix_energy =
            prefix_sums(measure.masses().iter().zip(&velocities).map(|(&w, &u)| w * u * u));
        Self { measure, velocities, tau, max_speed, prefix_momentum, prefix_energy }
    }

    /// Same atoms and velocities with a different relaxation time.
    pub fn with_tau(&self, tau: T) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self { tau, ..self.clone() })
    }

    /// Same atoms at rest.
    pub fn at_rest(&self) -> Self {
        Self::assemble(self.measure.clone(), vec![T::zero(); self.len()], self.tau)
    }

    pub fn measure(&self) -> &AtomicMeasure<T> {
        &self.measure
    }

    pub fn velocities(&self) -> &[T] {
        &self.velocities
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    /// `U_0 = max |u_i|`.
    pub fn max_speed(&self) -> T {
        self.max_speed
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    pub fn total_mass(&self) -> T {
        self.measure.total_mass()
    }

    pub fn atom(&self, i: usize) -> Atom<T> {
        Atom::new(self.measure.positions()[i], self.measure.masses()[i], self.velocities[i])
    }

    pub fn atoms(&self) -> impl Iterator<Item = Atom<T>> + '_ {
        (0..self.len()).map(|i| self.atom(i))
    }

    /// `sum_{i<k} w_i u_i`.
    pub fn prefix_momentum(&self, k: usize) -> T {
        self.prefix_momentum[k]
    }

    /// `sum_{i<k} w_i u_i^2`.
    pub fn prefix_energy(&self, k: usize) -> T {
        self.prefix_energy[k]
    }

    /// Total initial momentum `Q(0)`.
    pub fn total_momentum(&self) -> T {
        self.prefix_momentum[self.len()]
    }
}

fn check_tau<T: Scalar>(tau: T) -> Result<()> {
    if tau.is_finite() && tau > T::zero() && tau <= T::one() {
        Ok(())
    } else {
        Err(Error::TauOutOfRange { tau: to_f64(tau) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_atoms() -> AtomicMeasure<f64> {
        AtomicMeasure::new([(-1.0, 0.5), (1.0, 0.5)]).unwrap()
    }

    #[test]
    fn cdf_queries() {
        let empty = AtomicMeasure::<f64>::empty();
        assert_eq!(empty.cdf_left(5.0), 0.0);
        let m = two_atoms();
        assert_eq!(m.cdf_left(0.0), 0.5);
        assert_eq!(m.cdf_left(-1.0), 0.0);
        assert_eq!(m.cdf_right(-1.0), 0.5);
        let single = AtomicMeasure::new([(0.0, 1.0)]).unwrap();
        assert_eq!(single.cdf_right(-3.0), 0.0);
        assert_eq!(single.cdf_right(0.0), 1.0);
    }

    #[test]
    fn mtilde_values() {
        let single = AtomicMeasure::new([(0.0, 1.0)]).unwrap();
        assert_eq!(single.mtilde0(0.0), 0.0);
        let m = two_atoms();
        assert_eq!(m.mtilde0(-1.0), -0.25);
        assert_eq!(m.mtilde0_right(-1.0), 0.0);
        assert_eq!(m.mtilde0_left(-1.0), -0.5);
        assert_eq!(m.atom_mtilde(0), -0.25);
        assert_eq!(m.atom_mtilde(1), 0.25);
    }

    #[test]
    fn duplicates_are_merged_with_momentum_average() {
        let data = InitialData::new(
            [Atom::new(1.0, 1.0, 2.0), Atom::new(0.0, 1.0, 0.0), Atom::new(1.0, 3.0, -2.0)],
            1.0,
        )
        .unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.measure().masses(), &[1.0, 4.0]);
        assert_eq!(data.velocities(), &[0.0, -1.0]);
        assert_eq!(data.measure().merges().len(), 1);
        assert_eq!(data.measure().merges()[0].count, 2);
        assert_eq!(data.max_speed(), 1.0);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            AtomicMeasure::new([(0.0, 0.0)]),
            Err(Error::InvalidAtom { index: 0, .. })
        ));
        assert!(matches!(
            AtomicMeasure::new([(f64::NAN, 1.0)]),
            Err(Error::InvalidAtom { .. })
        ));
        assert!(matches!(
            InitialData::new([Atom::new(0.0, 1.0, 0.0)], 1.5),
            Err(Error::TauOutOfRange { .. })
        ));
        assert!(matches!(
            InitialData::new([Atom::new(0.0, 1.0, 0.0)], 0.0),
            Err(Error::TauOutOfRange { .. })
        ));
        assert!(matches!(
            InitialData::from_measure(two_atoms(), vec![0.0], 1.0),
            Err(Error::LengthMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn prefix_caches() {
        let data = InitialData::new(
            [Atom::new(-1.0, 0.5, 1.0), Atom::new(2.0, 1.5, -1.0)],
            0.5,
        )
        .unwrap();
        let m = data.measure();
        assert_eq!(m.prefix_moment(2), -0.5 + 3.0);
        assert_eq!(data.prefix_momentum(2), 0.5 - 1.5);
        assert_eq!(data.prefix_energy(2), 2.0);
        // sum_i w_i mtilde_i telescopes to zero over the whole measure
        assert!(f64::abs(m.prefix_force(2)) < 1e-15);
    }

    #[test]
    fn generic_over_f32() {
        let m = AtomicMeasure::<f32>::new([(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(m.mtilde0(-1.0), -0.25);
    }

    fn arb_measure() -> impl Strategy<Value = AtomicMeasure<f64>> {
        prop::collection::vec((-10.0..10.0f64, 0.01..2.0f64), 0..30)
            .prop_map(|v| AtomicMeasure::new(v).unwrap())
    }

    proptest! {
        #[test]
        fn cdf_gap_is_atom_mass(m in arb_measure(), x in -12.0..12.0f64) {
            let l = m.cdf_left(x);
            let r = m.cdf_right(x);
            prop_assert!(l <= r);
            prop_assert!(l >= 0.0 && r <= m.total_mass() * (1.0 + 1e-15));
            match m.positions().iter().position(|&p| p == x) {
                Some(i) => prop_assert!((r - l - m.masses()[i]).abs() < 1e-12),
                None => prop_assert_eq!(l, r),
            }
            for &p in m.positions() {
                prop_assert!((m.cdf_right(p) - m.cdf_left(p)) > 0.0);
            }
            prop_assert_eq!(m.cdf_left(f64::INFINITY), m.total_mass());
            prop_assert_eq!(m.cdf_left(f64::NEG_INFINITY), 0.0);
        }

        #[test]
        fn mtilde_monotone_and_odd(m in arb_measure(), x in -12.0..12.0f64, dx in 0.0..3.0f64) {
            let half = m.total_mass() / 2.0;
            let a = m.mtilde0(x);
            prop_assert!(a >= -half - 1e-12 && a <= half + 1e-12);
            prop_assert!(m.mtilde0(x + dx) >= a - 1e-12);
            prop_assert!(m.mtilde0_left(x) <= a + 1e-12 && a <= m.mtilde0_right(x) + 1e-12);
            let r = m.reflect();
            prop_assert!((r.mtilde0(-x) + a).abs() < 1e-12);
        }
    }
}
