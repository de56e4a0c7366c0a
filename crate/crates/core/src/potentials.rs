//! Generalized potentials and their exact minimization.
//!
//! For atomic data every potential is piecewise constant in `y`, and its value
//! on `(eta_k, eta_{k+1}]` is the prefix sum
//!
//! ```text
//! T_k(x, t) = sum_{i < k} w_i (eta_i + u_i A(t) + mtilde_i B(t) - x)
//! ```
//!
//! so minimizing over `y` is an argmin over `k = 0..=N`. The cached prefix sums
//! on [`AtomicMeasure`] and [`InitialData`] make each `T_k` an O(1) evaluation.

use crate::error::{Error, Result};
use crate::measure::{AtomicMeasure, InitialData};
use crate::scalar::{exp_neg, lit, one_minus_exp_neg, to_f64, Scalar};

/// Which system the time weights belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dynamics {
    EulerPoisson,
    Drift,
}

/// Time weights multiplying `u_0` and `mtilde_0` in the potentials.
///
/// For the Euler-Poisson system `A = tau (1 - e^{-t/tau})`,
/// `B = tau^2 - tau^2 e^{-t/tau} - tau t` and `decay = e^{-t/tau}`.
/// The drift potential uses `A = 0`, `B = -t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialCoefficients<T> {
    pub velocity_weight: T,
    pub force_weight: T,
    pub decay: T,
    pub tau: T,
    /// Physical time at which the weights are evaluated.
    pub time: T,
    pub dynamics: Dynamics,
}

/// `e^{-z} - 1 + z`, accurate near zero.
fn exp_defect<T: Scalar>(z: T) -> T {
    if z < lit(1e-2) {
        // alternating series, truncation error below z^8/8! ~ 2.5e-21
        let mut term = z * z * lit(0.5);
        let mut sum = term;
        for n in 3..=8 {
            term = -term * z / lit(n as f64);
            sum = sum + term;
        }
        sum
    } else {
        z - one_minus_exp_neg(z)
    }
}

impl<T: Scalar> PotentialCoefficients<T> {
    /// Weights of the damped Euler-Poisson system at time `t > 0`.
    pub fn euler_poisson(tau: T, t: T) -> Result<Self> {
        check_time(t)?;
        let z = t / tau;
        Self {
            velocity_weight: tau * one_minus_exp_neg(z),
            force_weight: -tau * tau * exp_defect(z),
            decay: exp_neg(z),
            tau,
            time: t,
            dynamics: Dynamics::EulerPoisson,
        }
        .finite()
    }

    /// Weights at physical time `t_slow / tau` computed directly from the slow time,
    /// so that `t_slow / tau^2` never has to be formed as an intermediate time.
    pub fn slow_time(tau: T, t_slow: T) -> Result<Self> {
        check_time(t_slow)?;
        let z = t_slow / (tau * tau);
        Self {
            velocity_weight: tau * one_minus_exp_neg(z),
            force_weight: -tau * tau * exp_defect(z),
            decay: exp_neg(z),
            tau,
            time: t_slow / tau,
            dynamics: Dynamics::EulerPoisson,
        }
        .finite()
    }

    fn finite(self) -> Result<Self> {
        if self.velocity_weight.is_finite() && self.force_weight.is_finite() && self.time.is_finite() {
            Ok(self)
        } else {
            Err(Error::Overflow { t: to_f64(self.time) })
        }
    }

    /// Weights of the drift potential at time `t > 0`.
    pub fn drift(t: T) -> Result<Self> {
        check_time(t)?;
        Ok(Self {
            velocity_weight: T::zero(),
            force_weight: -t,
            decay: T::zero(),
            tau: T::zero(),
            time: t,
            dynamics: Dynamics::Drift,
        })
    }

    /// Arbitrary weights; used to compare potentials built from different routes.
    pub fn custom(velocity_weight: T, force_weight: T, decay: T, tau: T, time: T) -> Self {
        Self { velocity_weight, force_weight, decay, tau, time, dynamics: Dynamics::EulerPoisson }
    }

    /// Free trajectory `eta + u A + mtilde B` of a particle that never collides.
    #[inline]
    pub fn free_position(&self, eta: T, u0: T, mtilde: T) -> T {
        eta + u0 * self.velocity_weight + mtilde * self.force_weight
    }

    /// Velocity along the free trajectory: `u e^{-t/tau} - mtilde tau (1 - e^{-t/tau})`.
    #[inline]
    pub fn free_velocity(&self, u0: T, mtilde: T) -> T {
        match self.dynamics {
            Dynamics::EulerPoisson => u0 * self.decay - mtilde * self.velocity_weight,
            Dynamics::Drift => -mtilde,
        }
    }

    /// Initial speed of the characteristic joining `(y, 0)` to `(x, t)` when the
    /// force along it is `mtilde`.
    #[inline]
    pub fn connecting_speed(&self, y: T, mtilde: T, x: T) -> T {
        (x - y - mtilde * self.force_weight) / self.velocity_weight
    }

    /// Upper bound of the Oleinik difference quotient, `e^{-t/tau} / (tau (1 - e^{-t/tau}))`.
    pub fn oleinik_bound(&self) -> T {
        self.decay / self.velocity_weight
    }
}

fn check_time<T: Scalar>(t: T) -> Result<()> {
    if t > T::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveTime { t: to_f64(t) })
    }
}

/// Outcome of minimizing a potential over `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizerResult<T> {
    /// Minimum value `nu(x, t)`.
    pub nu: T,
    /// Infimum of minimizers intersected with the support.
    pub y_star: T,
    /// Right limit in `x` of `y_star`.
    pub y_star_up: T,
    /// Whether the minimum is attained at `y_star` itself rather than at `y_star+`.
    pub attained_at_y_star: bool,
    /// Smallest and largest minimizing prefix lengths.
    pub k_min: usize,
    pub k_max: usize,
}

impl<T: Scalar> MinimizerResult<T> {
    /// Number of atoms concentrated at the query point.
    pub fn concentrated_atoms(&self) -> usize {
        self.k_max - self.k_min
    }
}

/// Relative tolerance used to decide that two prefix sums tie.
#[inline]
pub(crate) fn ties<T: Scalar>(value: T, nu: T, tol: T) -> bool {
    value - nu <= tol * (T::one() + nu.abs())
}

/// Prefix potential `T_k` for any weights, with `momentum(k) = sum_{i<k} w_i u_i`.
#[inline]
pub(crate) fn prefix_potential<T: Scalar>(
    measure: &AtomicMeasure<T>,
    momentum: impl Fn(usize) -> T,
    w: &PotentialCoefficients<T>,
    x: T,
    k: usize,
) -> T {
    measure.prefix_moment(k) + w.velocity_weight * momentum(k) + w.force_weight * measure.prefix_force(k)
        - x * measure.prefix_mass(k)
}

/// Range of prefix lengths that can contain a minimizer, from the coercivity window.
pub(crate) fn coercivity_range<T: Scalar>(
    measure: &AtomicMeasure<T>,
    max_speed: T,
    w: &PotentialCoefficients<T>,
    x: T,
) -> (usize, usize) {
    let half = measure.total_mass() * lit(0.5);
    let spread = max_speed * w.velocity_weight - half * w.force_weight;
    let lo = measure.count_below(x - spread);
    let hi = measure.count_at_or_below(x + spread);
    (lo, hi.max(lo))
}

/// Minimizes `T_k` over the coercivity window and classifies the minimizer.
pub(crate) fn minimize_prefix<T: Scalar>(
    measure: &AtomicMeasure<T>,
    momentum: impl Fn(usize) -> T,
    max_speed: T,
    w: &PotentialCoefficients<T>,
    x: T,
    tol: T,
) -> Result<MinimizerResult<T>> {
    if measure.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let (lo, hi) = coercivity_range(measure, max_speed, w, x);
    let values: Vec<T> = (lo..=hi).map(|k| prefix_potential(measure, &momentum, w, x, k)).collect();
    let nu = values.iter().copied().fold(T::infinity(), T::min);
    if !nu.is_finite() || values.iter().any(|v| v.is_nan()) {
        return Err(Error::Overflow { t: to_f64(w.time) });
    }
    let k_min = lo + values.iter().position(|&v| ties(v, nu, tol)).expect("window nonempty");
    let k_max = lo + values.iter().rposition(|&v| ties(v, nu, tol)).expect("window nonempty");
    let attained = k_min == 0 || ties(prefix_potential(measure, &momentum, w, x, k_min - 1), nu, tol);
    let positions = measure.positions();
    Ok(MinimizerResult {
        nu,
        y_star: positions[k_min.max(1) - 1],
        y_star_up: positions[k_max.max(1) - 1],
        attained_at_y_star: attained,
        k_min,
        k_max,
    })
}

/// Brute-force minimization over every prefix length, without the window restriction.
pub fn minimize_unrestricted<T: Scalar>(
    data: &InitialData<T>,
    w: &PotentialCoefficients<T>,
    x: T,
    tol: T,
) -> Result<(T, usize, usize)> {
    if data.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let values: Vec<T> = (0..=data.len())
        .map(|k| prefix_potential(data.measure(), |j| data.prefix_momentum(j), w, x, k))
        .collect();
    Ok(argmin_prefix(&values, tol))
}

/// `(min, first argmin, last argmin)` of a slice under the tie tolerance.
pub fn argmin_prefix<T: Scalar>(values: &[T], tol: T) -> (T, usize, usize) {
    let nu = values.iter().copied().fold(T::infinity(), T::min);
    let first = values.iter().position(|&v| ties(v, nu, tol)).unwrap_or(0);
    let last = values.iter().rposition(|&v| ties(v, nu, tol)).unwrap_or(0);
    (nu, first, last)
}

/// `(max, first argmax, last argmax)` of a slice under the tie tolerance.
pub fn argmax_prefix<T: Scalar>(values: &[T], tol: T) -> (T, usize, usize) {
    let negated: Vec<T> = values.iter().map(|&v| -v).collect();
    let (m, a, b) = argmin_prefix(&negated, tol);
    (-m, a, b)
}

/// `F(y; x, t)`: the potential summed over atoms strictly left of `y`.
pub fn eval_f<T: Scalar>(data: &InitialData<T>, y: T, x: T, t: T) -> Result<T> {
    let w = PotentialCoefficients::euler_poisson(data.tau(), t)?;
    let k = data.measure().count_below(y);
    Ok(prefix_potential(data.measure(), |j| data.prefix_momentum(j), &w, x, k))
}

/// `F(y+; x, t)`: the potential including an atom sitting at `y`.
pub fn eval_f_right<T: Scalar>(data: &InitialData<T>, y: T, x: T, t: T) -> Result<T> {
    let w = PotentialCoefficients::euler_poisson(data.tau(), t)?;
    let k = data.measure().count_at_or_below(y);
    Ok(prefix_potential(data.measure(), |j| data.prefix_momentum(j), &w, x, k))
}

/// Minimizes `F(.; x, t)` with the given weights.
pub fn minimize_with<T: Scalar>(
    data: &InitialData<T>,
    w: &PotentialCoefficients<T>,
    x: T,
    tol: T,
) -> Result<MinimizerResult<T>> {
    minimize_prefix(data.measure(), |j| data.prefix_momentum(j), data.max_speed(), w, x, tol)
}

/// Minimizes `F(.; x, t)`.
pub fn minimize_f<T: Scalar>(data: &InitialData<T>, x: T, t: T, tol: T) -> Result<MinimizerResult<T>> {
    let w = PotentialCoefficients::euler_poisson(data.tau(), t)?;
    minimize_with(data, &w, x, tol)
}

/// Initial speed `c(y; x, t)` of the characteristic joining `(y, 0)` and `(x, t)`.
pub fn initial_speed_c<T: Scalar>(data: &InitialData<T>, y: T, x: T, t: T) -> Result<T> {
    let w = PotentialCoefficients::euler_poisson(data.tau(), t)?;
    Ok(w.connecting_speed(y, data.measure().mtilde0(y), x))
}

/// `c(y-; x, t)`.
pub fn initial_speed_c_left<T: Scalar>(data: &InitialData<T>, y: T, x: T, t: T) -> Result<T> {
    let w = PotentialCoefficients::euler_poisson(data.tau(), t)?;
    Ok(w.connecting_speed(y, data.measure().mtilde0_left(y), x))
}

/// `c(y+; x, t)`.
pub fn initial_speed_c_right<T: Scalar>(data: &InitialData<T>, y: T, x: T, t: T) -> Result<T> {
    let w = PotentialCoefficients::euler_poisson(data.tau(), t)?;
    Ok(w.connecting_speed(y, data.measure().mtilde0_right(y), x))
}

/// Drift potential `Fbar(y; x, t) = sum_{eta_i < y} w_i (eta_i - t mtilde_i - x)`.
pub fn eval_fbar<T: Scalar>(measure: &AtomicMeasure<T>, y: T, x: T, t: T) -> Result<T> {
    let w = PotentialCoefficients::drift(t)?;
    Ok(prefix_potential(measure, |_| T::zero(), &w, x, measure.count_below(y)))
}

/// Minimizes the drift potential.
pub fn minimize_fbar<T: Scalar>(
    measure: &AtomicMeasure<T>,
    x: T,
    t: T,
    tol: T,
) -> Result<MinimizerResult<T>> {
    let w = PotentialCoefficients::drift(t)?;
    minimize_prefix(measure, |_| T::zero(), T::zero(), &w, x, tol)
}

/// Smallest admissible-plus-one constant for the second and third potentials.
pub fn default_k<T: Scalar>(data: &InitialData<T>) -> T {
    k_bound(data) + T::one()
}

fn k_bound<T: Scalar>(data: &InitialData<T>) -> T {
    data.max_speed() + data.total_mass() * data.tau() * lit(0.5)
}

fn check_k<T: Scalar>(data: &InitialData<T>, k: T) -> Result<()> {
    let bound = k_bound(data);
    if k > bound {
        Ok(())
    } else {
        Err(Error::BadConstantK { k: to_f64(k), bound: to_f64(bound) })
    }
}

fn check_positions<T: Scalar>(data: &InitialData<T>, forward_positions: &[T]) -> Result<()> {
    if forward_positions.len() == data.len() {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected: data.len(), got: forward_positions.len() })
    }
}

/// Prefix values `G_k` of the second potential, `k = 0..=N`.
pub fn g_prefix_values<T: Scalar>(
    data: &InitialData<T>,
    forward_positions: &[T],
    x: T,
    t: T,
    k: T,
) -> Result<Vec<T>> {
    check_k(data, k)?;
    check_positions(data, forward_positions)?;
    let w = PotentialCoefficients::euler_poisson(data.tau(), t)?;
    let m = data.measure();
    let mut acc = crate::scalar::CompensatedSum::new();
    let mut out = vec![T::zero()];
    for (i, &xi) in forward_positions.iter().enumerate() {
        let v = w.free_velocity(data.velocities()[i], m.atom_mtilde(i));
        acc.add(m.masses()[i] * (v + k) * (xi - x));
        out.push(acc.value());
    }
    Ok(out)
}

/// Prefix values `H_k` of the third potential, `k = 0..=N`.
pub fn h_prefix_values<T: Scalar>(
    data: &InitialData<T>,
    forward_positions: &[T],
    x: T,
    t: T,
    k: T,
) -> Result<Vec<T>> {
    check_k(data, k)?;
    check_positions(data, forward_positions)?;
    let w = PotentialCoefficients::euler_poisson(data.tau(), t)?;
    let m = data.measure();
    let tau = data.tau();
    let scale = -w.decay / tau;
    let mut acc = crate::scalar::CompensatedSum::new();
    let mut out = vec![T::zero()];
    for (i, &xi) in forward_positions.iter().enumerate() {
        acc.add(m.masses()[i] * (data.velocities()[i] + tau * m.atom_mtilde(i) + k) * (xi - x));
        out.push(scale * acc.value());
    }
    Ok(out)
}

/// Second generalized potential `G(y; x, t)`.
pub fn eval_g<T: Scalar>(
    data: &InitialData<T>,
    forward_positions: &[T],
    y: T,
    x: T,
    t: T,
    k: T,
) -> Result<T> {
    let values = g_prefix_values(data, forward_positions, x, t, k)?;
    Ok(values[data.measure().count_below(y)])
}

/// Third generalized potential `H(y; x, t)`.
pub fn eval_h<T: Scalar>(
    data: &InitialData<T>,
    forward_positions: &[T],
    y: T,
    x: T,
    t: T,
    k: T,
) -> Result<T> {
    let values = h_prefix_values(data, forward_positions, x, t, k)?;
    Ok(values[data.measure().count_below(y)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;
    use approx::assert_abs_diff_eq;

    const TOL: f64 = 1e-12;
    const E1: f64 = 0.367_879_441_171_442_33;

    fn single() -> InitialData<f64> {
        InitialData::new([Atom::new(0.0, 1.0, 1.0)], 1.0).unwrap()
    }

    fn symmetric() -> InitialData<f64> {
        InitialData::new([Atom::new(-1.0, 0.5, 0.0), Atom::new(1.0, 0.5, 0.0)], 1.0).unwrap()
    }

    #[test]
    fn overflowing_weights_are_an_error() {
        assert!(matches!(PotentialCoefficients::<f64>::euler_poisson(0.1, 1.7e308), Err(Error::Overflow { .. })));
        assert!(PotentialCoefficients::<f64>::euler_poisson(1.0, 1e300).is_ok());
    }

    #[test]
    fn coefficients_match_definitions() {
        for &(tau, t) in &[(1.0, 1.0), (0.5, 3.0), (0.1, 1e-7), (1.0, 1e-3), (0.25, 0.02)] {
            let w = PotentialCoefficients::euler_poisson(tau, t).unwrap();
            let e = f64::exp(-t / tau);
            assert_abs_diff_eq!(w.velocity_weight, tau * (1.0 - e), epsilon = 1e-15);
            assert_abs_diff_eq!(w.force_weight, tau * tau - tau * tau * e - tau * t, epsilon = 1e-15);
            assert!(w.force_weight <= 0.0);
            assert!(w.velocity_weight >= 0.0 && w.velocity_weight < tau);
        }
        // tiny time: B ~ -t^2/2 with full relative accuracy
        let w = PotentialCoefficients::euler_poisson(1.0_f64, 1e-8).unwrap();
        assert!((w.force_weight / (-0.5e-16) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn slow_time_matches_direct_weights() {
        let tau = 0.5;
        let a = PotentialCoefficients::slow_time(tau, 1.0).unwrap();
        let b = PotentialCoefficients::euler_poisson(tau, 2.0).unwrap();
        assert_abs_diff_eq!(a.velocity_weight, b.velocity_weight, epsilon = 1e-15);
        assert_abs_diff_eq!(a.force_weight, b.force_weight, epsilon = 1e-15);
        assert_abs_diff_eq!(a.time, 2.0);
        // tiny tau: exponent overflows and the factor is flushed
        let c = PotentialCoefficients::slow_time(1e-3_f64, 1.0).unwrap();
        assert_eq!(c.decay, 0.0);
        assert_abs_diff_eq!(c.force_weight, 1e-6 - 1.0, epsilon = 1e-15);
    }

    #[test]
    fn nonpositive_time_rejected() {
        assert!(matches!(eval_f(&single(), 0.0, 0.0, 0.0), Err(Error::NonPositiveTime { .. })));
        assert!(matches!(minimize_f(&single(), 0.0, -1.0, TOL), Err(Error::NonPositiveTime { .. })));
        assert!(matches!(initial_speed_c(&single(), 0.0, 0.0, 0.0), Err(Error::NonPositiveTime { .. })));
    }

    #[test]
    fn eval_f_examples() {
        let empty = InitialData::<f64>::new([], 1.0).unwrap();
        assert_eq!(eval_f(&empty, 3.0, 1.0, 2.0).unwrap(), 0.0);
        let x = 1.0 - E1;
        assert_abs_diff_eq!(eval_f(&single(), 5.0, x, 1.0).unwrap(), 0.0, epsilon = 1e-15);
        // half * (-1 + (-1/4)(-1/e))
        let v = eval_f(&symmetric(), 0.0, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(v, 0.5 * (-1.0 + 0.25 * E1), epsilon = 1e-15);
        assert_abs_diff_eq!(v, -0.454015, epsilon = 1e-6);
        // left-continuity: an atom at y is excluded, included by the right variant
        assert_eq!(eval_f(&symmetric(), -1.0, 0.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(eval_f_right(&symmetric(), -1.0, 0.0, 1.0).unwrap(), v, epsilon = 1e-15);
    }

    #[test]
    fn minimize_examples() {
        let r = minimize_f(&single(), 1.0 - E1, 1.0, TOL).unwrap();
        assert_abs_diff_eq!(r.nu, 0.0, epsilon = 1e-15);
        assert_eq!((r.k_min, r.k_max), (0, 1));
        assert_eq!((r.y_star, r.y_star_up), (0.0, 0.0));
        assert!(r.attained_at_y_star);

        let r = minimize_f(&symmetric(), 0.0, 1.0, TOL).unwrap();
        assert_abs_diff_eq!(r.nu, -0.454015, epsilon = 1e-6);
        assert_eq!((r.k_min, r.k_max), (1, 1));
        assert_eq!((r.y_star, r.y_star_up), (-1.0, -1.0));
        assert!(!r.attained_at_y_star);

        let r = minimize_f(&symmetric(), 0.0, 6.0, TOL).unwrap();
        assert_eq!((r.k_min, r.k_max), (0, 2));
        assert_eq!((r.y_star, r.y_star_up), (-1.0, 1.0));

        let empty = InitialData::<f64>::new([], 1.0).unwrap();
        assert!(matches!(minimize_f(&empty, 0.0, 1.0, TOL), Err(Error::EmptyMeasure)));
    }

    #[test]
    fn initial_speed_examples() {
        assert_abs_diff_eq!(initial_speed_c(&single(), 0.0, 1.0 - E1, 1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(initial_speed_c(&single(), 0.0, 0.0, 0.3).unwrap(), 0.0);
        let c = initial_speed_c(&symmetric(), -1.0, 0.0, 1.0).unwrap();
        let a = 1.0 - E1;
        assert_abs_diff_eq!(c, 1.0 / a + 0.25 * (1.0 - 1.0 / a), epsilon = 1e-14);
        assert_abs_diff_eq!(c, 1.436483, epsilon = 1e-6);
        let cl = initial_speed_c_left(&symmetric(), -1.0, 0.0, 1.0).unwrap();
        let cr = initial_speed_c_right(&symmetric(), -1.0, 0.0, 1.0).unwrap();
        // tau - t/(1 - e^{-t/tau}) < 0, so the speed grows with mtilde
        assert!(cl < c && c < cr);
    }

    #[test]
    fn drift_examples() {
        let m = symmetric().measure().clone();
        let r = minimize_fbar(&m, 0.0, 1.0, TOL).unwrap();
        assert_eq!((r.k_min, r.k_max), (1, 1));
        assert_abs_diff_eq!(r.nu, -0.375, epsilon = 1e-15);
        assert_eq!(r.y_star, -1.0);
        let r = minimize_fbar(&m, 0.0, 5.0, TOL).unwrap();
        assert_eq!((r.k_min, r.k_max), (0, 2));
        assert_eq!(eval_fbar(&m, -2.0, 0.3, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(eval_fbar(&m, 0.0, 0.0, 1.0).unwrap(), -0.375, epsilon = 1e-15);
    }

    #[test]
    fn bad_k_rejected() {
        let d = symmetric();
        let pos = [-1.0, 1.0];
        assert!(matches!(eval_g(&d, &pos, 0.0, 0.0, 1.0, 0.5), Err(Error::BadConstantK { .. })));
        assert!(matches!(eval_h(&d, &pos, 0.0, 0.0, 1.0, 0.4), Err(Error::BadConstantK { .. })));
        assert!(eval_g(&d, &pos, 0.0, 0.0, 1.0, 0.51).is_ok());
        assert_eq!(default_k(&d), 1.5);
    }
}
