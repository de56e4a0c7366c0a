//! Drift equations: the formal limit of the relaxed system as `tau -> 0`.
//!
//! Mass follows from the drift potential `Fbar` exactly as in the relaxed
//! system; the momentum is then a function of the mass alone,
//! `qbar = -mbar^2/2 + (M/2) mbar`.

use crate::eps::Branch;
use crate::error::{Error, Result};
use crate::measure::AtomicMeasure;
use crate::potentials::{minimize_prefix, MinimizerResult, PotentialCoefficients};
use crate::scalar::{lit, to_f64, Scalar};
use crate::tolerance::Tolerances;

/// Drift fields at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftSample<T> {
    pub x: T,
    pub t: T,
    pub mbar: T,
    pub qbar: T,
    pub ubar: T,
    pub branch: Branch,
}

#[derive(Debug, Clone)]
pub struct DriftSolution<T> {
    measure: AtomicMeasure<T>,
    tol: Tolerances<T>,
}

impl<T: Scalar> DriftSolution<T> {
    pub fn new(measure: AtomicMeasure<T>) -> Self {
        Self::with_tolerances(measure, Tolerances::default())
    }

    pub fn with_tolerances(measure: AtomicMeasure<T>, tol: Tolerances<T>) -> Self {
        Self { measure, tol }
    }

    pub fn measure(&self) -> &AtomicMeasure<T> {
        &self.measure
    }

    pub fn minimize(&self, x: T, t: T) -> Result<MinimizerResult<T>> {
        let w = PotentialCoefficients::drift(t)?;
        minimize_prefix(&self.measure, |_| T::zero(), T::zero(), &w, x, self.tol.tie)
    }

    /// Prefix lengths `(k_min, k_max)` at `(x, t)`; `t = 0` reads the initial measure.
    fn prefix_range(&self, x: T, t: T) -> Result<(usize, usize)> {
        if self.measure.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if t == T::zero() {
            return Ok((self.measure.count_below(x), self.measure.count_at_or_below(x)));
        }
        let r = self.minimize(x, t)?;
        Ok((r.k_min, r.k_max))
    }

    /// Minimum of the drift potential.
    pub fn eval_nu_bar(&self, x: T, t: T) -> Result<T> {
        Ok(self.minimize(x, t)?.nu)
    }

    /// Drift mass strictly left of `x`.
    pub fn eval_mbar(&self, x: T, t: T) -> Result<T> {
        let (k, _) = self.prefix_range(x, t)?;
        Ok(self.measure.prefix_mass(k))
    }

    /// Drift momentum as the prefix sum of `-w_i mtilde_i`, checked against the closed form.
    pub fn eval_qbar(&self, x: T, t: T) -> Result<T> {
        let (k, _) = self.prefix_range(x, t)?;
        self.checked_qbar(k, x, t)
    }

    fn checked_qbar(&self, k: usize, x: T, t: T) -> Result<T> {
        let prefix = -self.measure.prefix_force(k);
        let m = self.measure.prefix_mass(k);
        let total = self.measure.total_mass();
        let closed = -m * m * lit(0.5) + total * lit(0.5) * m;
        // closed form peaks at M^2/8, which sets the scale when both sides vanish
        let scale = prefix.abs().max(closed.abs()).max(total * total * lit(0.125));
        let rel = lit::<T>(1e-14).max(T::epsilon() * lit(8.0));
        if (prefix - closed).abs() > rel * scale {
            return Err(Error::IdentityViolation {
                x: to_f64(x),
                t: to_f64(t),
                prefix: to_f64(prefix),
                closed: to_f64(closed),
            });
        }
        Ok(prefix)
    }

    /// Drift velocity `-(mbar(x-) + mbar(x+) - M)/2` with its branch.
    pub fn eval_ubar(&self, x: T, t: T) -> Result<(T, Branch)> {
        let (a, b) = self.prefix_range(x, t)?;
        Ok(self.velocity(a, b))
    }

    fn velocity(&self, a: usize, b: usize) -> (T, Branch) {
        let m = &self.measure;
        let u = -(m.prefix_mass(a) + m.prefix_mass(b) - m.total_mass()) * lit(0.5);
        let branch = match b - a {
            0 => Branch::Offsupport,
            1 => Branch::Characteristic,
            _ => Branch::DeltaShock,
        };
        (u, branch)
    }

    /// All drift fields at `(x, t)`.
    pub fn eval(&self, x: T, t: T) -> Result<DriftSample<T>> {
        let (a, b) = self.prefix_range(x, t)?;
        let (ubar, branch) = self.velocity(a, b);
        Ok(DriftSample { x, t, mbar: self.measure.prefix_mass(a), qbar: self.checked_qbar(a, x, t)?, ubar, branch })
    }
}
