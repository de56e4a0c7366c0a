use crate::scalar::{lit, Scalar};

/// Numerical tolerances shared by the formula layer and the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// Two prefix sums tie when they differ by at most `tie * (1 + |nu|)`.
    pub tie: T,
    /// Relative stopping width for forward-position bisection.
    pub position: T,
    /// Collisions closer than `event * (1 + t)` in time are merged into one event.
    pub event: T,
    /// Relative accuracy of collision-time roots.
    pub root: T,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        let eps = T::epsilon();
        Self {
            tie: lit::<T>(1e-12).max(eps * lit(64.0)),
            position: lit::<T>(1e-12).max(eps * lit(16.0)),
            event: lit::<T>(1e-11).max(eps * lit(64.0)),
            root: lit::<T>(1e-13).max(eps * lit(4.0)),
        }
    }
}
