//! Scalar abstraction and a few numerically careful primitives.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the solver is generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub fn lit<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in scalar type")
}

/// Lossy conversion back to `f64`, used for error payloads and reports.
#[inline]
pub fn to_f64<T: Scalar>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Exponent beyond which `exp(-z)` is flushed to zero.
pub const EXP_FLUSH: f64 = 700.0;

/// `1 - exp(-z)` for `z >= 0`, accurate for small `z` and exact (`1`) past the flush limit.
#[inline]
pub fn one_minus_exp_neg<T: Scalar>(z: T) -> T {
    if z > lit(EXP_FLUSH) {
        T::one()
    } else {
        -(-z).exp_m1()
    }
}

/// `exp(-z)` with the same flush convention as [`one_minus_exp_neg`].
#[inline]
pub fn exp_neg<T: Scalar>(z: T) -> T {
    if z > lit(EXP_FLUSH) {
        T::zero()
    } else {
        (-z).exp()
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), carry: T::zero() }
    }

    #[inline]
    pub fn add(&mut self, v: T) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry = self.carry + ((self.sum - t) + v);
        } else {
            self.carry = self.carry + ((v - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}

impl<T: Scalar> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut s = Self::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Running prefix sums `out[k] = v[0] + ... + v[k-1]`, `out[0] = 0`, compensated.
pub fn prefix_sums<T: Scalar>(values: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut acc = CompensatedSum::new();
    let mut out = vec![T::zero()];
    for v in values {
        acc.add(v);
        out.push(acc.value());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_argument_is_accurate() {
        let z = 1e-12_f64;
        let naive = 1.0 - (-z).exp();
        let good = one_minus_exp_neg(z);
        assert!((good - z).abs() < 1e-24);
        // naive subtraction loses most digits here
        assert!((naive - z).abs() > 1e-20);
    }

    #[test]
    fn flush_past_limit() {
        assert_eq!(exp_neg(701.0_f64), 0.0);
        assert_eq!(one_minus_exp_neg(701.0_f64), 1.0);
        assert_eq!(exp_neg(1e6_f32), 0.0);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let vals = [1e16_f64, 1.0, -1e16, 1.0];
        let s: CompensatedSum<f64> = vals.iter().copied().collect();
        assert_eq!(s.value(), 2.0);
        assert_eq!(prefix_sums(vals), vec![0.0, 1e16, 1e16 + 1.0, 1.0, 2.0]);
    }
}
