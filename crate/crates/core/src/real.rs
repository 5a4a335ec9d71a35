//! Scalar abstraction shared by the exact-analysis modules.
//!
//! Everything that is pure arithmetic on the magnetization chain is written
//! against [`Real`], so the same code runs in `f32` (cheap sweeps, sanity
//! checks) and `f64` (all acceptance tolerances).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar used throughout the exact modules.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Absolute tolerance for comparing two independently accumulated
    /// log-domain quantities of magnitude up to ~1e5.
    fn log_consistency_tol() -> Self;

    /// Bound used to decide whether an eigen-residual is acceptable.
    fn residual_tol() -> Self;

    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar converts to f64")
    }
}

impl Real for f64 {
    fn log_consistency_tol() -> Self {
        1e-10
    }
    fn residual_tol() -> Self {
        1e-8
    }
}

impl Real for f32 {
    fn log_consistency_tol() -> Self {
        // f32 carries ~7 digits; log weights of order 1e2..1e3 at small n.
        5e-2
    }
    fn residual_tol() -> Self {
        1e-3
    }
}

/// `log(Σ exp(x_i))` without overflow. Returns `-inf` for an empty slice.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let m = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if !m.is_finite() {
        return m;
    }
    let s: T = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp<T: Real>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Neumaier compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

/// Exponentiate when the result is a finite, normal-range number.
pub fn finite_exp<T: Real>(log_value: T) -> Option<T> {
    let v = log_value.exp();
    (v.is_finite() && v > T::zero()).then_some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct_sum_for_small_inputs() {
        let xs = [0.1f64, -2.0, 1.5, 0.0];
        let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-14);
    }

    #[test]
    fn log_sum_exp_survives_huge_arguments() {
        let xs = [1.0e5f64, 1.0e5];
        assert!((log_sum_exp(&xs) - (1.0e5 + 2f64.ln())).abs() < 1e-9);
        assert_eq!(log_sum_exp::<f64>(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn log_add_exp_handles_negative_infinity() {
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
        assert!((log_add_exp(0.0f64, 0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let mut s = CompensatedSum::<f64>::new();
        s.add(1.0);
        s.add(1e100);
        s.add(1.0);
        s.add(-1e100);
        assert_eq!(s.value(), 2.0);
    }
}
