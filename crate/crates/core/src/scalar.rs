use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the numeric core is written against (`f32` or `f64`).
///
/// The tolerances are per type: `f32` cannot hold probability masses to
/// `1e-12`, so its mass checks are correspondingly looser.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Allowed deviation of a distribution's total mass from one.
    const MASS_TOL: f64;
    /// Deviations up to this size are renormalized away by constructors.
    const RENORM_TOL: f64;
    /// Default absolute tolerance of the kl inversion.
    const KL_INV_TOL: f64;
    /// Default stopping threshold on the bound decrease in alternating minimization.
    const BOUND_TOL: f64;

    /// Converts an `f64` literal. Every finite `f64` maps into both supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f64 {
    const MASS_TOL: f64 = 1e-12;
    const RENORM_TOL: f64 = 1e-9;
    const KL_INV_TOL: f64 = 1e-12;
    const BOUND_TOL: f64 = 1e-9;
}

impl Real for f32 {
    const MASS_TOL: f64 = 1e-5;
    const RENORM_TOL: f64 = 1e-3;
    const KL_INV_TOL: f64 = 1e-6;
    const BOUND_TOL: f64 = 1e-6;
}

/// Compensated (Neumaier) summation; profiles can hold millions of masses.
pub(crate) fn compensated_sum<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut carry = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let values = std::iter::once(1.0f64).chain(std::iter::repeat_n(1e-16, 10_000));
        let s = compensated_sum(values);
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }
}
