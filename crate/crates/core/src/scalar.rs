//! Floating point abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the detector is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 constant representable")
    }

    /// Lossy conversion from a count.
    #[inline]
    fn of_usize(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Mass below which `p ln p` is treated as zero.
    fn entropy_floor() -> Self;
}

impl Scalar for f64 {
    fn entropy_floor() -> Self {
        1e-300
    }
}

impl Scalar for f32 {
    fn entropy_floor() -> Self {
        f32::MIN_POSITIVE
    }
}

/// Numerically stable `ln(sum(exp(v)))` with a fixed left-to-right accumulation order.
///
/// Returns `-inf` for an empty slice or when every entry is `-inf`.
pub fn log_sum_exp<T: Scalar>(values: &[T]) -> T {
    let max = values
        .iter()
        .copied()
        .fold(T::neg_infinity(), |acc, v| if v > acc { v } else { acc });
    if max == T::neg_infinity() {
        return T::neg_infinity();
    }
    if max == T::infinity() {
        return T::infinity();
    }
    let mut acc = T::zero();
    for &v in values {
        acc += (v - max).exp();
    }
    max + acc.ln()
}

/// Total order used for sorting finite scores and sentinels; NaN sorts as equal.
#[inline]
pub(crate) fn cmp_scalar<T: Scalar>(a: T, b: T) -> std::cmp::Ordering {
    a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal)
}
