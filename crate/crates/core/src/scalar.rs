//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the solver is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + core::ops::AddAssign
    + core::ops::SubAssign
    + core::ops::MulAssign
    + core::ops::DivAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Tolerance on `| |v| - 1 |` accepted for a unit vector.
    fn norm_tolerance() -> Self;

    /// Norms below this are treated as degenerate during renormalization.
    fn degenerate_norm() -> Self;

    /// Lossy conversion from `f64`; values outside the range saturate to ±inf.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(|| if x < 0.0 { Self::neg_infinity() } else { Self::infinity() })
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    #[inline]
    fn norm_tolerance() -> Self {
        1e-12
    }

    #[inline]
    fn degenerate_norm() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    #[inline]
    fn norm_tolerance() -> Self {
        1e-5
    }

    #[inline]
    fn degenerate_norm() -> Self {
        1e-6
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub(crate) fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

#[inline]
pub(crate) fn dist_sq<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversion_saturates() {
        assert_eq!(<f32 as Scalar>::of(1e300), f32::INFINITY);
        assert_eq!(<f32 as Scalar>::of(-1e300), f32::NEG_INFINITY);
        assert_eq!(<f64 as Scalar>::of(0.25), 0.25);
    }

    #[test]
    fn helpers() {
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]), 11.0);
        assert_eq!(norm_sq(&[3.0f32, 4.0]), 25.0);
        assert_eq!(dist_sq(&[1.0, 1.0], &[0.0, 0.0]), 2.0);
    }
}
