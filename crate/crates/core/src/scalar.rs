//! Floating-point abstraction for the whole crate.
//!
//! Everything downstream is generic over [`Scalar`] so the same code runs at
//! f32 and f64. Default tolerances are per-type: the strict/loose pair for f64
//! is what the rest of the crate (and the CLI) quotes as its contract; the f32
//! values are the same checks degraded to what single precision can support.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Tolerance for structural identities (norm equalities, weight sums).
    fn strict_tol() -> Self;

    /// Tolerance for optimizer-facing comparisons.
    fn loose_tol() -> Self;

    /// Lossless for f32/f64; panics only on genuinely unrepresentable input.
    fn from_f(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("value not representable in this scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn strict_tol() -> Self {
        1e-12
    }

    fn loose_tol() -> Self {
        1e-6
    }
}

impl Scalar for f32 {
    fn strict_tol() -> Self {
        1e-5
    }

    fn loose_tol() -> Self {
        1e-3
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_are_ordered_and_positive() {
        fn check<T: Scalar>() {
            assert!(T::strict_tol() > T::zero());
            assert!(T::loose_tol() > T::strict_tol());
            assert!(T::loose_tol() < T::one());
        }
        check::<f32>();
        check::<f64>();
    }

    #[test]
    fn f64_round_trip_is_exact() {
        let x = 0.123456789012345_f64;
        assert_eq!(<f64 as Scalar>::from_f(x), x);
        assert_eq!(x.to_f64_lossy(), x);
    }
}
