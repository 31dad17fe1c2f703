//! Scalar abstraction shared by the geometric code.
//!
//! Everything geometric in this crate is written against [`Real`], a thin
//! extension of [`num_traits::Float`]. `f64` is the working precision of the
//! experiment harness; `f32` is supported for the geometry with looser
//! tolerances.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Absolute tolerance used by geometric predicates on unit-scale data
    /// (hull membership, ball emptiness, miniball containment).
    fn geom_tol() -> Self;

    /// Relative threshold on the Gram determinant below which a point set is
    /// treated as affinely dependent.
    fn degeneracy_tol() -> Self;

    /// Converts an `f64` literal. Panics only for non-representable values,
    /// which cannot happen for the finite literals used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(x: usize) -> Self {
        Self::from_usize(x).expect("usize fits in a float")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    #[inline]
    fn geom_tol() -> Self {
        1e-12
    }

    #[inline]
    fn degeneracy_tol() -> Self {
        1e-12
    }
}

impl Real for f32 {
    #[inline]
    fn geom_tol() -> Self {
        1e-5
    }

    #[inline]
    fn degeneracy_tol() -> Self {
        1e-6
    }
}

/// Squared Euclidean norm.
#[inline]
pub fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x)
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Squared Euclidean distance between two coordinate slices.
#[inline]
pub fn dist2<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let t = x - y;
        acc + t * t
    })
}
