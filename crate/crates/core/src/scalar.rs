//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type the crate computes in.
///
/// The associated tolerances are the only precision-dependent knobs:
/// `MASS_TOL` guards probability-mass identities, `METRIC_TOL` guards
/// metric axioms and coupling marginals, `PIVOT_TOL` is the simplex
/// pivot/zero threshold.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + for<'a> Sum<&'a Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    const MASS_TOL: f64;
    const METRIC_TOL: f64;
    const PIVOT_TOL: f64;

    /// Converts an `f64` literal. Never fails for the provided impls.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn mass_tol() -> Self {
        Self::lit(Self::MASS_TOL)
    }

    #[inline]
    fn metric_tol() -> Self {
        Self::lit(Self::METRIC_TOL)
    }

    #[inline]
    fn pivot_tol() -> Self {
        Self::lit(Self::PIVOT_TOL)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f64 {
    const MASS_TOL: f64 = 1e-12;
    const METRIC_TOL: f64 = 1e-9;
    const PIVOT_TOL: f64 = 1e-11;
}

impl Scalar for f32 {
    const MASS_TOL: f64 = 1e-5;
    const METRIC_TOL: f64 = 1e-4;
    const PIVOT_TOL: f64 = 1e-6;
}

/// Largest element of a slice, `-inf` when empty.
pub(crate) fn max_of<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    values.into_iter().fold(T::neg_infinity(), T::max)
}

/// Smallest element of a slice, `+inf` when empty.
pub(crate) fn min_of<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    values.into_iter().fold(T::infinity(), T::min)
}
