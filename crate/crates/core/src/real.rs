use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type the numerical core is written against: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every literal used in the crate is
    /// representable (possibly rounded) in both supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("integer representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative tolerance floor for iterative solvers: `1e-15` in `f64`,
    /// a few ulps in narrower types.
    #[inline]
    fn solver_eps() -> Self {
        Self::lit(1e-15).max(Self::epsilon() * Self::lit(4.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}
