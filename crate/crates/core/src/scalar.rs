//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real floating point type the solver and the sensitivity layer run on.
///
/// Implemented for `f32` and `f64`. Default tolerances come from
/// [`Scalar::DEFAULT_TOL`], so single precision runs get a looser default.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Default feasibility / gap tolerance of the interior-point solver.
    const DEFAULT_TOL: f64;

    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(Self::nan)
    }

    /// Lossy conversion back to `f64` (used by I/O and reporting).
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const DEFAULT_TOL: f64 = 1e-8;
}

impl Scalar for f32 {
    const DEFAULT_TOL: f64 = 1e-4;
}
