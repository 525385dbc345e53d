//! Scalar abstraction shared by the numeric kernels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type usable by the SINR evaluator and the simplex engine.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Default feasibility/optimality tolerance for this precision.
    fn default_tolerance() -> Self;

    /// Converts an `f64` literal. Never fails for finite inputs.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn default_tolerance() -> Self {
        1e-7
    }
}

impl Scalar for f32 {
    fn default_tolerance() -> Self {
        1e-4
    }
}

/// Relative comparison `a <= b + tol * (1 + |b|)`.
#[inline]
pub fn le_rel<T: Scalar>(a: T, b: T, tol: T) -> bool {
    a <= b + tol * (T::one() + b.abs())
}
