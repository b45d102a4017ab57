use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type used by the numerical stages: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Residual tolerance used by the iterative eigensolver.
    fn solver_tolerance() -> Self {
        // eps^(3/4): ~1.8e-12 for f64, ~6e-6 for f32
        Self::epsilon().powf(Self::from_f64(0.75).unwrap())
    }

    fn of(v: f64) -> Self {
        Self::from_f64(v).unwrap()
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).unwrap()
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
