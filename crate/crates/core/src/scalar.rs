use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps};

/// Element type of all differentiable computation.
///
/// `Float` gives the usual arithmetic and transcendentals; the extra bounds
/// are what the tape, optimizer and losses need to stay generic without
/// sprinkling `where` clauses everywhere.
pub trait Scalar:
    Float + FromPrimitive + NumAssignOps + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Conversion from an `f64` constant (learning rates, tolerances, …).
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }

    /// Widening back to `f64` for reporting.
    fn to64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
