use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type the LP engine and the rationality statistics run on.
///
/// Implemented for `f32` and `f64`; everything above the solver uses the
/// `f64` aliases exported from the crate root.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + FromStr + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or parameter.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    fn halve<S: Scalar>(v: S) -> S {
        v / S::of(2.0)
    }

    #[test]
    fn generic_roundtrip() {
        assert_eq!(halve(3.0f32), 1.5f32);
        assert_eq!(halve(3.0f64), 1.5f64);
        assert_eq!(<f32 as Scalar>::of(0.25).as_f64(), 0.25);
    }
}
