//! Scalar abstraction shared by the MILP intermediate representation.

use std::fmt::{Debug, Display};

use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Numeric type usable as a coefficient, bound or point value.
///
/// Implemented for `f32`, `f64` and the exact rational types, so the same
/// model can be audited in floating point or exactly.
pub trait Scalar:
    Clone + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// `false` for NaN and infinities; always `true` for exact types.
    fn is_finite_value(&self) -> bool;

    /// Lossy conversion used by the text writers and solver adapters.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Ratio<i64> {
    fn is_finite_value(&self) -> bool {
        true
    }
}

impl Scalar for BigRational {
    fn is_finite_value(&self) -> bool {
        true
    }
}

/// Exact image of a finite `f64`; `None` for NaN or infinities.
pub fn exact(value: f64) -> Option<BigRational> {
    BigRational::from_float(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finiteness() {
        assert!(1.0f64.is_finite_value());
        assert!(!f64::NAN.is_finite_value());
        assert!(!f32::INFINITY.is_finite_value());
        assert!(Ratio::new(1i64, 3).is_finite_value());
    }

    #[test]
    fn exact_conversion_is_lossless() {
        let r = exact(0.1).unwrap();
        assert_eq!(r.to_f64().unwrap(), 0.1);
        assert!(exact(f64::NAN).is_none());
    }
}
