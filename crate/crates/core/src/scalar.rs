//! Scalar abstraction for the analytic model.
//!
//! Every closed-form quantity in [`crate::energy`] is built from field
//! operations only (sums, products, quotients and integer powers), so it can be
//! evaluated either in floating point or exactly over the rationals.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Field-like number type usable by the analytic engine: `f32`, `f64` or
/// [`BigRational`].
pub trait Scalar: Num + Clone + Debug + PartialOrd + Send + Sync + 'static {
    /// Converts an exact rational, rounding for floating-point types.
    fn from_ratio(value: &BigRational) -> Self;

    /// Exact rational value of `self`. Floats convert without rounding.
    fn to_ratio(&self) -> BigRational;

    fn to_f64(&self) -> f64;

    fn from_f64(value: f64) -> Self;

    fn from_u64(value: u64) -> Self {
        Self::from_ratio(&BigRational::from_integer(BigInt::from(value)))
    }

    fn powu(&self, exp: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..exp {
            acc = acc * self.clone();
        }
        acc
    }

    /// Clamps into `[lo, hi]`; returns whether clamping happened.
    fn clamp_to(self, lo: Self, hi: Self) -> (Self, bool) {
        if self < lo {
            (lo, true)
        } else if self > hi {
            (hi, true)
        } else {
            (self, false)
        }
    }
}

macro_rules! impl_float_scalar {
    ($t:ty, $to:ident) => {
        impl Scalar for $t {
            fn from_ratio(value: &BigRational) -> Self {
                ToPrimitive::$to(value).unwrap_or(<$t>::NAN)
            }

            fn to_ratio(&self) -> BigRational {
                BigRational::from_float(*self).expect("finite float")
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn from_f64(value: f64) -> Self {
                value as $t
            }

            fn from_u64(value: u64) -> Self {
                value as $t
            }

            fn powu(&self, exp: u32) -> Self {
                self.powi(exp as i32)
            }
        }
    };
}

impl_float_scalar!(f32, to_f32);
impl_float_scalar!(f64, to_f64);

impl Scalar for BigRational {
    fn from_ratio(value: &BigRational) -> Self {
        value.clone()
    }

    fn to_ratio(&self) -> BigRational {
        self.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_f64(value: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(value).expect("finite float")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_to_ratio_is_exact() {
        let r = 0.1f64.to_ratio();
        assert_eq!(<f64 as Scalar>::from_ratio(&r), 0.1);
        assert_ne!(r, BigRational::new(1.into(), 10.into()));
    }

    #[test]
    fn powu_matches_repeated_product() {
        let x = BigRational::new(3.into(), 7.into());
        assert_eq!(x.powu(3), BigRational::new(27.into(), 343.into()));
        assert_eq!(2.0f64.powu(10), 1024.0);
        assert_eq!(x.powu(0), BigRational::from_integer(1.into()));
    }

    #[test]
    fn clamp_reports() {
        assert_eq!(1.5f64.clamp_to(0.0, 1.0), (1.0, true));
        assert_eq!((-0.5f64).clamp_to(0.0, 1.0), (0.0, true));
        assert_eq!(0.5f64.clamp_to(0.0, 1.0), (0.5, false));
    }
}
