//! Scalar abstraction shared by the solver, the certifier and the simulators.
//!
//! Loss values are computed either exactly (`BigRational`) or in floating
//! point (`f32`/`f64`). Everything that only needs field arithmetic and an
//! order is written against [`LossScalar`].

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, ToPrimitive};

pub trait LossScalar:
    Clone + PartialOrd + Num + FromPrimitive + ToPrimitive + fmt::Debug + Send + Sync + 'static
{
    /// True when arithmetic is exact, so comparisons need no slack.
    const EXACT: bool;

    /// Tolerance used when checking inequalities.
    fn slack() -> Self;

    /// Lossless (for exact types) conversion of a float.
    fn from_f64_lossless(x: f64) -> Option<Self>;

    fn ratio(num: u64, den: u64) -> Self {
        Self::from_u64(num).expect("u64 fits") / Self::from_u64(den).expect("u64 fits")
    }

    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `numerator/denominator` rendering used by CSV and memo files.
    fn render_ratio(&self) -> String;
}

impl LossScalar for f64 {
    const EXACT: bool = false;

    fn slack() -> Self {
        1e-9
    }

    fn from_f64_lossless(x: f64) -> Option<Self> {
        Some(x)
    }

    fn render_ratio(&self) -> String {
        format!("{self}")
    }
}

impl LossScalar for f32 {
    const EXACT: bool = false;

    fn slack() -> Self {
        1e-5
    }

    fn from_f64_lossless(x: f64) -> Option<Self> {
        Some(x as f32)
    }

    fn render_ratio(&self) -> String {
        format!("{self}")
    }
}

impl LossScalar for BigRational {
    const EXACT: bool = true;

    fn slack() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }

    fn from_f64_lossless(x: f64) -> Option<Self> {
        BigRational::from_float(x)
    }

    fn render_ratio(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}

/// Parses `num/den` into a reduced rational.
pub fn parse_ratio(text: &str) -> Option<BigRational> {
    let (num, den) = text.split_once('/')?;
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den == BigInt::from(0) {
        return None;
    }
    Some(BigRational::new(num, den))
}

/// Fixed six-decimal rendering used for every decimal column.
pub fn decimal<S: LossScalar>(value: &S) -> String {
    format!("{:.6}", value.approx())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_rendering_keeps_unit_denominator() {
        let one = BigRational::ratio(4, 4);
        assert_eq!(one.render_ratio(), "1/1");
        assert_eq!(BigRational::ratio(6, 8).render_ratio(), "3/4");
    }

    #[test]
    fn parse_ratio_rejects_garbage() {
        assert_eq!(parse_ratio("3/4"), Some(BigRational::ratio(3, 4)));
        assert!(parse_ratio("3/0").is_none());
        assert!(parse_ratio("3.5/2").is_none());
        assert!(parse_ratio("7").is_none());
    }

    #[test]
    fn float_conversion_is_exact_for_dyadics() {
        let r = BigRational::from_f64_lossless(0.375).unwrap();
        assert_eq!(r, BigRational::ratio(3, 8));
    }
}
