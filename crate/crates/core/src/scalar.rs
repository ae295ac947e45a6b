//! Numeric abstraction shared by every statistic, metric and solver in the crate.
//!
//! Exact analysis runs over [`Rational`]; bulk simulation and the lottery
//! solvers run over `f64` (or `f32`). Code that is generic over [`Scalar`]
//! compares values through [`Scalar::tolerance`], which is zero for exact types,
//! so the same pivoting and certificate logic is exact on rationals and
//! tolerance-aware on floats.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, NumAssign, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Num
    + NumAssign
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// `true` for types whose arithmetic is exact.
    const EXACT: bool;

    /// Absolute comparison slack; zero for exact types.
    fn tolerance() -> Self;

    fn from_rational(r: &Rational) -> Self;

    fn to_f64_lossy(&self) -> f64;

    /// Report formatting: `"p/q"` for rationals, 12 significant digits for floats.
    fn render(&self) -> String {
        self.to_string()
    }

    /// `self -= a * b`, without cloning for big-number types.
    fn sub_mul_assign(&mut self, a: &Self, b: &Self);

    /// `self /= d` by reference.
    fn div_assign_ref(&mut self, d: &Self);

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn half() -> Self {
        Self::ratio(1, 2)
    }

    /// Strictly positive beyond the tolerance.
    fn is_pos(&self) -> bool {
        *self > Self::tolerance()
    }

    /// Strictly negative beyond the tolerance.
    fn is_neg(&self) -> bool {
        *self < -Self::tolerance()
    }

    fn approx_eq(&self, other: &Self) -> bool {
        let d = self.clone() - other.clone();
        !d.is_pos() && !d.is_neg()
    }

    fn approx_le(&self, other: &Self) -> bool {
        !(self.clone() - other.clone()).is_pos()
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }
}

/// Floating-point scalars; the lottery solvers need transcendental functions.
pub trait Real: Scalar + Float {}

macro_rules! float_scalar {
    ($t:ty, $tol:expr) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn tolerance() -> Self {
                $tol
            }

            fn from_rational(r: &Rational) -> Self {
                r.to_f64().unwrap_or(f64::NAN) as $t
            }

            fn to_f64_lossy(&self) -> f64 {
                *self as f64
            }

            fn render(&self) -> String {
                float_string(*self as f64)
            }

            #[inline]
            fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
                *self -= a * b;
            }

            #[inline]
            fn div_assign_ref(&mut self, d: &Self) {
                *self /= d;
            }
        }

        impl Real for $t {}
    };
}

float_scalar!(f64, 1e-10);
float_scalar!(f32, 1e-5);

impl Scalar for Rational {
    const EXACT: bool = true;

    fn tolerance() -> Self {
        Rational::zero()
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        *self -= a * b;
    }

    #[inline]
    fn div_assign_ref(&mut self, d: &Self) {
        if !d.is_one() {
            *self /= d;
        }
    }

    fn is_pos(&self) -> bool {
        self.is_positive()
    }

    fn is_neg(&self) -> bool {
        self.is_negative()
    }
}

/// Parses `"0.31862"`, `"3/5"`, `"2"`, `"-1.5"` or `"1e-3"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::Number(text.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let all = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::from_str(&all).map_err(|_| bad())?);
    let shift = exponent - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    if shift >= 0 {
        value *= num_traits::pow(ten, shift as usize);
    } else {
        value /= num_traits::pow(ten, (-shift) as usize);
    }
    Ok(if neg { -value } else { value })
}

/// Exact rational with the same value as a finite `f64`'s shortest decimal form.
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::Number(x.to_string()));
    }
    parse_rational(&format!("{x:e}"))
}

/// `"p/q"` (or `"p"` for integers).
pub fn rational_string(r: &Rational) -> String {
    r.to_string()
}

/// Formats a float at 12 significant digits.
pub fn float_string(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{:.*e}", 11, x);
    // normalise through f64 so trailing zeros disappear
    let v: f64 = s.parse().unwrap_or(x);
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn decimal_literals_parse_exactly() {
        assert_eq!(parse_rational("0.31862").unwrap(), q(31862, 100000));
        assert_eq!(parse_rational("3/5").unwrap(), q(3, 5));
        assert_eq!(parse_rational("2").unwrap(), q(2, 1));
        assert_eq!(parse_rational("-1.5").unwrap(), q(-3, 2));
        assert_eq!(parse_rational("1e-3").unwrap(), q(1, 1000));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert_eq!(parse_rational("2.5E1").unwrap(), q(25, 1));
    }

    #[test]
    fn garbage_is_rejected() {
        for s in ["", "a", "1/0", "1.2.3", "--1", "1e", "."] {
            assert!(parse_rational(s).is_err(), "{s}");
        }
    }

    #[test]
    fn f64_round_trips_through_shortest_decimal() {
        assert_eq!(rational_from_f64(0.6).unwrap(), q(3, 5));
        assert_eq!(rational_from_f64(0.24397).unwrap(), q(24397, 100000));
    }

    #[test]
    fn float_formatting() {
        assert_eq!(float_string(0.5), "0.5");
        assert_eq!(float_string(1.0 / 3.0), "0.333333333333");
        assert_eq!(float_string(f64::INFINITY), "inf");
    }

    #[test]
    fn exact_comparisons_have_no_slack() {
        let tiny = q(1, 1_000_000_000_000);
        assert!(tiny.is_pos());
        assert!(!(1e-12f64).is_pos());
        assert!(q(1, 3).approx_le(&q(1, 3)));
        assert!(!q(1, 2).approx_le(&q(1, 3)));
    }
}
