//! Exact rational scalars.
//!
//! Every price, bound and construction constant is held as a reduced
//! big-integer fraction. Text form is `p` for integers and `p/q` otherwise;
//! decimal literals such as `0.125` parse exactly.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Scalar(BigRational);

impl Scalar {
    pub fn zero() -> Self {
        Scalar(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar(BigRational::one())
    }

    pub fn from_int(v: i64) -> Self {
        Scalar(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_bigint(v: BigInt) -> Self {
        Scalar(BigRational::from_integer(v))
    }

    /// Panics if `den` is zero.
    pub fn ratio(num: i64, den: i64) -> Self {
        Scalar(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_big_ratio(num: BigInt, den: BigInt) -> Self {
        Scalar(BigRational::new(num, den))
    }

    /// Exact value of a finite double.
    pub fn from_f64_exact(v: f64) -> Option<Self> {
        BigRational::from_float(v).map(Scalar)
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Scalar(self.0.abs())
    }

    /// Panics on zero.
    pub fn recip(&self) -> Self {
        Scalar(self.0.recip())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or_else(|| {
            if self.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        })
    }

    /// Natural logarithm; `None` for non-positive values.
    ///
    /// Values outside the double range are split into a mantissa and a
    /// power of two so that huge numerators or denominators stay finite.
    pub fn ln(&self) -> Option<f64> {
        if !self.is_positive() {
            return None;
        }
        let direct = self.to_f64();
        if direct.is_normal() {
            return Some(direct.ln());
        }
        Some(bigint_ln(self.numer()) - bigint_ln(self.denom()))
    }

    /// `Some(e)` when the value is exactly `2^e` for an integer `e`.
    pub fn exact_log2(&self) -> Option<i64> {
        if !self.is_positive() {
            return None;
        }
        let n = power_of_two_exponent(self.numer())?;
        let d = power_of_two_exponent(self.denom())?;
        Some(n as i64 - d as i64)
    }

    pub fn pow(&self, exp: i32) -> Self {
        Scalar(num_traits::Pow::pow(&self.0, exp))
    }

    pub fn min(self, other: Self) -> Self {
        std::cmp::min(self, other)
    }

    pub fn max(self, other: Self) -> Self {
        std::cmp::max(self, other)
    }
}

fn power_of_two_exponent(v: &BigInt) -> Option<u64> {
    if v.sign() != Sign::Plus {
        return None;
    }
    let tz = v.trailing_zeros()?;
    if v.bits() == tz + 1 {
        Some(tz)
    } else {
        None
    }
}

fn bigint_ln(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().map(f64::ln).unwrap_or(f64::NAN);
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Least common multiple of positive integers.
pub fn lcm_all<'a>(values: impl IntoIterator<Item = &'a BigInt>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v))
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseScalarError(pub String);

impl fmt::Display for ParseScalarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid rational literal `{}`", self.0)
    }
}

impl std::error::Error for ParseScalarError {}

fn parse_digits(s: &str) -> Option<BigInt> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    BigInt::parse_bytes(s.as_bytes(), 10)
}

impl FromStr for Scalar {
    type Err = ParseScalarError;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let err = || ParseScalarError(raw.to_string());
        let s = raw.trim();
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let value = if let Some((num, den)) = body.split_once('/') {
            let num = parse_digits(num).ok_or_else(err)?;
            let den = parse_digits(den).ok_or_else(err)?;
            if den.is_zero() {
                return Err(err());
            }
            BigRational::new(num, den)
        } else if let Some((int, frac)) = body.split_once('.') {
            if int.is_empty() && frac.is_empty() {
                return Err(err());
            }
            let int = if int.is_empty() {
                BigInt::zero()
            } else {
                parse_digits(int).ok_or_else(err)?
            };
            let scale = BigInt::from(10u32).pow(frac.len() as u32);
            let frac = if frac.is_empty() {
                BigInt::zero()
            } else {
                parse_digits(frac).ok_or_else(err)?
            };
            BigRational::new(int * &scale + frac, scale)
        } else {
            BigRational::from_integer(parse_digits(body).ok_or_else(err)?)
        };
        Ok(Scalar(if negative { -value } else { value }))
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;

        impl de::Visitor<'_> for Visitor {
            type Value = Scalar;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational literal such as \"3/4\" or an integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Scalar, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Scalar, E> {
                Ok(Scalar::from_int(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Scalar, E> {
                Ok(Scalar::from_bigint(BigInt::from(v)))
            }
        }

        deserializer.deserialize_any(Visitor)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::from_int(v)
    }
}

impl From<usize> for Scalar {
    fn from(v: usize) -> Self {
        Scalar::from_bigint(BigInt::from(v))
    }
}

impl From<BigInt> for Scalar {
    fn from(v: BigInt) -> Self {
        Scalar::from_bigint(v)
    }
}

impl PartialEq<i64> for Scalar {
    fn eq(&self, other: &i64) -> bool {
        self.0.is_integer() && *self.0.numer() == BigInt::from(*other)
    }
}

impl PartialOrd<i64> for Scalar {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        Some(self.cmp(&Scalar::from_int(*other)))
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident) => {
        impl $tr<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                Scalar((&self.0).$method(&rhs.0))
            }
        }
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                Scalar(self.0.$method(rhs.0))
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                Scalar(self.0.$method(&rhs.0))
            }
        }
        impl $tr<Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                Scalar((&self.0).$method(rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-&self.0)
    }
}

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, v| acc + v)
    }
}

impl<'a> Sum<&'a Scalar> for Scalar {
    fn sum<I: Iterator<Item = &'a Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, v| acc + v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(v: &str) -> Scalar {
        v.parse().unwrap()
    }

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(s("1/3"), Scalar::ratio(1, 3));
        assert_eq!(s("2/4"), Scalar::ratio(1, 2));
        assert_eq!(s("0.125"), Scalar::ratio(1, 8));
        assert_eq!(s("-1.5"), Scalar::ratio(-3, 2));
        assert_eq!(s(".5"), Scalar::ratio(1, 2));
        assert_eq!(s("7."), Scalar::from_int(7));
        assert_eq!(s("42"), Scalar::from_int(42));
        for bad in ["", "1/0", "a", "1/-2", "1e3", "--1", ".", "1/2/3"] {
            assert!(bad.parse::<Scalar>().is_err(), "{bad}");
        }
    }

    #[test]
    fn display_is_canonical() {
        assert_eq!(Scalar::ratio(6, 4).to_string(), "3/2");
        assert_eq!(Scalar::ratio(-6, 3).to_string(), "-2");
        assert_eq!(Scalar::ratio(3, -4).to_string(), "-3/4");
        assert_eq!(Scalar::zero().to_string(), "0");
    }

    #[test]
    fn floor_and_ceil() {
        assert_eq!(Scalar::ratio(7, 2).ceil(), BigInt::from(4));
        assert_eq!(Scalar::ratio(7, 2).floor(), BigInt::from(3));
        assert_eq!(Scalar::ratio(-7, 2).ceil(), BigInt::from(-3));
        assert_eq!(Scalar::from_int(5).ceil(), BigInt::from(5));
    }

    #[test]
    fn exact_log2_detects_powers_of_two() {
        assert_eq!(Scalar::from_int(8).exact_log2(), Some(3));
        assert_eq!(Scalar::ratio(1, 4).exact_log2(), Some(-2));
        assert_eq!(Scalar::one().exact_log2(), Some(0));
        assert_eq!(Scalar::from_int(6).exact_log2(), None);
        assert_eq!(Scalar::zero().exact_log2(), None);
    }

    #[test]
    fn ln_survives_huge_values() {
        let big = Scalar::from_bigint(BigInt::from(2).pow(5000));
        let v = big.ln().unwrap();
        assert!((v - 5000.0 * std::f64::consts::LN_2).abs() < 1e-9);
        let tiny = big.recip();
        assert!((tiny.ln().unwrap() + v).abs() < 1e-9);
        assert_eq!(Scalar::one().ln(), Some(0.0));
        assert_eq!(Scalar::zero().ln(), None);
    }

    #[test]
    fn serde_uses_strings() {
        let v = Scalar::ratio(3, 4);
        assert_eq!(serde_json::to_string(&v).unwrap(), "\"3/4\"");
        let back: Scalar = serde_json::from_str("\"3/4\"").unwrap();
        assert_eq!(back, v);
        let int: Scalar = serde_json::from_str("5").unwrap();
        assert_eq!(int, Scalar::from_int(5));
    }

    proptest! {
        #[test]
        fn float_view_within_one_ulp(num in -(1i64 << 52)..(1i64 << 52), den in 1i64..1_000_000) {
            let v = Scalar::ratio(num, den);
            let f = v.to_f64();
            let exact_f = Scalar::from_f64_exact(f).unwrap();
            let ulp = if f == 0.0 { f64::MIN_POSITIVE } else {
                let next = f64::from_bits(f.abs().to_bits() + 1);
                next - f.abs()
            };
            let err = (exact_f - &v).abs();
            prop_assert!(err <= Scalar::from_f64_exact(ulp).unwrap());
        }

        #[test]
        fn text_round_trip(num in any::<i64>(), den in 1i64..i64::MAX) {
            let v = Scalar::ratio(num, den);
            prop_assert_eq!(v.to_string().parse::<Scalar>().unwrap(), v);
        }

        #[test]
        fn denominator_positive_and_reduced(num in any::<i32>(), den in any::<i32>()) {
            prop_assume!(den != 0);
            let v = Scalar::ratio(num as i64, den as i64);
            prop_assert!(v.denom().is_positive());
            prop_assert!(v.numer().gcd(v.denom()).is_one());
        }
    }
}
