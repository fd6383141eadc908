//! Exact rational numbers.
//!
//! Every cost, bias and perceived cost in the crate is a [`Rat`]. Values are
//! kept in lowest terms with a positive denominator, so equality is
//! structural and ties are decided exactly.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// An arbitrary-precision rational number in lowest terms.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rat(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRatError {
    #[error("empty number")]
    Empty,
    #[error("invalid number `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

impl Rat {
    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    /// `numer / denom`; `None` when `denom == 0`.
    pub fn new(numer: i64, denom: i64) -> Option<Self> {
        if denom == 0 {
            return None;
        }
        Some(Rat(BigRational::new(BigInt::from(numer), BigInt::from(denom))))
    }

    /// Shorthand for literal fractions in tests and fixtures. Panics on a zero
    /// denominator.
    pub fn frac(numer: i64, denom: i64) -> Self {
        Self::new(numer, denom).expect("zero denominator")
    }

    pub fn from_big(numer: BigInt, denom: BigInt) -> Option<Self> {
        if denom.is_zero() {
            return None;
        }
        Some(Rat(BigRational::new(numer, denom)))
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
        Rat(self.0.abs())
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Rat(self.0.recip()))
        }
    }

    pub fn pow(&self, exp: u32) -> Self {
        Rat(num_traits::pow(self.0.clone(), exp as usize))
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Largest integer not above the value.
    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    /// Canonical machine rendering: always `p/q`, lowest terms.
    pub fn to_fraction_string(&self) -> String {
        format!("{}/{}", self.0.numer(), self.0.denom())
    }

    /// Display-only decimal approximation, rounded toward zero.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        let neg = self.is_negative();
        let a = self.0.abs();
        let int = a.numer() / a.denom();
        let mut rem = a.numer() % a.denom();
        let mut out = String::new();
        if neg && !self.is_zero() {
            out.push('-');
        }
        out.push_str(&int.to_string());
        if digits > 0 {
            out.push('.');
            let ten = BigInt::from(10);
            for _ in 0..digits {
                rem *= &ten;
                let d = &rem / a.denom();
                rem %= a.denom();
                out.push_str(&d.to_string());
            }
        }
        out
    }

    fn parse_decimal(s: &str) -> Result<Self, ParseRatError> {
        let (neg, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(ParseRatError::Invalid(s.to_string()));
        }
        let all_digits = |t: &str| t.bytes().all(|c| c.is_ascii_digit());
        if !all_digits(int_part) || !all_digits(frac_part) {
            return Err(ParseRatError::Invalid(s.to_string()));
        }
        let digits = format!("{int_part}{frac_part}");
        let numer: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits
                .parse()
                .map_err(|_| ParseRatError::Invalid(s.to_string()))?
        };
        let denom = num_traits::pow(BigInt::from(10), frac_part.len());
        let numer = if neg { -numer } else { numer };
        Ok(Rat(BigRational::new(numer, denom)))
    }
}

impl FromStr for Rat {
    type Err = ParseRatError;

    /// Accepts integers, decimals (`74.1`) and fractions (`741/10`), exactly.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseRatError::Empty);
        }
        match s.split_once('/') {
            Some((p, q)) => {
                let p = Rat::parse_decimal(p.trim())?;
                let q = Rat::parse_decimal(q.trim())?;
                if q.is_zero() {
                    return Err(ParseRatError::ZeroDenominator(s.to_string()));
                }
                Ok(p / q)
            }
            None => Rat::parse_decimal(s),
        }
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat::from_int(n)
    }
}

impl From<u32> for Rat {
    fn from(n: u32) -> Self {
        Rat::from_int(n as i64)
    }
}

impl From<usize> for Rat {
    fn from(n: usize) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident) => {
        impl $tr<Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat(self.0.$method(rhs.0))
            }
        }
        impl<'a> $tr<&'a Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                Rat(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $tr<Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $tr<&'b Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: &'b Rat) -> Rat {
                Rat((&self.0).$method(&rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl<'a> Neg for &'a Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0.clone())
    }
}

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        self.0 += &rhs.0;
    }
}

impl AddAssign<Rat> for Rat {
    fn add_assign(&mut self, rhs: Rat) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Rat> for Rat {
    fn sub_assign(&mut self, rhs: &Rat) {
        self.0 -= &rhs.0;
    }
}

impl SubAssign<Rat> for Rat {
    fn sub_assign(&mut self, rhs: Rat) {
        self.0 -= rhs.0;
    }
}

impl Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rat> for Rat {
    fn sum<I: Iterator<Item = &'a Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_fraction_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct RatVisitor;
        impl Visitor<'_> for RatVisitor {
            type Value = Rat;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal or p/q string, or an integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rat, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rat, E> {
                Ok(Rat::from_int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rat, E> {
                Ok(Rat(BigRational::from_integer(BigInt::from(v))))
            }
        }
        d.deserialize_any(RatVisitor)
    }
}

/// A rational extended with `+∞`, used for DP tables and missing outside
/// options. `Infinite` compares greater than every finite value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtRat {
    Finite(Rat),
    Infinite,
}

impl ExtRat {
    pub fn finite(&self) -> Option<&Rat> {
        match self {
            ExtRat::Finite(r) => Some(r),
            ExtRat::Infinite => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtRat::Finite(_))
    }

    pub fn into_finite(self) -> Option<Rat> {
        match self {
            ExtRat::Finite(r) => Some(r),
            ExtRat::Infinite => None,
        }
    }

    pub fn add_rat(&self, r: &Rat) -> ExtRat {
        match self {
            ExtRat::Finite(a) => ExtRat::Finite(a + r),
            ExtRat::Infinite => ExtRat::Infinite,
        }
    }
}

impl From<Rat> for ExtRat {
    fn from(r: Rat) -> Self {
        ExtRat::Finite(r)
    }
}

impl From<Option<Rat>> for ExtRat {
    fn from(r: Option<Rat>) -> Self {
        r.map_or(ExtRat::Infinite, ExtRat::Finite)
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => a.cmp(b),
            (ExtRat::Finite(_), ExtRat::Infinite) => Ordering::Less,
            (ExtRat::Infinite, ExtRat::Finite(_)) => Ordering::Greater,
            (ExtRat::Infinite, ExtRat::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::Finite(r) => r.fmt(f),
            ExtRat::Infinite => f.write_str("inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!("0.1".parse::<Rat>().unwrap(), Rat::frac(1, 10));
        assert_eq!("74.1".parse::<Rat>().unwrap(), Rat::frac(741, 10));
        assert_eq!("-3.55".parse::<Rat>().unwrap(), Rat::frac(-71, 20));
        assert_eq!(".5".parse::<Rat>().unwrap(), Rat::frac(1, 2));
        assert_eq!("65".parse::<Rat>().unwrap(), Rat::from_int(65));
    }

    #[test]
    fn parses_fractions_in_lowest_terms() {
        let r: Rat = "1482/20".parse().unwrap();
        assert_eq!(r.to_fraction_string(), "741/10");
        assert_eq!("6/3".parse::<Rat>().unwrap().to_fraction_string(), "2/1");
        assert!(matches!(
            "1/0".parse::<Rat>(),
            Err(ParseRatError::ZeroDenominator(_))
        ));
        assert!("abc".parse::<Rat>().is_err());
        assert!("1.2.3".parse::<Rat>().is_err());
        assert!("".parse::<Rat>().is_err());
        assert!("-".parse::<Rat>().is_err());
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(Rat::frac(2221, 30).to_decimal_string(4), "74.0333");
        assert_eq!(Rat::frac(-1, 3).to_decimal_string(2), "-0.33");
        assert_eq!(Rat::from_int(7).to_decimal_string(0), "7");
    }

    #[test]
    fn ext_ordering() {
        let a = ExtRat::Finite(Rat::from_int(1_000_000));
        assert!(a < ExtRat::Infinite);
        assert_eq!(ExtRat::Infinite.add_rat(&Rat::one()), ExtRat::Infinite);
    }

    proptest! {
        #[test]
        fn add_then_sub_is_identity(an in -10_000i64..10_000, ad in 1i64..500, bn in -10_000i64..10_000, bd in 1i64..500) {
            let a = Rat::frac(an, ad);
            let b = Rat::frac(bn, bd);
            prop_assert_eq!(&(&a + &b) - &b, a);
        }

        #[test]
        fn display_parse_round_trip(an in -10_000i64..10_000, ad in 1i64..500) {
            let a = Rat::frac(an, ad);
            let back: Rat = a.to_fraction_string().parse().unwrap();
            prop_assert_eq!(back, a);
        }
    }
}
