//! Exact rational arithmetic.
//!
//! All metric values, thresholds and capacities in this crate are exact
//! rationals with arbitrary-precision numerator and denominator, so repeated
//! divisions like `100 * slowCnt / cnt` never accumulate floating error.
//!
//! Wire form is `"num/den"` (always reduced, denominator >= 1). Parsing also
//! accepts plain integers and decimal strings (`"0.995"` becomes `199/200`).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

/// An exact rational number.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rat(BigRational);

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RatParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal `{0}`")]
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

    /// Builds `num/den`. Panics if `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rat(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_int(n: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Rat(BigRational::from_integer(n))
    }

    pub fn from_big(num: BigInt, den: BigInt) -> Option<Self> {
        if den.is_zero() {
            None
        } else {
            Some(Rat(BigRational::new(num, den)))
        }
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

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Rat(self.0.abs())
    }

    /// Division that treats a zero divisor as `None` instead of panicking.
    pub fn checked_div(&self, rhs: &Rat) -> Option<Rat> {
        if rhs.is_zero() {
            None
        } else {
            Some(Rat(&self.0 / &rhs.0))
        }
    }

    pub fn min(self, other: Rat) -> Rat {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Rat) -> Rat {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn ceil_bigint(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    pub fn floor_bigint(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    /// Ceiling as `i64`; panics if the value does not fit.
    pub fn ceil_i64(&self) -> i64 {
        self.ceil_bigint()
            .to_i64()
            .expect("rational ceiling exceeds i64 range")
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Exact decimal rendering truncated to `places` fractional digits,
    /// trailing zeros removed. Used for CSV export where consumers expect
    /// decimals rather than fractions.
    pub fn to_decimal_string(&self, places: u32) -> String {
        let sign = if self.is_negative() { "-" } else { "" };
        let num = self.numer().abs();
        let den = self.denom().clone();
        let (int_part, mut rem) = num.div_rem(&den);
        if rem.is_zero() {
            return format!("{sign}{int_part}");
        }
        let mut digits = String::new();
        for _ in 0..places {
            rem *= 10;
            let (d, r) = rem.div_rem(&den);
            digits.push_str(&d.to_string());
            rem = r;
            if rem.is_zero() {
                break;
            }
        }
        while digits.ends_with('0') {
            digits.pop();
        }
        if digits.is_empty() {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{digits}")
        }
    }

    /// Parses `"num/den"`, plain integers and decimal strings, all exact.
    pub fn parse(text: &str) -> Result<Self, RatParseError> {
        let s = text.trim();
        if s.is_empty() {
            return Err(RatParseError::Empty);
        }
        if let Some((num, den)) = s.split_once('/') {
            let n = BigInt::from_str(num.trim())
                .map_err(|_| RatParseError::Invalid(text.to_string()))?;
            let d = BigInt::from_str(den.trim())
                .map_err(|_| RatParseError::Invalid(text.to_string()))?;
            if d.is_zero() {
                return Err(RatParseError::ZeroDenominator(text.to_string()));
            }
            return Ok(Rat(BigRational::new(n, d)));
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            let digits = frac_part.trim();
            if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
                return Err(RatParseError::Invalid(text.to_string()));
            }
            let negative = int_part.trim_start().starts_with('-');
            let whole = if int_part == "-" || int_part.is_empty() {
                BigInt::zero()
            } else {
                BigInt::from_str(int_part.trim())
                    .map_err(|_| RatParseError::Invalid(text.to_string()))?
            };
            let scale = BigInt::from(10u8).pow(digits.len() as u32);
            let frac = BigInt::from_str(digits)
                .map_err(|_| RatParseError::Invalid(text.to_string()))?;
            let magnitude = whole.abs() * &scale + frac;
            let signed = if negative { -magnitude } else { magnitude };
            return Ok(Rat(BigRational::new(signed, scale)));
        }
        let n = BigInt::from_str(s).map_err(|_| RatParseError::Invalid(text.to_string()))?;
        Ok(Rat(BigRational::from_integer(n)))
    }

    /// Exact conversion of a JSON number. Non-integral numbers go through
    /// their shortest decimal representation, so `0.1` becomes `1/10`.
    pub fn from_json_number(n: &serde_json::Number) -> Result<Self, RatParseError> {
        if let Some(i) = n.as_i64() {
            return Ok(Rat::from_int(i));
        }
        if let Some(u) = n.as_u64() {
            return Ok(Rat::from_bigint(BigInt::from(u)));
        }
        Rat::parse(&n.to_string())
    }
}

impl fmt::Display for Rat {
    /// Always `num/den`, reduced, e.g. `100/1` or `1/200`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Rat {
    type Err = RatParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rat::parse(s)
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat::from_int(n)
    }
}

impl From<u64> for Rat {
    fn from(n: u64) -> Self {
        Rat::from_bigint(BigInt::from(n))
    }
}

impl From<BigInt> for Rat {
    fn from(n: BigInt) -> Self {
        Rat::from_bigint(n)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat((self.0).$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                Rat((&self.0).$method(&rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);

impl Div for Rat {
    type Output = Rat;
    /// Panics on a zero divisor; evaluation paths use [`Rat::checked_div`].
    fn div(self, rhs: Rat) -> Rat {
        assert!(!rhs.is_zero(), "division by zero");
        Rat(self.0 / rhs.0)
    }
}

impl<'a> Div<&'a Rat> for &'a Rat {
    type Output = Rat;
    fn div(self, rhs: &'a Rat) -> Rat {
        assert!(!rhs.is_zero(), "division by zero");
        Rat(&self.0 / &rhs.0)
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RatVisitor;

        impl de::Visitor<'_> for RatVisitor {
            type Value = Rat;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational as `num/den`, integer or decimal")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rat, E> {
                Rat::parse(v).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rat, E> {
                Ok(Rat::from_int(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rat, E> {
                Ok(Rat::from_bigint(BigInt::from(v)))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rat, E> {
                Rat::parse(&format!("{v}")).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(RatVisitor)
    }
}

/// Serde adapter for the trace wire format: integral rationals serialize as
/// JSON numbers, non-integral ones as `"num/den"` strings.
pub mod rat_wire {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rat, serializer: S) -> Result<S::Ok, S::Error> {
        if value.is_integer() {
            match value.numer().to_i64() {
                Some(i) => serializer.serialize_i64(i),
                None => serializer.serialize_str(&value.to_string()),
            }
        } else {
            serializer.serialize_str(&value.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rat, D::Error> {
        Rat::deserialize(deserializer)
    }
}
