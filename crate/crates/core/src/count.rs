//! Exact nonnegative rational counts.
//!
//! Every count, bound, probability and estimate in this crate is a [`Count`].
//! Arithmetic never rounds; conversion to floating point only happens for
//! reporting (`to_f64`, `log2`).

use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Count(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse `{0}` as a nonnegative count")]
pub struct ParseCountError(String);

impl Count {
    pub fn zero() -> Self {
        Count(BigRational::zero())
    }

    pub fn one() -> Self {
        Count(BigRational::one())
    }

    pub fn from_u64(n: u64) -> Self {
        Count(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_biguint(n: BigUint) -> Self {
        Count(BigRational::from_integer(BigInt::from_biguint(Sign::Plus, n)))
    }

    /// `num / den`; panics on a zero denominator.
    pub fn ratio(num: u64, den: u64) -> Self {
        assert!(den != 0, "zero denominator");
        Count(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_ratio(num: BigUint, den: BigUint) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        Count(BigRational::new(
            BigInt::from_biguint(Sign::Plus, num),
            BigInt::from_biguint(Sign::Plus, den),
        ))
    }

    /// `2^k`.
    pub fn pow2(k: u64) -> Self {
        Count(BigRational::from_integer(BigInt::one() << k))
    }

    /// `2^-k`.
    pub fn inv_pow2(k: u64) -> Self {
        Count(BigRational::new(BigInt::one(), BigInt::one() << k))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// Integer value, if this count is integral.
    pub fn to_biguint(&self) -> Option<BigUint> {
        if self.is_integer() {
            self.0.numer().to_biguint()
        } else {
            None
        }
    }

    /// Saturating subtraction: `max(self - other, 0)`.
    pub fn saturating_sub(&self, other: &Count) -> Count {
        if self <= other {
            Count::zero()
        } else {
            Count(&self.0 - &other.0)
        }
    }

    /// `1 - self`, for probabilities.
    pub fn complement(&self) -> Count {
        Count::one().saturating_sub(self)
    }

    pub fn mul_pow2(&self, k: u64) -> Count {
        Count(&self.0 * BigRational::from_integer(BigInt::one() << k))
    }

    pub fn div_pow2(&self, k: u64) -> Count {
        Count(BigRational::new(
            self.0.numer().clone(),
            self.0.denom() << k,
        ))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    /// Base-2 logarithm, accurate for values far outside the `f64` range.
    /// Returns negative infinity for zero.
    pub fn log2(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        log2_big(self.0.numer()) - log2_big(self.0.denom())
    }

    /// Parses an integer, a `num/den` fraction, or a plain decimal such as
    /// `0.2` (read exactly as `1/5`).
    pub fn parse(text: &str) -> Result<Count, ParseCountError> {
        let err = || ParseCountError(text.to_string());
        let text = text.trim();
        if let Some((n, d)) = text.split_once('/') {
            let n: BigUint = n.trim().parse().map_err(|_| err())?;
            let d: BigUint = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            return Ok(Count::from_ratio(n, d));
        }
        if let Some((int, frac)) = text.split_once('.') {
            if frac.is_empty() && int.is_empty() {
                return Err(err());
            }
            if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
                return Err(err());
            }
            let digits = format!("{int}{frac}");
            let n: BigUint = if digits.is_empty() {
                BigUint::zero()
            } else {
                digits.parse().map_err(|_| err())?
            };
            let d = BigUint::from(10u32).pow(frac.len() as u32);
            return Ok(Count::from_ratio(n, d));
        }
        let n: BigUint = text.parse().map_err(|_| err())?;
        Ok(Count::from_biguint(n))
    }
}

fn log2_big(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 64 {
        return n.to_f64().unwrap_or(0.0).log2();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap_or(0.0);
    top.log2() + shift as f64
}

impl fmt::Display for Count {
    /// Exact decimal form: `123` for integers, `num/den` otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Count({self})")
    }
}

impl FromStr for Count {
    type Err = ParseCountError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Count::parse(s)
    }
}

impl From<u64> for Count {
    fn from(n: u64) -> Self {
        Count::from_u64(n)
    }
}

impl From<BigUint> for Count {
    fn from(n: BigUint) -> Self {
        Count::from_biguint(n)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Count> for &Count {
            type Output = Count;
            fn $method(self, rhs: &Count) -> Count {
                Count($trait::$method(&self.0, &rhs.0))
            }
        }
        impl $trait<Count> for Count {
            type Output = Count;
            fn $method(self, rhs: Count) -> Count {
                Count($trait::$method(self.0, rhs.0))
            }
        }
        impl $trait<&Count> for Count {
            type Output = Count;
            fn $method(self, rhs: &Count) -> Count {
                Count($trait::$method(self.0, &rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Sub<&Count> for &Count {
    type Output = Count;
    /// Panics when the result would be negative.
    fn sub(self, rhs: &Count) -> Count {
        assert!(self >= rhs, "negative count: {self} - {rhs}");
        Count(&self.0 - &rhs.0)
    }
}

impl Sum for Count {
    fn sum<I: Iterator<Item = Count>>(iter: I) -> Count {
        iter.fold(Count::zero(), |a, b| a + b)
    }
}

impl<'a> Sum<&'a Count> for Count {
    fn sum<I: Iterator<Item = &'a Count>>(iter: I) -> Count {
        iter.fold(Count::zero(), |a, b| a + b)
    }
}

impl Product for Count {
    fn product<I: Iterator<Item = Count>>(iter: I) -> Count {
        iter.fold(Count::one(), |a, b| a * b)
    }
}
