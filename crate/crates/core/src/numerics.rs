//! Exact probabilities whose denominators are powers of the alphabet size,
//! and the [`ProbScalar`] abstraction the table code is generic over.
//!
//! Every probability handled by this crate is a count of equiprobable words
//! divided by `L^k`, so [`ExactProb`] stores `num / L^den_exp` in canonical
//! form and never needs a gcd.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("alphabet size must be at least 2, got {0}")]
    InvalidBase(u32),
    #[error("mismatched bases {0} and {1}")]
    BaseMismatch(u32, u32),
    #[error("subtraction underflow: {minuend} - {subtrahend} is negative")]
    Underflow { minuend: String, subtrahend: String },
}

/// Size `L >= 2` of the alphabet `{0, .., L-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Alphabet(u32);

impl Alphabet {
    pub fn new(size: u32) -> Result<Self, NumericsError> {
        if size < 2 {
            return Err(NumericsError::InvalidBase(size));
        }
        Ok(Alphabet(size))
    }

    pub const BINARY: Alphabet = Alphabet(2);

    pub fn size(self) -> u32 {
        self.0
    }

    /// `L^e` as a big integer.
    pub fn pow(self, e: u32) -> BigUint {
        num_traits::pow(BigUint::from(self.0), e as usize)
    }
}

impl TryFrom<u32> for Alphabet {
    type Error = NumericsError;

    fn try_from(size: u32) -> Result<Self, Self::Error> {
        Alphabet::new(size)
    }
}

impl From<Alphabet> for u32 {
    fn from(a: Alphabet) -> u32 {
        a.0
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Nonnegative rational `num / base^den_exp` in canonical form.
///
/// Canonical means: zero is stored as `0 / L^0`, and otherwise `num` is not
/// divisible by `L` unless `den_exp == 0`. Two values with the same base are
/// therefore equal iff their fields are equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactProb {
    num: BigUint,
    den_exp: u32,
    base: Alphabet,
}

impl ExactProb {
    /// Builds `num / base^den_exp`, normalizing on the way in.
    pub fn new(num: BigUint, den_exp: u32, base: Alphabet) -> Self {
        let mut value = ExactProb { num, den_exp, base };
        value.normalize();
        value
    }

    pub fn zero(base: Alphabet) -> Self {
        ExactProb {
            num: BigUint::zero(),
            den_exp: 0,
            base,
        }
    }

    pub fn one(base: Alphabet) -> Self {
        ExactProb {
            num: BigUint::one(),
            den_exp: 0,
            base,
        }
    }

    /// `1 / L^e`.
    pub fn unit_fraction(base: Alphabet, e: u32) -> Self {
        ExactProb {
            num: BigUint::one(),
            den_exp: e,
            base,
        }
    }

    /// `count / L^e`, e.g. a word count over all `L^e` words of length `e`.
    pub fn from_count(count: BigUint, base: Alphabet, e: u32) -> Self {
        Self::new(count, e, base)
    }

    pub fn numerator(&self) -> &BigUint {
        &self.num
    }

    pub fn den_exp(&self) -> u32 {
        self.den_exp
    }

    pub fn base(&self) -> Alphabet {
        self.base
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.den_exp = 0;
            return;
        }
        if self.den_exp == 0 {
            return;
        }
        if self.base.0 == 2 {
            let tz = self.num.trailing_zeros().unwrap_or(0);
            let shift = tz.min(u64::from(self.den_exp));
            self.num >>= shift;
            self.den_exp -= shift as u32;
            return;
        }
        let l = BigUint::from(self.base.0);
        while self.den_exp > 0 {
            let (q, r) = self.num.div_rem(&l);
            if !r.is_zero() {
                break;
            }
            self.num = q;
            self.den_exp -= 1;
        }
    }

    fn check_base(&self, other: &Self) -> Result<(), NumericsError> {
        if self.base != other.base {
            return Err(NumericsError::BaseMismatch(self.base.0, other.base.0));
        }
        Ok(())
    }

    /// Numerator rescaled to denominator `L^e`, `e >= self.den_exp`.
    fn scaled_to(&self, e: u32) -> BigUint {
        if e == self.den_exp {
            self.num.clone()
        } else {
            &self.num * self.base.pow(e - self.den_exp)
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, NumericsError> {
        self.check_base(other)?;
        let e = self.den_exp.max(other.den_exp);
        Ok(Self::new(
            self.scaled_to(e) + other.scaled_to(e),
            e,
            self.base,
        ))
    }

    /// `self - other`; an error if the result would be negative.
    pub fn checked_sub(&self, other: &Self) -> Result<Self, NumericsError> {
        self.check_base(other)?;
        let e = self.den_exp.max(other.den_exp);
        let (a, b) = (self.scaled_to(e), other.scaled_to(e));
        if a < b {
            return Err(NumericsError::Underflow {
                minuend: self.to_string(),
                subtrahend: other.to_string(),
            });
        }
        Ok(Self::new(a - b, e, self.base))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, NumericsError> {
        self.check_base(other)?;
        Ok(Self::new(
            &self.num * &other.num,
            self.den_exp + other.den_exp,
            self.base,
        ))
    }

    /// Total order on values of the same base.
    pub fn try_cmp(&self, other: &Self) -> Result<Ordering, NumericsError> {
        self.check_base(other)?;
        let e = self.den_exp.max(other.den_exp);
        Ok(self.scaled_to(e).cmp(&other.scaled_to(e)))
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(
            BigInt::from(self.num.clone()),
            BigInt::from(self.base.pow(self.den_exp)),
        )
    }

    pub fn to_f64(&self) -> f64 {
        let ratio = num_rational::Ratio::new_raw(
            BigInt::from(self.num.clone()),
            BigInt::from(self.base.pow(self.den_exp)),
        );
        ratio.to_f64().unwrap_or(f64::NAN)
    }

    /// Decimal rendering with `digits` fractional digits, rounding half to even.
    pub fn to_decimal(&self, digits: usize) -> String {
        let den = self.base.pow(self.den_exp);
        let scaled = &self.num * num_traits::pow(BigUint::from(10u32), digits);
        let (mut q, r) = scaled.div_rem(&den);
        match (r << 1u32).cmp(&den) {
            Ordering::Greater => q += 1u32,
            Ordering::Equal if q.is_odd() => q += 1u32,
            _ => {}
        }
        let s = q.to_str_radix(10);
        if digits == 0 {
            return s;
        }
        let padded = format!("{:0>width$}", s, width = digits + 1);
        let (int, frac) = padded.split_at(padded.len() - digits);
        format!("{int}.{frac}")
    }
}

impl PartialOrd for ExactProb {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.try_cmp(other).ok()
    }
}

impl fmt::Display for ExactProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den_exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}^{}", self.num, self.base.0, self.den_exp)
        }
    }
}

impl fmt::Debug for ExactProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Serialize, Deserialize)]
struct ExactProbRepr {
    num: String,
    base: u32,
    den_exp: u32,
    #[serde(default)]
    approx: f64,
}

impl Serialize for ExactProb {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ExactProbRepr {
            num: self.num.to_str_radix(10),
            base: self.base.0,
            den_exp: self.den_exp,
            approx: self.to_f64(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExactProb {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = ExactProbRepr::deserialize(deserializer)?;
        let base = Alphabet::new(repr.base).map_err(D::Error::custom)?;
        let num = repr
            .num
            .parse::<BigUint>()
            .map_err(|e| D::Error::custom(format!("bad numerator {:?}: {e}", repr.num)))?;
        Ok(ExactProb::new(num, repr.den_exp, base))
    }
}

/// Scalar type the recursions and chain DP run over.
///
/// [`ExactProb`] is the reference implementation. Floating-point impls give
/// fast approximations; [`BigRational`] gives an independent exact route.
pub trait ProbScalar: Clone + PartialEq + PartialOrd + fmt::Debug + Send + Sync {
    fn zero(base: Alphabet) -> Self;
    fn one(base: Alphabet) -> Self;
    /// `m / L^e`.
    fn ratio_pow(m: u32, base: Alphabet, e: u32) -> Self;
    fn plus(&self, rhs: &Self) -> Self;
    /// `None` when an exact difference would be negative.
    fn minus(&self, rhs: &Self) -> Option<Self>;
    fn times(&self, rhs: &Self) -> Self;
    fn is_zero(&self) -> bool;
    fn approx(&self) -> f64;
}

impl ProbScalar for ExactProb {
    fn zero(base: Alphabet) -> Self {
        ExactProb::zero(base)
    }

    fn one(base: Alphabet) -> Self {
        ExactProb::one(base)
    }

    fn ratio_pow(m: u32, base: Alphabet, e: u32) -> Self {
        ExactProb::new(BigUint::from(m), e, base)
    }

    fn plus(&self, rhs: &Self) -> Self {
        self.checked_add(rhs).expect("scalar base mismatch")
    }

    fn minus(&self, rhs: &Self) -> Option<Self> {
        match self.checked_sub(rhs) {
            Ok(v) => Some(v),
            Err(NumericsError::Underflow { .. }) => None,
            Err(e) => panic!("{e}"),
        }
    }

    fn times(&self, rhs: &Self) -> Self {
        self.checked_mul(rhs).expect("scalar base mismatch")
    }

    fn is_zero(&self) -> bool {
        ExactProb::is_zero(self)
    }

    fn approx(&self) -> f64 {
        self.to_f64()
    }
}

impl ProbScalar for BigRational {
    fn zero(_: Alphabet) -> Self {
        Zero::zero()
    }

    fn one(_: Alphabet) -> Self {
        One::one()
    }

    fn ratio_pow(m: u32, base: Alphabet, e: u32) -> Self {
        BigRational::new(BigInt::from(m), BigInt::from(base.pow(e)))
    }

    fn plus(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn minus(&self, rhs: &Self) -> Option<Self> {
        let d = self - rhs;
        (!d.is_negative()).then_some(d)
    }

    fn times(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl ProbScalar for $t {
            fn zero(_: Alphabet) -> Self {
                <$t as Zero>::zero()
            }

            fn one(_: Alphabet) -> Self {
                <$t as One>::one()
            }

            fn ratio_pow(m: u32, base: Alphabet, e: u32) -> Self {
                let inv = Float::recip(base.0 as $t);
                m as $t * Float::powi(inv, e as i32)
            }

            fn plus(&self, rhs: &Self) -> Self {
                self + rhs
            }

            // Rounding noise may go slightly negative; floats never report underflow.
            fn minus(&self, rhs: &Self) -> Option<Self> {
                Some(self - rhs)
            }

            fn times(&self, rhs: &Self) -> Self {
                self * rhs
            }

            fn is_zero(&self) -> bool {
                Zero::is_zero(self)
            }

            fn approx(&self) -> f64 {
                *self as f64
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);
