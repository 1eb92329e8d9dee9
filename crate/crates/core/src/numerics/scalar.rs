//! Scalars that are either exact rationals or tracked-precision binary floats.
//!
//! Arithmetic between two exact values stays exact. As soon as a float takes
//! part the result is a float at the larger of the participating precisions,
//! so precision never silently drops.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::bigfloat::{BigFloat, MIN_PRECISION_BITS};
use crate::error::{Error, Result};

/// Working precision, in mantissa bits, of the big-float mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Precision(u32);

impl Precision {
    /// Bits reserved on top of the orbit's magnitude.
    pub const GUARD_BITS: u32 = 64;

    pub fn new(bits: u32) -> Self {
        Precision(bits.max(MIN_PRECISION_BITS))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn doubled(self) -> Self {
        Precision(self.0.saturating_mul(2))
    }

    /// `ceil(n_max * log2|alpha|) + GUARD_BITS`: an orbit point `alpha^n x`
    /// with `n <= n_max` then keeps at least the guard bits after the point.
    pub fn for_orbit(n_max: u64, alpha: &Scalar) -> Self {
        let magnitude = (n_max as f64 * alpha.log2_abs()).ceil().max(0.0);
        Precision::new((magnitude as u32).saturating_add(Self::GUARD_BITS))
    }

    /// Slack `2^(8 - bits)` granted to closed comparisons in big-float mode.
    pub fn tolerance(self) -> Scalar {
        let shift = self.0.saturating_sub(8) as usize;
        Scalar::Exact(BigRational::new(BigInt::one(), BigInt::one() << shift))
    }
}

#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(BigRational),
    Float(BigFloat),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(BigRational::one())
    }

    pub fn from_int(v: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_bigint(v: BigInt) -> Self {
        Scalar::Exact(BigRational::from_integer(v))
    }

    /// `p/q`; panics if `q == 0`.
    pub fn ratio(p: i64, q: i64) -> Self {
        Scalar::Exact(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Scalar::Exact(r)
    }

    pub fn from_float(f: BigFloat) -> Self {
        Scalar::Float(f)
    }

    /// `2^k` exactly.
    pub fn pow2(k: i64) -> Self {
        let p = BigInt::one() << (k.unsigned_abs() as usize);
        if k >= 0 {
            Scalar::from_bigint(p)
        } else {
            Scalar::Exact(BigRational::new(BigInt::one(), p))
        }
    }

    /// The golden ratio at the given precision.
    pub fn golden_ratio(prec: Precision) -> Self {
        let five = BigFloat::from_i64(5, prec.bits() + 4);
        let phi = five
            .sqrt()
            .expect("sqrt of a positive number")
            .add(&BigFloat::from_i64(1, prec.bits() + 4))
            .mul_pow2(-1);
        Scalar::Float(phi.with_precision(prec.bits()))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    /// Precision in bits for floats, `None` for exact values.
    pub fn precision(&self) -> Option<u32> {
        match self {
            Scalar::Exact(_) => None,
            Scalar::Float(f) => Some(f.precision()),
        }
    }

    /// The exact value; floats are dyadic rationals.
    pub fn to_rational(&self) -> BigRational {
        match self {
            Scalar::Exact(r) => r.clone(),
            Scalar::Float(f) => f.to_rational(),
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    pub fn to_float(&self, prec: Precision) -> BigFloat {
        match self {
            Scalar::Exact(r) => BigFloat::from_rational(r, prec.bits()),
            Scalar::Float(f) => f.with_precision(prec.bits().max(f.precision())),
        }
    }

    /// Keeps the value as is when `exact`, otherwise converts it to a float.
    pub fn into_mode(self, exact: bool, prec: Precision) -> Self {
        if exact {
            self
        } else {
            Scalar::Float(self.to_float(prec))
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => {
                let f = r.to_f64().unwrap_or(f64::NAN);
                if f.is_finite() {
                    f
                } else {
                    BigFloat::from_rational(r, 64).to_f64()
                }
            }
            Scalar::Float(f) => f.to_f64(),
        }
    }

    /// Approximate `log2 |self|`, for sizing precisions and budgets.
    pub fn log2_abs(&self) -> f64 {
        let f = match self {
            Scalar::Exact(r) => BigFloat::from_rational(r, 64),
            Scalar::Float(f) => f.with_precision(64),
        };
        match f.log2_floor() {
            None => f64::NEG_INFINITY,
            Some(e) => {
                let frac = f.abs().mul_pow2(-e).to_f64();
                e as f64 + frac.log2()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Float(f) => f.is_zero(),
        }
    }

    pub fn signum(&self) -> i32 {
        match self {
            Scalar::Exact(r) => {
                if r.is_positive() {
                    1
                } else if r.is_negative() {
                    -1
                } else {
                    0
                }
            }
            Scalar::Float(f) => f.signum(),
        }
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    pub fn abs(&self) -> Self {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.abs()),
            Scalar::Float(f) => Scalar::Float(f.abs()),
        }
    }

    pub fn floor(&self) -> BigInt {
        match self {
            Scalar::Exact(r) => r.floor().to_integer(),
            Scalar::Float(f) => f.floor(),
        }
    }

    pub fn ceil(&self) -> BigInt {
        match self {
            Scalar::Exact(r) => r.ceil().to_integer(),
            Scalar::Float(f) => f.ceil(),
        }
    }

    /// True when the value is an integer.
    pub fn is_integer(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_integer(),
            Scalar::Float(f) => f.exponent() >= 0 || f.is_zero(),
        }
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

    /// `self^n`, exact for rationals. For floats the result is within two
    /// units in the last place, and the call fails when `n log2|self|` would
    /// leave fewer than [`Precision::GUARD_BITS`] bits of headroom.
    pub fn pow(&self, n: u64) -> Result<Self> {
        match self {
            Scalar::Exact(r) => Ok(Scalar::Exact(pow_rational(r, n))),
            Scalar::Float(f) => {
                let needed = (n as f64 * self.log2_abs()).ceil().max(0.0) as u64;
                let available = (f.precision() as u64).saturating_sub(Precision::GUARD_BITS as u64);
                if needed > available {
                    return Err(Error::PrecisionUnderflow {
                        required_bits: needed + Precision::GUARD_BITS as u64,
                        available_bits: f.precision() as u64,
                    });
                }
                Ok(Scalar::Float(f.powi(n)))
            }
        }
    }

    pub fn recip(&self) -> Self {
        Scalar::one() / self
    }

    /// Square root at `prec`; exact when the rational is a perfect square.
    pub fn sqrt(&self, prec: Precision) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        if let Scalar::Exact(r) = self {
            let (n, d) = (r.numer(), r.denom());
            let (sn, sd) = (num_integer::Roots::sqrt(n), num_integer::Roots::sqrt(d));
            if &(&sn * &sn) == n && &(&sd * &sd) == d {
                return Some(Scalar::Exact(BigRational::new(sn, sd)));
            }
        }
        self.to_float(prec).sqrt().map(Scalar::Float)
    }

    pub fn ln(&self, prec: Precision) -> Option<Self> {
        if let Scalar::Exact(r) = self {
            if r.is_one() {
                return Some(Scalar::zero());
            }
        }
        self.to_float(prec).ln().map(Scalar::Float)
    }

    pub fn exp(&self, prec: Precision) -> Self {
        if self.is_zero() {
            return Scalar::one();
        }
        Scalar::Float(self.to_float(prec).exp())
    }

    /// `self^e` for positive `self`; exact when `e` is a non-negative integer
    /// and `self` is exact.
    pub fn powf(&self, e: &Scalar, prec: Precision) -> Option<Self> {
        if let Scalar::Exact(er) = e {
            if er.is_integer() && !er.is_negative() {
                if let Some(k) = er.to_integer().to_u64() {
                    if self.is_exact() {
                        return self.pow(k).ok();
                    }
                    if let Scalar::Float(f) = self {
                        return Some(Scalar::Float(f.powi(k)));
                    }
                }
            }
        }
        if !self.is_positive() {
            return None;
        }
        self.to_float(prec)
            .powf(&e.to_float(prec))
            .map(Scalar::Float)
    }

    /// Parses `"p/q"`, decimals such as `"-1.25e-3"`, `"phi"` and
    /// `"sqrt(<rational>)"`. Irrational constants are produced at `prec`.
    pub fn parse(input: &str, prec: Precision) -> Result<Self> {
        let s = input.trim();
        if s.is_empty() {
            return Err(Error::parse(input, "empty string"));
        }
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest.trim()),
            None => (false, s.strip_prefix('+').unwrap_or(s).trim()),
        };
        let value = if body.eq_ignore_ascii_case("phi") {
            Scalar::golden_ratio(prec)
        } else if let Some(inner) = body
            .strip_prefix("sqrt(")
            .and_then(|rest| rest.strip_suffix(')'))
        {
            let arg = parse_rational(inner.trim())
                .ok_or_else(|| Error::parse(input, "sqrt argument must be a rational"))?;
            Scalar::Exact(arg)
                .sqrt(prec)
                .ok_or_else(|| Error::parse(input, "sqrt of a negative number"))?
        } else {
            Scalar::Exact(parse_rational(body).ok_or_else(|| {
                Error::parse(input, "expected a decimal, a rational p/q, phi or sqrt(..)")
            })?)
        };
        Ok(if neg { -value } else { value })
    }

    /// Exact `"p/q"` text (or `"p"` for integers) of the stored value.
    pub fn to_exact_string(&self) -> String {
        self.to_rational().to_string()
    }

    /// Scientific decimal with `digits` significant digits, rounded to nearest.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        let digits = digits.max(1);
        let r = self.to_rational();
        if r.is_zero() {
            return "0".to_string();
        }
        let neg = r.is_negative();
        let r = r.abs();
        let bit_diff = r.numer().bits() as f64 - r.denom().bits() as f64;
        let mut e10 = (bit_diff * std::f64::consts::LOG10_2).floor() as i64;
        let ten = BigInt::from(10);
        let lower = num_traits::pow(ten.clone(), digits - 1);
        let upper = &lower * &ten;
        let scaled = loop {
            let shift = digits as i64 - 1 - e10;
            let scaled = if shift >= 0 {
                &r * BigRational::from_integer(num_traits::pow(ten.clone(), shift as usize))
            } else {
                &r / BigRational::from_integer(num_traits::pow(ten.clone(), (-shift) as usize))
            };
            let rounded = round_half_even(&scaled);
            if rounded >= upper {
                e10 += 1;
            } else if rounded < lower {
                e10 -= 1;
            } else {
                break rounded;
            }
        };
        let text = scaled.to_string();
        let (head, tail) = text.split_at(1);
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        out.push_str(head);
        if !tail.is_empty() {
            out.push('.');
            out.push_str(tail);
        }
        out.push('e');
        out.push_str(&e10.to_string());
        out
    }
}

fn round_half_even(r: &BigRational) -> BigInt {
    let fl = r.floor();
    let frac = r - &fl;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let base = fl.to_integer();
    match frac.cmp(&half) {
        Ordering::Less => base,
        Ordering::Greater => base + 1,
        Ordering::Equal => {
            if base.is_even() {
                base
            } else {
                base + 1
            }
        }
    }
}

fn pow_rational(r: &BigRational, n: u64) -> BigRational {
    let numer = num_traits::pow(r.numer().clone(), n as usize);
    let denom = num_traits::pow(r.denom().clone(), n as usize);
    // Powers of a reduced fraction stay reduced.
    BigRational::new_raw(numer, denom)
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p = parse_decimal(p.trim())?;
        let q = parse_decimal(q.trim())?;
        if q.is_zero() {
            return None;
        }
        return Some(p / q);
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (neg, s) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let m: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        BigRational::from_integer(m * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(m, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Some(r)
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scalar {}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.cmp(b),
            (Scalar::Float(a), Scalar::Float(b)) => a.cmp_value(b),
            (Scalar::Float(a), Scalar::Exact(b)) => a.cmp_rational(b),
            (Scalar::Exact(a), Scalar::Float(b)) => b.cmp_rational(a).reverse(),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{r}"),
            Scalar::Float(x) => write!(f, "{}", self.to_decimal_string(((x.precision() as f64) * std::f64::consts::LOG10_2).ceil() as usize + 1)),
        }
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::from_int(v)
    }
}

impl From<BigInt> for Scalar {
    fn from(v: BigInt) -> Self {
        Scalar::from_bigint(v)
    }
}

fn binary(a: &Scalar, b: &Scalar, exact: impl Fn(&BigRational, &BigRational) -> BigRational, float: impl Fn(&BigFloat, &BigFloat) -> BigFloat) -> Scalar {
    match (a, b) {
        (Scalar::Exact(x), Scalar::Exact(y)) => Scalar::Exact(exact(x, y)),
        (Scalar::Float(x), Scalar::Float(y)) => Scalar::Float(float(x, y)),
        (Scalar::Float(x), Scalar::Exact(y)) => {
            Scalar::Float(float(x, &BigFloat::from_rational(y, x.precision())))
        }
        (Scalar::Exact(x), Scalar::Float(y)) => {
            Scalar::Float(float(&BigFloat::from_rational(x, y.precision()), y))
        }
    }
}

macro_rules! scalar_op {
    ($trait:ident, $method:ident, $exact:expr, $float:expr) => {
        impl<'a> $trait<&'a Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'a Scalar) -> Scalar {
                binary(self, rhs, $exact, $float)
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                binary(&self, &rhs, $exact, $float)
            }
        }
        impl<'a> $trait<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'a Scalar) -> Scalar {
                binary(&self, rhs, $exact, $float)
            }
        }
        impl<'a> $trait<Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                binary(self, &rhs, $exact, $float)
            }
        }
    };
}

scalar_op!(Add, add, |x, y| x + y, |x, y| x.add(y));
scalar_op!(Sub, sub, |x, y| x - y, |x, y| x.sub(y));
scalar_op!(Mul, mul, |x, y| x * y, |x, y| x.mul(y));
scalar_op!(Div, div, |x, y| x / y, |x, y| x.div(y));

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(-r),
            Scalar::Float(f) => Scalar::Float(f.neg()),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -(self.clone())
    }
}
