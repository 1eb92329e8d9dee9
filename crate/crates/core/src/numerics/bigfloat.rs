//! Binary floating point with an arbitrary, per-value precision.
//!
//! A [`BigFloat`] is the dyadic rational `mantissa * 2^exponent` where the
//! mantissa carries at most `precision` significant bits. Every operation
//! computes the exact result (or enough of it plus a sticky bit) and then
//! rounds once, half to even, so results are correctly rounded.
//!
//! Values are kept canonical: the mantissa is odd (or zero with exponent 0),
//! which makes structural equality coincide with numeric equality.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Smallest precision a float may carry.
pub const MIN_PRECISION_BITS: u32 = 24;

#[derive(Clone, Debug)]
pub struct BigFloat {
    mantissa: BigInt,
    exponent: i64,
    precision: u32,
}

fn bits_of(m: &BigInt) -> i64 {
    m.bits() as i64
}

fn shl(m: &BigInt, by: i64) -> BigInt {
    debug_assert!(by >= 0);
    m << (by as usize)
}

impl BigFloat {
    pub fn zero(precision: u32) -> Self {
        BigFloat {
            mantissa: BigInt::zero(),
            exponent: 0,
            precision: precision.max(MIN_PRECISION_BITS),
        }
    }

    /// Rounds `m * 2^e` to `precision` bits.
    pub fn from_parts(m: BigInt, e: i64, precision: u32) -> Self {
        Self::round(m, e, false, precision.max(MIN_PRECISION_BITS))
    }

    pub fn from_bigint(m: BigInt, precision: u32) -> Self {
        Self::from_parts(m, 0, precision)
    }

    pub fn from_i64(v: i64, precision: u32) -> Self {
        Self::from_bigint(BigInt::from(v), precision)
    }

    /// Correctly rounded conversion of an exact rational.
    pub fn from_rational(r: &BigRational, precision: u32) -> Self {
        let precision = precision.max(MIN_PRECISION_BITS);
        if r.is_zero() {
            return Self::zero(precision);
        }
        let numer = r.numer();
        let denom = r.denom();
        if denom.is_one() {
            return Self::from_parts(numer.clone(), 0, precision);
        }
        let k = precision as i64 + 2 + bits_of(denom) - bits_of(numer);
        let (num, den) = if k >= 0 {
            (shl(numer, k), denom.clone())
        } else {
            (numer.clone(), shl(denom, -k))
        };
        let (q, rem) = num.div_rem(&den);
        Self::round(q, -k, !rem.is_zero(), precision)
    }

    /// Nearest float to an `f64`; exact whenever `precision >= 53`.
    pub fn from_f64(v: f64, precision: u32) -> Option<Self> {
        let r = BigRational::from_float(v)?;
        Some(Self::from_rational(&r, precision))
    }

    // The sticky flag records that the true value lies strictly beyond
    // `m * 2^e` in the direction away from zero, by less than one unit of m.
    fn round(m: BigInt, e: i64, sticky: bool, precision: u32) -> Self {
        if m.is_zero() {
            debug_assert!(!sticky);
            return Self::zero(precision);
        }
        let (sign, mut mag) = m.into_parts();
        let mut e = e;
        if sticky {
            // Two extra bits keep the sticky contribution below the rounding bit.
            mag = (mag << 2usize) | BigUint::one();
            e -= 2;
        }
        let bits = mag.bits() as i64;
        if bits > precision as i64 {
            let shift = (bits - precision as i64) as usize;
            let rem_mask = (BigUint::one() << shift) - BigUint::one();
            let rem = &mag & &rem_mask;
            let mut q = mag >> shift;
            let half = BigUint::one() << (shift - 1);
            let round_up = match rem.cmp(&half) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => q.is_odd(),
            };
            if round_up {
                q += 1u32;
            }
            mag = q;
            e += shift as i64;
        }
        let tz = mag.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            mag >>= tz as usize;
            e += tz as i64;
        }
        BigFloat {
            mantissa: BigInt::from_biguint(sign, mag),
            exponent: e,
            precision,
        }
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Same value, re-rounded to `precision` bits.
    pub fn with_precision(&self, precision: u32) -> Self {
        Self::from_parts(self.mantissa.clone(), self.exponent, precision)
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn signum(&self) -> i32 {
        match self.mantissa.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    /// Position of the leading bit: `2^(top-1) <= |x| < 2^top`.
    fn top(&self) -> i64 {
        self.exponent + bits_of(&self.mantissa)
    }

    /// Floor of log2 |x|, or `None` for zero.
    pub fn log2_floor(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.top() - 1)
        }
    }

    pub fn neg(&self) -> Self {
        BigFloat {
            mantissa: -&self.mantissa,
            exponent: self.exponent,
            precision: self.precision,
        }
    }

    pub fn abs(&self) -> Self {
        BigFloat {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
            precision: self.precision,
        }
    }

    /// Multiplication by `2^k`, exact.
    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        BigFloat {
            mantissa: self.mantissa.clone(),
            exponent: self.exponent + k,
            precision: self.precision,
        }
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exponent >= 0 {
            BigRational::from_integer(shl(&self.mantissa, self.exponent))
        } else {
            BigRational::new(self.mantissa.clone(), BigInt::one() << ((-self.exponent) as usize))
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = bits_of(&self.mantissa);
        let (m, e) = if bits > 64 {
            let shift = bits - 64;
            (&self.mantissa >> (shift as usize), self.exponent + shift)
        } else {
            (self.mantissa.clone(), self.exponent)
        };
        let m = m.to_f64().unwrap_or(0.0);
        if e > 2200 {
            return m.signum() * f64::INFINITY;
        }
        if e < -2200 {
            return 0.0;
        }
        let half = (e / 2) as i32;
        m * 2f64.powi(half) * 2f64.powi(e as i32 - half)
    }

    pub fn add(&self, other: &Self) -> Self {
        let precision = self.precision.max(other.precision);
        if self.is_zero() {
            return other.with_precision(precision);
        }
        if other.is_zero() {
            return self.with_precision(precision);
        }
        let (big, small) = if self.top() >= other.top() {
            (self, other)
        } else {
            (other, self)
        };
        // An operand far below the rounding position only matters through its
        // sign; replace it by a tiny stand-in with the same sign.
        let floor = big.top() - precision as i64 - 4;
        let (sm, se) = if small.top() <= floor {
            let unit = if small.is_negative() { -BigInt::one() } else { BigInt::one() };
            (unit, floor - 1)
        } else {
            (small.mantissa.clone(), small.exponent)
        };
        let e = big.exponent.min(se);
        let m = shl(&big.mantissa, big.exponent - e) + shl(&sm, se - e);
        Self::round(m, e, false, precision)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let precision = self.precision.max(other.precision);
        Self::round(
            &self.mantissa * &other.mantissa,
            self.exponent + other.exponent,
            false,
            precision,
        )
    }

    /// Panics on division by zero, like integer division.
    pub fn div(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "BigFloat division by zero");
        let precision = self.precision.max(other.precision);
        if self.is_zero() {
            return Self::zero(precision);
        }
        let k = precision as i64 + 2 + bits_of(&other.mantissa) - bits_of(&self.mantissa);
        let (num, den) = if k >= 0 {
            (shl(&self.mantissa, k), other.mantissa.clone())
        } else {
            (self.mantissa.clone(), shl(&other.mantissa, -k))
        };
        let (q, rem) = num.div_rem(&den);
        // Truncated division: the remainder has the sign of the true excess.
        Self::round(q, self.exponent - other.exponent - k, !rem.is_zero(), precision)
    }

    /// Correctly rounded square root; `None` for negative input.
    pub fn sqrt(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        if self.is_zero() {
            return Some(self.clone());
        }
        let mut m = self.mantissa.clone();
        let mut e = self.exponent;
        if e.rem_euclid(2) != 0 {
            m <<= 1usize;
            e -= 1;
        }
        let want = 2 * (self.precision as i64 + 2);
        let mut t = (want - bits_of(&m) + 1) / 2;
        if t < 0 {
            t = 0;
        }
        let scaled = shl(&m, 2 * t);
        let s = scaled.sqrt();
        let exact = &s * &s == scaled;
        Some(Self::round(s, (e - 2 * t) / 2, !exact, self.precision))
    }

    pub fn floor(&self) -> BigInt {
        if self.exponent >= 0 {
            shl(&self.mantissa, self.exponent)
        } else {
            self.mantissa
                .div_floor(&(BigInt::one() << ((-self.exponent) as usize)))
        }
    }

    pub fn ceil(&self) -> BigInt {
        -(self.neg().floor())
    }

    /// Natural logarithm; `None` unless strictly positive.
    pub fn ln(&self) -> Option<Self> {
        if self.signum() <= 0 {
            return None;
        }
        let p = self.precision;
        let work = p + 32 + (64 - (self.top().unsigned_abs()).leading_zeros());
        // x = f * 2^k with f in [1, 2).
        let k = self.top() - 1;
        let f = BigFloat::from_parts(self.mantissa.clone(), self.exponent - k, work);
        let one = BigFloat::from_i64(1, work);
        let z = f.sub(&one).div(&f.add(&one));
        let ln_f = atanh_series(&z, work).mul_pow2(1);
        let ln2 = ln2(work);
        let res = ln2.mul(&BigFloat::from_i64(k, work)).add(&ln_f);
        Some(res.with_precision(p))
    }

    pub fn exp(&self) -> Self {
        let p = self.precision;
        if self.is_zero() {
            return BigFloat::from_i64(1, p);
        }
        const HALVINGS: u32 = 24;
        let mag_bits = self.top().max(0) as u32;
        let work = p + 48 + HALVINGS + mag_bits;
        let ln2 = ln2(work + mag_bits);
        let x = self.with_precision(work + mag_bits);
        // x = k ln2 + t, |t| <= ln2 / 2
        let k = x.div(&ln2).add(&BigFloat::from_rational(
            &BigRational::new(BigInt::one(), BigInt::from(2)),
            work,
        ));
        let k = k.floor();
        let t = x.sub(&ln2.mul(&BigFloat::from_bigint(k.clone(), work + mag_bits)));
        let t = t.with_precision(work).mul_pow2(-(HALVINGS as i64));
        let mut sum = BigFloat::from_i64(1, work);
        let mut term = BigFloat::from_i64(1, work);
        let mut i = 1i64;
        loop {
            term = term.mul(&t).div(&BigFloat::from_i64(i, work));
            if term.is_zero() || term.top() < sum.top() - work as i64 - 2 {
                break;
            }
            sum = sum.add(&term);
            i += 1;
        }
        for _ in 0..HALVINGS {
            sum = sum.mul(&sum);
        }
        let k = k.to_i64().expect("exponent of exp out of range");
        sum.mul_pow2(k).with_precision(p)
    }

    /// `self^exponent` for positive `self` and arbitrary real exponent.
    pub fn powf(&self, exponent: &Self) -> Option<Self> {
        let p = self.precision.max(exponent.precision);
        let work = p + 32;
        let ln = self.with_precision(work).ln()?;
        Some(ln.mul(&exponent.with_precision(work)).exp().with_precision(p))
    }

    /// Integer power by repeated squaring at extra working precision, so the
    /// result is within a couple of units in the last place.
    pub fn powi(&self, n: u64) -> Self {
        let p = self.precision;
        let guard = 64 + 2 * (64 - n.leading_zeros());
        let mut base = self.with_precision(p + guard);
        let mut acc = BigFloat::from_i64(1, p + guard);
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc.with_precision(p)
    }

    pub fn cmp_value(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.signum(), other.signum());
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == 0 {
            return Ordering::Equal;
        }
        let mag = match self.top().cmp(&other.top()) {
            Ordering::Equal => {
                let e = self.exponent.min(other.exponent);
                let a = shl(&self.mantissa.abs(), self.exponent - e);
                let b = shl(&other.mantissa.abs(), other.exponent - e);
                a.cmp(&b)
            }
            o => o,
        };
        if sa < 0 {
            mag.reverse()
        } else {
            mag
        }
    }

    /// Compares with an exact rational without rounding either side.
    pub fn cmp_rational(&self, r: &BigRational) -> Ordering {
        self.to_rational().cmp(r)
    }
}

fn atanh_series(z: &BigFloat, work: u32) -> BigFloat {
    let z2 = z.mul(z);
    let mut power = z.clone();
    let mut sum = z.clone();
    let mut k = 1i64;
    loop {
        power = power.mul(&z2);
        if power.is_zero() {
            break;
        }
        let term = power.div(&BigFloat::from_i64(2 * k + 1, work));
        if term.top() < sum.top() - work as i64 - 2 {
            break;
        }
        sum = sum.add(&term);
        k += 1;
    }
    sum
}

/// ln 2 = 2 atanh(1/3).
fn ln2(work: u32) -> BigFloat {
    let third = BigFloat::from_rational(&BigRational::new(BigInt::one(), BigInt::from(3)), work + 8);
    atanh_series(&third, work + 8).mul_pow2(1).with_precision(work)
}

impl PartialEq for BigFloat {
    fn eq(&self, other: &Self) -> bool {
        self.mantissa == other.mantissa && self.exponent == other.exponent
    }
}

impl Eq for BigFloat {}

impl PartialOrd for BigFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BigFloat {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_value(other)
    }
}

impl fmt::Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}
