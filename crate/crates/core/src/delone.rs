//! One-dimensional Delone sets with certified packing and covering radii.
//!
//! Every variant is a strictly increasing map `k -> y_k` from the integers, so
//! window queries reduce to locating two indices. Indices are big integers:
//! windows around `alpha^n x` for large `n` sit far out on the line.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::numerics::{Precision, Scalar};

/// Default cap on the number of points a single window query may return.
pub const DEFAULT_POINT_BUDGET: u64 = 4_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum DeloneVariant {
    /// `{ scale * k + offset : k in Z }`.
    IntegerLattice { scale: Scalar, offset: Scalar },
    /// `{ floor(k theta) : k in Z }` for `theta > 1`.
    Beatty { theta: Scalar },
    /// Gaps `1` and `phi` in Fibonacci-word order, with `y_0 = 0`.
    FibonacciChain,
    /// `{ k + epsilon * u(seed, k) }` with `u` a hash-derived value in `[-1, 1)`.
    JitteredLattice { epsilon: Scalar, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct DeloneSet {
    variant: DeloneVariant,
    packing_radius: Scalar,
    covering_radius: Scalar,
    phi: Option<Scalar>,
    point_budget: u64,
}

impl DeloneSet {
    pub fn integer_lattice(scale: Scalar, offset: Scalar) -> Result<Self> {
        if !scale.is_positive() {
            return Err(Error::Config("lattice scale must be positive".into()));
        }
        let half = &scale / &Scalar::from_int(2);
        Ok(DeloneSet {
            variant: DeloneVariant::IntegerLattice { scale, offset },
            packing_radius: half.clone(),
            covering_radius: half,
            phi: None,
            point_budget: DEFAULT_POINT_BUDGET,
        })
    }

    /// The integers.
    pub fn integers() -> Self {
        Self::integer_lattice(Scalar::one(), Scalar::zero()).expect("unit lattice")
    }

    /// Irrationality of `theta` is assumed, not checked.
    pub fn beatty(theta: Scalar) -> Result<Self> {
        if theta <= Scalar::one() {
            return Err(Error::Config("beatty theta must exceed 1".into()));
        }
        let whole = Scalar::from_bigint(theta.floor());
        let two = Scalar::from_int(2);
        Ok(DeloneSet {
            packing_radius: &whole / &two,
            covering_radius: (whole + Scalar::one()) / two,
            variant: DeloneVariant::Beatty { theta },
            phi: None,
            point_budget: DEFAULT_POINT_BUDGET,
        })
    }

    pub fn fibonacci_chain(prec: Precision) -> Self {
        let phi = Scalar::golden_ratio(prec);
        DeloneSet {
            variant: DeloneVariant::FibonacciChain,
            packing_radius: Scalar::ratio(1, 2),
            covering_radius: &phi / &Scalar::from_int(2),
            phi: Some(phi),
            point_budget: DEFAULT_POINT_BUDGET,
        }
    }

    pub fn jittered_lattice(epsilon: Scalar, seed: u64) -> Result<Self> {
        if epsilon.is_negative() || epsilon >= Scalar::ratio(1, 2) {
            return Err(Error::Config("jitter epsilon must lie in [0, 1/2)".into()));
        }
        let two = Scalar::from_int(2);
        let twice = &epsilon * &two;
        Ok(DeloneSet {
            packing_radius: (Scalar::one() - &twice) / &two,
            covering_radius: (Scalar::one() + &twice) / &two,
            variant: DeloneVariant::JitteredLattice { epsilon, seed },
            phi: None,
            point_budget: DEFAULT_POINT_BUDGET,
        })
    }

    pub fn with_point_budget(mut self, budget: u64) -> Self {
        self.point_budget = budget;
        self
    }

    pub fn point_budget(&self) -> u64 {
        self.point_budget
    }

    pub fn variant(&self) -> &DeloneVariant {
        &self.variant
    }

    /// Certified packing radius `r`: every gap is at least `2r`.
    pub fn packing_radius(&self) -> &Scalar {
        &self.packing_radius
    }

    /// Certified covering radius `R`: every gap is at most `2R`.
    pub fn covering_radius(&self) -> &Scalar {
        &self.covering_radius
    }

    /// `(scale, offset)` for lattice variants.
    pub fn lattice_params(&self) -> Option<(&Scalar, &Scalar)> {
        match &self.variant {
            DeloneVariant::IntegerLattice { scale, offset } => Some((scale, offset)),
            _ => None,
        }
    }

    /// True when every point is an exact rational.
    pub fn is_exact(&self) -> bool {
        match &self.variant {
            DeloneVariant::IntegerLattice { scale, offset } => scale.is_exact() && offset.is_exact(),
            DeloneVariant::Beatty { .. } => true,
            DeloneVariant::FibonacciChain => false,
            DeloneVariant::JitteredLattice { epsilon, .. } => epsilon.is_exact(),
        }
    }

    /// The `k`-th point; strictly increasing in `k`.
    pub fn point_at(&self, k: &BigInt) -> Scalar {
        match &self.variant {
            DeloneVariant::IntegerLattice { scale, offset } => {
                Scalar::from_bigint(k.clone()) * scale + offset
            }
            DeloneVariant::Beatty { theta } => {
                Scalar::from_bigint((Scalar::from_bigint(k.clone()) * theta).floor())
            }
            DeloneVariant::FibonacciChain => {
                let long = fibonacci_long_gaps(k);
                let short = k - &long;
                let phi = self.phi.as_ref().expect("fibonacci chain carries phi");
                Scalar::from_bigint(long) * phi + Scalar::from_bigint(short)
            }
            DeloneVariant::JitteredLattice { epsilon, seed } => {
                let u = Scalar::from_rational(jitter_unit(*seed, k));
                Scalar::from_bigint(k.clone()) + &u * epsilon
            }
        }
    }

    /// An index whose point is close to `x`; the walks below correct it.
    fn index_guess(&self, x: &Scalar) -> BigInt {
        match &self.variant {
            DeloneVariant::IntegerLattice { scale, offset } => ((x - offset) / scale).floor(),
            DeloneVariant::Beatty { theta } => (x / theta).floor(),
            DeloneVariant::FibonacciChain => {
                let phi = self.phi.as_ref().expect("fibonacci chain carries phi");
                let mean_gap = Scalar::from_int(3) - phi;
                (x / &mean_gap).floor()
            }
            DeloneVariant::JitteredLattice { .. } => (x + &Scalar::ratio(1, 2)).floor(),
        }
    }

    /// Smallest `k` with `y_k >= x`.
    pub fn first_index_at_or_above(&self, x: &Scalar) -> BigInt {
        let mut k = self.index_guess(x);
        while &self.point_at(&k) < x {
            k += 1;
        }
        loop {
            let prev = &k - 1;
            if &self.point_at(&prev) >= x {
                k = prev;
            } else {
                return k;
            }
        }
    }

    /// Largest `k` with `y_k <= x`.
    pub fn last_index_at_or_below(&self, x: &Scalar) -> BigInt {
        let mut k = self.index_guess(x);
        while &self.point_at(&k) > x {
            k -= 1;
        }
        loop {
            let next = &k + 1;
            if &self.point_at(&next) <= x {
                k = next;
            } else {
                return k;
            }
        }
    }

    /// Upper bound `(hi - lo)/(2r) + 1` on the number of points in `[lo, hi]`.
    pub fn max_points_in(&self, lo: &Scalar, hi: &Scalar) -> BigInt {
        let two_r = &self.packing_radius * &Scalar::from_int(2);
        ((hi - lo) / two_r).floor() + 1
    }

    /// Number of points in `[lo, hi]`, found without enumerating them.
    pub fn count_in_window(&self, lo: &Scalar, hi: &Scalar) -> BigInt {
        if lo > hi {
            return BigInt::zero();
        }
        let first = self.first_index_at_or_above(lo);
        let last = self.last_index_at_or_below(hi);
        if last < first {
            BigInt::zero()
        } else {
            last - first + 1
        }
    }

    /// Points of the set in `[lo, hi]` with their indices, ascending.
    pub fn indexed_points_in_window(&self, lo: &Scalar, hi: &Scalar) -> Result<Vec<(BigInt, Scalar)>> {
        if lo > hi {
            return Err(Error::InvalidInterval {
                lo: lo.to_string(),
                hi: hi.to_string(),
            });
        }
        let required = self.max_points_in(lo, hi);
        if required > BigInt::from(self.point_budget) {
            return Err(Error::BudgetExceeded {
                required,
                budget: self.point_budget,
            });
        }
        let mut k = self.first_index_at_or_above(lo);
        let mut out = Vec::new();
        loop {
            let y = self.point_at(&k);
            if &y > hi {
                break;
            }
            out.push((k.clone(), y));
            k += 1;
        }
        Ok(out)
    }

    /// Points of the set in the closed window `[lo, hi]`, ascending.
    pub fn points_in_window(&self, lo: &Scalar, hi: &Scalar) -> Result<Vec<Scalar>> {
        Ok(self
            .indexed_points_in_window(lo, hi)?
            .into_iter()
            .map(|(_, y)| y)
            .collect())
    }

    /// Closest point to `x` and its distance; ties go to the smaller point.
    pub fn nearest_point(&self, x: &Scalar) -> (Scalar, Scalar) {
        let k = self.last_index_at_or_below(x);
        let below = self.point_at(&k);
        let above = self.point_at(&(k + 1));
        let d_below = x - &below;
        let d_above = &above - x;
        if d_below <= d_above {
            (below, d_below)
        } else {
            (above, d_above)
        }
    }

    /// Half the smallest and half the largest gap between consecutive points
    /// in `[lo, hi]`.
    pub fn estimate_radii(&self, lo: &Scalar, hi: &Scalar) -> Result<(Scalar, Scalar)> {
        let points = self.points_in_window(lo, hi)?;
        if points.len() < 2 {
            return Err(Error::InsufficientWindow {
                lo: lo.to_string(),
                hi: hi.to_string(),
            });
        }
        let mut gaps = points.windows(2).map(|w| &w[1] - &w[0]);
        let first = gaps.next().expect("two points");
        let (min, max) = gaps.fold((first.clone(), first), |(mn, mx), g| {
            (mn.min(g.clone()), mx.max(g))
        });
        let two = Scalar::from_int(2);
        Ok((&min / &two, &max / &two))
    }
}

/// `floor(m * phi)` computed exactly with an integer square root.
pub fn floor_mul_golden(m: &BigInt) -> BigInt {
    if m.is_zero() {
        return BigInt::zero();
    }
    let a = m.abs();
    // a phi = (a + sqrt(5 a^2)) / 2 and sqrt(5 a^2) is irrational for a > 0.
    let root = (BigInt::from(5) * &a * &a).sqrt();
    let fl = (&a + root).div_floor(&BigInt::from(2));
    if m.is_negative() {
        -fl - 1
    } else {
        fl
    }
}

/// Number of long gaps among the first `k` gaps of the Fibonacci chain
/// (signed for negative `k`): `floor((k + 1) phi) - k - 1`.
fn fibonacci_long_gaps(k: &BigInt) -> BigInt {
    floor_mul_golden(&(k + 1)) - k - 1
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic value in `[-1, 1)` with denominator `2^31`, a function of
/// `(seed, k)` only.
fn jitter_unit(seed: u64, k: &BigInt) -> BigRational {
    let (sign, digits) = k.to_u64_digits();
    let mut h = splitmix64(seed ^ if sign == Sign::Minus { 0xA5A5_A5A5_A5A5_A5A5 } else { 0 });
    for d in &digits {
        h = splitmix64(h ^ d);
    }
    h = splitmix64(h ^ digits.len() as u64);
    let top = (h >> 32) as i64 - (1i64 << 31);
    BigRational::new(BigInt::from(top), BigInt::one() << 31usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> Scalar {
        Scalar::ratio(p, d)
    }

    fn prec() -> Precision {
        Precision::new(128)
    }

    #[test]
    fn lattice_window() {
        let z = DeloneSet::integers();
        let pts = z.points_in_window(&q(-5, 2), &q(5, 2)).unwrap();
        let expected: Vec<Scalar> = (-2..=2).map(Scalar::from_int).collect();
        assert_eq!(pts, expected);
    }

    #[test]
    fn beatty_golden_window() {
        let set = DeloneSet::beatty(Scalar::golden_ratio(prec())).unwrap();
        let pts = set.points_in_window(&Scalar::zero(), &Scalar::from_int(10)).unwrap();
        // Oracle: floor(n phi) for n = 0..6 by direct f64 evaluation.
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let oracle: Vec<Scalar> = (0..=6)
            .map(|n| Scalar::from_int((n as f64 * phi).floor() as i64))
            .collect();
        assert_eq!(pts, oracle);
        assert_eq!(pts, [0, 1, 3, 4, 6, 8, 9].map(Scalar::from_int).to_vec());
    }

    #[test]
    fn fibonacci_window_has_gaps_phi_one_phi() {
        let set = DeloneSet::fibonacci_chain(prec());
        let phi = Scalar::golden_ratio(prec());
        let pts = set.points_in_window(&Scalar::zero(), &Scalar::from_int(5)).unwrap();
        let one = Scalar::one();
        let expected = vec![
            Scalar::zero(),
            phi.clone(),
            &phi + &one,
            &(&phi + &phi) + &one,
        ];
        assert_eq!(pts.len(), expected.len());
        for (p, e) in pts.iter().zip(&expected) {
            assert!((p - e).abs() <= Scalar::pow2(-120));
        }
    }

    #[test]
    fn golden_floor_matches_float_oracle() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        for m in -2000i64..=2000 {
            let oracle = (m as f64 * phi).floor() as i64;
            assert_eq!(floor_mul_golden(&BigInt::from(m)), BigInt::from(oracle), "m = {m}");
        }
    }

    #[test]
    fn nearest_point_examples() {
        let z = DeloneSet::integers();
        assert_eq!(z.nearest_point(&q(37, 10)), (Scalar::from_int(4), q(3, 10)));
        assert_eq!(z.nearest_point(&q(1, 2)), (Scalar::zero(), q(1, 2)));
        let beatty = DeloneSet::beatty(Scalar::golden_ratio(prec())).unwrap();
        assert_eq!(beatty.nearest_point(&Scalar::from_int(5)), (Scalar::from_int(4), Scalar::one()));
    }

    #[test]
    fn estimate_radii_examples() {
        let z = DeloneSet::integers();
        assert_eq!(
            z.estimate_radii(&Scalar::zero(), &Scalar::from_int(100)).unwrap(),
            (q(1, 2), q(1, 2))
        );
        let beatty = DeloneSet::beatty(Scalar::golden_ratio(prec())).unwrap();
        assert_eq!(
            beatty.estimate_radii(&Scalar::zero(), &Scalar::from_int(100)).unwrap(),
            (q(1, 2), Scalar::one())
        );
        let fib = DeloneSet::fibonacci_chain(prec());
        let (r, big_r) = fib.estimate_radii(&Scalar::zero(), &Scalar::from_int(100)).unwrap();
        let half_phi = Scalar::golden_ratio(prec()) / Scalar::from_int(2);
        assert!((r - q(1, 2)).abs() <= Scalar::pow2(-110));
        assert!((big_r - half_phi).abs() <= Scalar::pow2(-110));
    }

    #[test]
    fn estimate_radii_needs_two_points() {
        let z = DeloneSet::integers();
        assert!(matches!(
            z.estimate_radii(&q(1, 4), &q(3, 2)),
            Err(Error::InsufficientWindow { .. })
        ));
    }

    #[test]
    fn budget_is_enforced() {
        let z = DeloneSet::integers().with_point_budget(10);
        match z.points_in_window(&Scalar::zero(), &Scalar::from_int(100)) {
            Err(Error::BudgetExceeded { required, budget }) => {
                assert_eq!(required, BigInt::from(101));
                assert_eq!(budget, 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jitter_zero_is_the_integers() {
        let j = DeloneSet::jittered_lattice(Scalar::zero(), 99).unwrap();
        let z = DeloneSet::integers();
        let (lo, hi) = (Scalar::from_int(-50), Scalar::from_int(50));
        assert_eq!(j.points_in_window(&lo, &hi).unwrap(), z.points_in_window(&lo, &hi).unwrap());
    }

    #[test]
    fn jitter_is_stateless() {
        let j = DeloneSet::jittered_lattice(q(1, 5), 7).unwrap();
        let k = BigInt::from(123_456_789_012i64);
        assert_eq!(j.point_at(&k), j.point_at(&k));
        let far = j.points_in_window(&Scalar::from_int(1_000_000), &Scalar::from_int(1_000_010)).unwrap();
        let near_first = j.points_in_window(&Scalar::from_int(999_990), &Scalar::from_int(1_000_010)).unwrap();
        assert!(near_first.ends_with(&far));
    }

    #[test]
    fn huge_indices_are_supported() {
        let fib = DeloneSet::fibonacci_chain(Precision::new(400));
        let x = Scalar::pow2(200);
        let (y, d) = fib.nearest_point(&x);
        assert!(&d <= fib.covering_radius());
        assert!((y - x).abs() == d);
        assert_eq!(fib.count_in_window(&Scalar::zero(), &Scalar::from_int(5)), BigInt::from(4));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(DeloneSet::integer_lattice(Scalar::zero(), Scalar::zero()).is_err());
        assert!(DeloneSet::beatty(Scalar::one()).is_err());
        assert!(DeloneSet::jittered_lattice(q(1, 2), 0).is_err());
    }
}
