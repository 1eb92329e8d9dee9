//! Periodic interval unions: a pattern inside `[0, T]` repeated with period `T`.
//!
//! Level sets built from lattices are periodic, and their measures over a
//! window (or the measure of the intersection of two of them whose periods
//! divide one another) can be computed from a single period plus the two
//! partial periods at the window ends. The cost is independent of how many
//! periods the window spans.

use num_bigint::BigInt;

use super::{Interval, IntervalUnion, Scalar};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicUnion {
    period: Scalar,
    pattern: IntervalUnion,
}

impl PeriodicUnion {
    /// `pattern` must lie inside `[0, period]`.
    pub fn new(period: Scalar, pattern: IntervalUnion) -> Self {
        debug_assert!(period.is_positive());
        debug_assert!(pattern
            .bounds()
            .is_none_or(|(lo, hi)| !lo.is_negative() && hi <= period));
        PeriodicUnion { period, pattern }
    }

    pub fn empty(period: Scalar) -> Self {
        PeriodicUnion::new(period, IntervalUnion::empty())
    }

    /// Union of the closed balls `B(c + kT, radius)` over all listed centers `c`
    /// and all integers `k`.
    pub fn from_balls(period: Scalar, centers: &[Scalar], radius: &Scalar) -> Self {
        let zero = Scalar::zero();
        if radius.is_zero() || centers.is_empty() {
            return PeriodicUnion::empty(period);
        }
        if radius + radius >= period {
            let full = Interval::new(zero, period.clone()).expect("positive period");
            return PeriodicUnion::new(period, IntervalUnion::single(full));
        }
        let mut pieces = Vec::with_capacity(centers.len() * 2);
        for c in centers {
            let cell = Scalar::from_bigint((c / &period).floor());
            let c0 = c - &(&cell * &period);
            let lo = &c0 - radius;
            let hi = &c0 + radius;
            if lo.is_negative() {
                pieces.push(Interval::new(zero.clone(), hi).expect("ordered"));
                pieces.push(Interval::new(&lo + &period, period.clone()).expect("ordered"));
            } else if hi > period {
                pieces.push(Interval::new(lo, period.clone()).expect("ordered"));
                pieces.push(Interval::new(zero.clone(), &hi - &period).expect("ordered"));
            } else {
                pieces.push(Interval::new(lo, hi).expect("ordered"));
            }
        }
        PeriodicUnion::new(period, IntervalUnion::normalize(pieces))
    }

    pub fn period(&self) -> &Scalar {
        &self.period
    }

    pub fn pattern(&self) -> &IntervalUnion {
        &self.pattern
    }

    pub fn measure_per_period(&self) -> Scalar {
        self.pattern.measure()
    }

    fn cell_of(&self, x: &Scalar) -> BigInt {
        (x / &self.period).floor()
    }

    fn cell_start(&self, k: &BigInt) -> Scalar {
        Scalar::from_bigint(k.clone()) * &self.period
    }

    /// Splits `[lo, hi]` into a left partial cell, a run of whole cells and a
    /// right partial cell. Returns `None` for the whole-cell part when both
    /// ends fall in the same cell.
    fn split(&self, lo: &Scalar, hi: &Scalar) -> CellSplit {
        let k0 = (lo / &self.period).ceil();
        let k1 = (hi / &self.period).floor();
        if k0 > k1 {
            let k = self.cell_of(lo);
            return CellSplit::Within { cell: k };
        }
        CellSplit::Spanning {
            first_full: k0.clone(),
            full_cells: &k1 - &k0,
            left_cell: k0 - 1,
            right_cell: k1,
        }
    }

    /// Lebesgue measure of the set inside `[lo, hi]`.
    pub fn measure_on(&self, lo: &Scalar, hi: &Scalar) -> Scalar {
        if lo >= hi || self.pattern.is_empty() {
            return Scalar::zero();
        }
        match self.split(lo, hi) {
            CellSplit::Within { cell } => {
                let off = self.cell_start(&cell);
                self.pattern.measure_within(&(lo - &off), &(hi - &off))
            }
            CellSplit::Spanning {
                full_cells,
                left_cell,
                right_cell,
                ..
            } => {
                let left_off = self.cell_start(&left_cell);
                let right_off = self.cell_start(&right_cell);
                let left = self.pattern.measure_within(&(lo - &left_off), &self.period);
                let right = self.pattern.measure_within(&Scalar::zero(), &(hi - &right_off));
                left + Scalar::from_bigint(full_cells) * self.measure_per_period() + right
            }
        }
    }

    pub fn measure_on_union(&self, u: &IntervalUnion) -> Scalar {
        u.intervals()
            .iter()
            .fold(Scalar::zero(), |acc, iv| acc + self.measure_on(iv.lo(), iv.hi()))
    }

    /// Explicit restriction to `[lo, hi]`; fails if more than `budget`
    /// components would be produced.
    pub fn restrict(&self, lo: &Scalar, hi: &Scalar, budget: u64) -> Result<IntervalUnion> {
        if lo > hi || self.pattern.is_empty() {
            return Ok(IntervalUnion::empty());
        }
        let k_lo = self.cell_of(lo);
        let k_hi = self.cell_of(hi);
        let cells = &k_hi - &k_lo + 1;
        let required = &cells * BigInt::from(self.pattern.len());
        if required > BigInt::from(budget) {
            return Err(Error::BudgetExceeded { required, budget });
        }
        let mut pieces = Vec::new();
        let mut k = k_lo;
        while k <= k_hi {
            let off = self.cell_start(&k);
            for iv in self.pattern.intervals() {
                if let Some(c) = iv.translate(&off).clip(lo, hi) {
                    pieces.push(c);
                }
            }
            k += 1;
        }
        Ok(IntervalUnion::normalize(pieces))
    }

    /// Measure of `self ∩ other` inside `[lo, hi]`.
    ///
    /// When one period is an exact integer multiple of the other the work is
    /// proportional to the product of the pattern sizes. Otherwise the set
    /// with the longer period is materialized on the window, subject to
    /// `budget`.
    pub fn intersection_measure_on(
        &self,
        other: &PeriodicUnion,
        lo: &Scalar,
        hi: &Scalar,
        budget: u64,
    ) -> Result<Scalar> {
        if lo >= hi || self.pattern.is_empty() || other.pattern.is_empty() {
            return Ok(Scalar::zero());
        }
        let (coarse, fine) = if self.period >= other.period {
            (self, other)
        } else {
            (other, self)
        };
        let ratio = &coarse.period / &fine.period;
        if !(ratio.is_exact() && ratio.is_integer()) {
            let explicit = coarse.restrict(lo, hi, budget)?;
            return Ok(fine.measure_on_union(&explicit));
        }
        let partial = |cell: &BigInt, from: &Scalar, to: &Scalar| -> Scalar {
            let off = coarse.cell_start(cell);
            coarse
                .pattern
                .intervals()
                .iter()
                .filter_map(|iv| iv.translate(&off).clip(from, to))
                .fold(Scalar::zero(), |acc, c| acc + fine.measure_on(c.lo(), c.hi()))
        };
        Ok(match coarse.split(lo, hi) {
            CellSplit::Within { cell } => partial(&cell, lo, hi),
            CellSplit::Spanning {
                first_full,
                full_cells,
                left_cell,
                right_cell,
            } => {
                let per_period = coarse
                    .pattern
                    .intervals()
                    .iter()
                    .fold(Scalar::zero(), |acc, iv| acc + fine.measure_on(iv.lo(), iv.hi()));
                let left_end = coarse.cell_start(&first_full);
                let right_start = coarse.cell_start(&right_cell);
                partial(&left_cell, lo, &left_end)
                    + Scalar::from_bigint(full_cells) * per_period
                    + partial(&right_cell, &right_start, hi)
            }
        })
    }
}

enum CellSplit {
    Within {
        cell: BigInt,
    },
    Spanning {
        first_full: BigInt,
        full_cells: BigInt,
        left_cell: BigInt,
        right_cell: BigInt,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> Scalar {
        Scalar::ratio(p, d)
    }

    #[test]
    fn wrapped_ball_splits_at_period_boundary() {
        let p = PeriodicUnion::from_balls(Scalar::one(), &[Scalar::zero()], &q(1, 8));
        assert_eq!(p.pattern().len(), 2);
        assert_eq!(p.measure_per_period(), q(1, 4));
        assert_eq!(p.measure_on(&Scalar::zero(), &Scalar::from_int(3)), q(3, 4));
        assert_eq!(p.measure_on(&q(-1, 16), &q(1, 16)), q(1, 8));
    }

    #[test]
    fn measure_on_matches_explicit_restriction() {
        let p = PeriodicUnion::from_balls(q(1, 3), &[q(1, 10), q(2, 9)], &q(1, 40));
        for (lo, hi) in [(q(-7, 5), q(11, 4)), (q(1, 50), q(1, 7)), (q(0, 1), q(2, 3))] {
            let explicit = p.restrict(&lo, &hi, 10_000).unwrap();
            assert_eq!(p.measure_on(&lo, &hi), explicit.measure());
        }
    }

    #[test]
    fn saturated_balls_cover_everything() {
        let p = PeriodicUnion::from_balls(q(1, 2), &[q(1, 7)], &q(1, 4));
        assert_eq!(p.measure_on(&q(-3, 1), &q(5, 1)), Scalar::from_int(8));
    }

    #[test]
    fn commensurate_intersection_matches_explicit_sweep() {
        let coarse = PeriodicUnion::from_balls(q(1, 4), &[q(0, 1), q(1, 10)], &q(1, 30));
        let fine = PeriodicUnion::from_balls(q(1, 16), &[q(1, 64)], &q(1, 200));
        let (lo, hi) = (q(-5, 7), q(13, 9));
        let a = coarse.restrict(&lo, &hi, 100_000).unwrap();
        let b = fine.restrict(&lo, &hi, 100_000).unwrap();
        let expected = a.intersect(&b).measure();
        assert_eq!(coarse.intersection_measure_on(&fine, &lo, &hi, 0).unwrap(), expected);
        assert_eq!(fine.intersection_measure_on(&coarse, &lo, &hi, 0).unwrap(), expected);
    }

    #[test]
    fn incommensurate_periods_fall_back_to_budgeted_restriction() {
        let a = PeriodicUnion::from_balls(q(1, 3), &[q(0, 1)], &q(1, 20));
        let b = PeriodicUnion::from_balls(q(1, 7), &[q(1, 14)], &q(1, 30));
        let (lo, hi) = (q(0, 1), q(5, 1));
        let expected = a
            .restrict(&lo, &hi, 10_000)
            .unwrap()
            .intersect(&b.restrict(&lo, &hi, 10_000).unwrap())
            .measure();
        assert_eq!(a.intersection_measure_on(&b, &lo, &hi, 10_000).unwrap(), expected);
        assert!(matches!(
            a.intersection_measure_on(&b, &lo, &hi, 3),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
