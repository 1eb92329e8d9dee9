use crate::error::Result;
use crate::numerics::{IntervalUnion, PeriodicUnion, Scalar};

#[derive(Clone, Debug)]
enum Repr {
    Empty,
    Explicit(IntervalUnion),
    Periodic(PeriodicUnion),
}

/// A finite union of intervals inside a fixed domain `[lo, hi]`, stored
/// either explicitly or as a periodic pattern restricted to the domain.
#[derive(Clone, Debug)]
pub struct LevelSet {
    lo: Scalar,
    hi: Scalar,
    repr: Repr,
}

impl LevelSet {
    pub fn empty(lo: Scalar, hi: Scalar) -> Self {
        LevelSet { lo, hi, repr: Repr::Empty }
    }

    /// `u` must already lie inside `[lo, hi]`.
    pub fn explicit(u: IntervalUnion, lo: Scalar, hi: Scalar) -> Self {
        let repr = if u.is_empty() { Repr::Empty } else { Repr::Explicit(u) };
        LevelSet { lo, hi, repr }
    }

    pub fn periodic(p: PeriodicUnion, lo: Scalar, hi: Scalar) -> Self {
        let repr = if p.pattern().is_empty() { Repr::Empty } else { Repr::Periodic(p) };
        LevelSet { lo, hi, repr }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.repr, Repr::Empty)
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.repr, Repr::Periodic(_))
    }

    pub fn domain(&self) -> (&Scalar, &Scalar) {
        (&self.lo, &self.hi)
    }

    pub fn measure(&self) -> Scalar {
        match &self.repr {
            Repr::Empty => Scalar::zero(),
            Repr::Explicit(u) => u.measure(),
            Repr::Periodic(p) => p.measure_on(&self.lo, &self.hi),
        }
    }

    /// Measure of the part inside `[lo, hi]`.
    pub fn measure_within(&self, lo: &Scalar, hi: &Scalar) -> Scalar {
        let l = if lo > &self.lo { lo } else { &self.lo };
        let h = if hi < &self.hi { hi } else { &self.hi };
        match &self.repr {
            Repr::Empty => Scalar::zero(),
            _ if l >= h => Scalar::zero(),
            Repr::Explicit(u) => u.measure_within(l, h),
            Repr::Periodic(p) => p.measure_on(l, h),
        }
    }

    /// `lambda(self ∩ other)`; both sets must share the same domain.
    /// Incommensurate periodic pairs are materialized within `budget`
    /// components.
    pub fn intersection_measure(&self, other: &LevelSet, budget: u64) -> Result<Scalar> {
        debug_assert!(self.lo == other.lo && self.hi == other.hi);
        Ok(match (&self.repr, &other.repr) {
            (Repr::Empty, _) | (_, Repr::Empty) => Scalar::zero(),
            (Repr::Explicit(u), Repr::Explicit(v)) => u.intersect(v).measure(),
            (Repr::Explicit(u), Repr::Periodic(p)) | (Repr::Periodic(p), Repr::Explicit(u)) => {
                p.measure_on_union(u)
            }
            (Repr::Periodic(p), Repr::Periodic(q)) => {
                p.intersection_measure_on(q, &self.lo, &self.hi, budget)?
            }
        })
    }

    /// The set restricted to `[lo, hi]` as an explicit union.
    pub fn restrict(&self, lo: &Scalar, hi: &Scalar, budget: u64) -> Result<IntervalUnion> {
        let l = if lo > &self.lo { lo } else { &self.lo };
        let h = if hi < &self.hi { hi } else { &self.hi };
        if l > h {
            return Ok(IntervalUnion::empty());
        }
        match &self.repr {
            Repr::Empty => Ok(IntervalUnion::empty()),
            Repr::Explicit(u) => Ok(u.clip(l, h)),
            Repr::Periodic(p) => p.restrict(l, h, budget),
        }
    }

    pub fn to_union(&self, budget: u64) -> Result<IntervalUnion> {
        self.restrict(&self.lo.clone(), &self.hi.clone(), budget)
    }
}
