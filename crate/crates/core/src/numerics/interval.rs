//! Closed intervals and finite unions of them on the real line.

use std::fmt;

use super::Scalar;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: Scalar,
    hi: Scalar,
}

impl Interval {
    pub fn new(lo: Scalar, hi: Scalar) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidInterval {
                lo: lo.to_string(),
                hi: hi.to_string(),
            });
        }
        Ok(Interval { lo, hi })
    }

    /// The closed ball `[center - radius, center + radius]`; `radius >= 0`.
    pub fn ball(center: &Scalar, radius: &Scalar) -> Self {
        debug_assert!(!radius.is_negative());
        Interval {
            lo: center - radius,
            hi: center + radius,
        }
    }

    pub fn lo(&self) -> &Scalar {
        &self.lo
    }

    pub fn hi(&self) -> &Scalar {
        &self.hi
    }

    pub fn length(&self) -> Scalar {
        &self.hi - &self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Scalar) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// Intersection with `[lo, hi]`, if non-empty.
    pub fn clip(&self, lo: &Scalar, hi: &Scalar) -> Option<Interval> {
        let l = if &self.lo > lo { self.lo.clone() } else { lo.clone() };
        let h = if &self.hi < hi { self.hi.clone() } else { hi.clone() };
        if l <= h {
            Some(Interval { lo: l, hi: h })
        } else {
            None
        }
    }

    pub fn translate(&self, by: &Scalar) -> Interval {
        Interval {
            lo: &self.lo + by,
            hi: &self.hi + by,
        }
    }

    /// Image under `x -> s x`; a negative factor reverses the endpoints.
    pub fn scale(&self, s: &Scalar) -> Interval {
        let (a, b) = (&self.lo * s, &self.hi * s);
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Sorted, pairwise disjoint, non-touching closed intervals of positive length.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntervalUnion {
    intervals: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        IntervalUnion::default()
    }

    /// Sorts, merges overlapping or touching intervals and drops zero-length ones.
    pub fn normalize(intervals: impl IntoIterator<Item = Interval>) -> Self {
        let mut items: Vec<Interval> = intervals
            .into_iter()
            .filter(|i| !i.is_degenerate())
            .collect();
        items.sort_by(|x, y| x.lo.cmp(&y.lo));
        let mut out: Vec<Interval> = Vec::with_capacity(items.len());
        for iv in items {
            match out.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => out.push(iv),
            }
        }
        IntervalUnion { intervals: out }
    }

    /// Normalizes raw `(lo, hi)` pairs, rejecting any with `lo > hi`.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Scalar, Scalar)>) -> Result<Self> {
        let intervals = pairs
            .into_iter()
            .map(|(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::normalize(intervals))
    }

    pub fn single(iv: Interval) -> Self {
        Self::normalize([iv])
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> Scalar {
        self.intervals
            .iter()
            .fold(Scalar::zero(), |acc, iv| acc + iv.length())
    }

    pub fn contains(&self, x: &Scalar) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.hi < *x);
        self.intervals.get(idx).is_some_and(|iv| iv.contains(x))
    }

    pub fn intersect(&self, other: &IntervalUnion) -> IntervalUnion {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = if a[i].lo > b[j].lo { &a[i].lo } else { &b[j].lo };
            let hi = if a[i].hi < b[j].hi { &a[i].hi } else { &b[j].hi };
            if lo < hi {
                out.push(Interval {
                    lo: lo.clone(),
                    hi: hi.clone(),
                });
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalUnion::normalize(out)
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        IntervalUnion::normalize(self.intervals.iter().chain(&other.intervals).cloned())
    }

    /// Closure of `self \ other`.
    pub fn difference(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut out = Vec::new();
        let b = &other.intervals;
        let mut j = 0;
        for iv in &self.intervals {
            let mut cursor = iv.lo.clone();
            while j < b.len() && b[j].hi <= cursor {
                j += 1;
            }
            let mut k = j;
            while k < b.len() && b[k].lo < iv.hi {
                if b[k].lo > cursor {
                    out.push(Interval {
                        lo: cursor.clone(),
                        hi: b[k].lo.clone(),
                    });
                }
                if b[k].hi > cursor {
                    cursor = b[k].hi.clone();
                }
                if cursor >= iv.hi {
                    break;
                }
                k += 1;
            }
            if cursor < iv.hi {
                out.push(Interval {
                    lo: cursor,
                    hi: iv.hi.clone(),
                });
            }
        }
        IntervalUnion::normalize(out)
    }

    /// Restriction to `[lo, hi]`.
    pub fn clip(&self, lo: &Scalar, hi: &Scalar) -> IntervalUnion {
        IntervalUnion::normalize(self.intervals.iter().filter_map(|iv| iv.clip(lo, hi)))
    }

    /// Measure of the part inside `[lo, hi]`, without materializing it.
    pub fn measure_within(&self, lo: &Scalar, hi: &Scalar) -> Scalar {
        let start = self.intervals.partition_point(|iv| iv.hi <= *lo);
        let mut total = Scalar::zero();
        for iv in &self.intervals[start..] {
            if iv.lo >= *hi {
                break;
            }
            if let Some(c) = iv.clip(lo, hi) {
                total = total + c.length();
            }
        }
        total
    }

    pub fn translate(&self, by: &Scalar) -> IntervalUnion {
        IntervalUnion {
            intervals: self.intervals.iter().map(|iv| iv.translate(by)).collect(),
        }
    }

    pub fn scale(&self, s: &Scalar) -> IntervalUnion {
        IntervalUnion::normalize(self.intervals.iter().map(|iv| iv.scale(s)))
    }

    pub fn bounds(&self) -> Option<(Scalar, Scalar)> {
        Some((
            self.intervals.first()?.lo.clone(),
            self.intervals.last()?.hi.clone(),
        ))
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "∅");
        }
        for (k, iv) in self.intervals.iter().enumerate() {
            if k > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}
