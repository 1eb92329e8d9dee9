//! Arbitrary-precision scalars and exact interval-union geometry.

mod bigfloat;
mod interval;
mod periodic;
mod scalar;

pub use bigfloat::{BigFloat, MIN_PRECISION_BITS};
pub use interval::{Interval, IntervalUnion};
pub use periodic::PeriodicUnion;
pub use scalar::{Precision, Scalar};

/// `alpha^n`; see [`Scalar::pow`].
pub fn pow(alpha: &Scalar, n: u64) -> crate::Result<Scalar> {
    alpha.pow(n)
}

pub fn normalize(intervals: impl IntoIterator<Item = Interval>) -> IntervalUnion {
    IntervalUnion::normalize(intervals)
}

pub fn measure(u: &IntervalUnion) -> Scalar {
    u.measure()
}

pub fn intersect(u: &IntervalUnion, v: &IntervalUnion) -> IntervalUnion {
    u.intersect(v)
}
