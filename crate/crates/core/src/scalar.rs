//! Scalar abstractions.
//!
//! The rate algebra and ensemble arithmetic work over any [`Scalar`], which
//! includes `f32`, `f64` and the exact [`Rational`](crate::Rational) type.
//! Message-passing kernels need transcendental functions and are written
//! against [`Real`].

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Numeric type usable in rate and degree-distribution arithmetic.
pub trait Scalar:
    Num + Signed + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Slack allowed when checking that a polynomial is normalized.
    /// Zero for exact types.
    fn tolerance() -> Self;

    /// Smallest integer not below `self`.
    ///
    /// Floating types snap to the nearest integer first when within a few
    /// ulps of it, so that e.g. `0.225 * 1e6` ceils to `225000` rather than
    /// `225001`.
    fn ceil_to_i64(self) -> Option<i64>;

    fn from_count(count: usize) -> Self {
        Self::from_usize(count).expect("count representable in scalar type")
    }

    fn lossy_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

fn snapped_ceil(x: f64, rel: f64) -> Option<i64> {
    if !x.is_finite() {
        return None;
    }
    let nearest = x.round();
    let c = if (x - nearest).abs() <= rel * x.abs().max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    c.to_i64()
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }

    fn ceil_to_i64(self) -> Option<i64> {
        snapped_ceil(self, 1e-12)
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }

    fn ceil_to_i64(self) -> Option<i64> {
        snapped_ceil(self as f64, 1e-6)
    }
}

impl Scalar for Ratio<i64> {
    fn tolerance() -> Self {
        Ratio::from_integer(0)
    }

    fn ceil_to_i64(self) -> Option<i64> {
        Some(self.ceil().to_integer())
    }
}

/// Floating-point scalar for LLR arithmetic.
pub trait Real: Scalar + Float {}

impl<T: Scalar + Float> Real for T {}
