//! Scalar abstraction shared by the log-domain core.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point type the log-domain arithmetic is carried out in: `f32` or `f64`.
///
/// Magnitudes never leave the log domain, so the choice only affects the
/// resolution of log-magnitudes, not the representable range.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + serde::Serialize
    + serde::de::DeserializeOwned
    + 'static
{
    /// Relative tolerance used when comparing log-magnitudes produced by
    /// different (but mathematically equal) evaluation orders.
    fn log_tolerance() -> Self;
}

impl Real for f32 {
    fn log_tolerance() -> Self {
        1e-5
    }
}

impl Real for f64 {
    fn log_tolerance() -> Self {
        1e-12
    }
}

/// Converts an `f64` literal into `R`.
#[inline]
pub fn lit<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("literal representable in scalar type")
}

/// Converts an index or count into `R`.
#[inline]
pub fn idx<R: Real>(n: usize) -> R {
    R::from_usize(n).expect("index representable in scalar type")
}

/// `a <= b` up to the scalar's log tolerance, relative to the larger magnitude.
#[inline]
pub fn approx_le<R: Real>(a: R, b: R) -> bool {
    if a <= b {
        return true;
    }
    if !a.is_finite() || !b.is_finite() {
        return false;
    }
    let scale = R::one().max(a.abs()).max(b.abs());
    a - b <= R::log_tolerance() * scale
}
