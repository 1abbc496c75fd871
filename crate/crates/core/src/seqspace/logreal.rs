//! Signed reals stored as (sign, natural-log magnitude).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::{lit, Real};

/// Default cancellation threshold in natural-log units.
///
/// A difference whose magnitude falls this far below its larger operand is
/// taken to be an exact zero.
pub const CANCELLATION_THRESHOLD: f64 = 40.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    fn flip(self) -> Self {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }

    fn times(self, other: Sign) -> Sign {
        match (self, other) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Positive,
            _ => Sign::Negative,
        }
    }
}

/// A real number `sign * exp(ln)`.
///
/// Zero is the unique value with `sign == Zero`, and always carries
/// `ln == -inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogReal<R = f64> {
    sign: Sign,
    ln: R,
}

impl<R: Real> LogReal<R> {
    pub fn zero() -> Self {
        LogReal {
            sign: Sign::Zero,
            ln: R::neg_infinity(),
        }
    }

    pub fn one() -> Self {
        LogReal {
            sign: Sign::Positive,
            ln: R::zero(),
        }
    }

    /// Positive number with the given log-magnitude. `-inf` yields zero.
    pub fn from_ln(ln: R) -> Self {
        Self::from_parts(Sign::Positive, ln)
    }

    pub fn from_parts(sign: Sign, ln: R) -> Self {
        assert!(!ln.is_nan(), "NaN log-magnitude");
        if sign == Sign::Zero || ln == R::neg_infinity() {
            Self::zero()
        } else {
            LogReal { sign, ln }
        }
    }

    pub fn from_value(x: R) -> Self {
        assert!(!x.is_nan(), "NaN value");
        if x == R::zero() {
            Self::zero()
        } else if x > R::zero() {
            LogReal {
                sign: Sign::Positive,
                ln: x.ln(),
            }
        } else {
            LogReal {
                sign: Sign::Negative,
                ln: (-x).ln(),
            }
        }
    }

    /// `2^k` for integer `k`, possibly far outside the scalar's range.
    pub fn pow2(k: i64) -> Self {
        Self::from_ln(R::LN_2() * R::from_i64(k).unwrap())
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// Natural log of the magnitude (`-inf` for zero).
    pub fn ln(&self) -> R {
        self.ln
    }

    pub fn is_zero(&self) -> bool {
        self.sign == Sign::Zero
    }

    pub fn is_positive(&self) -> bool {
        self.sign == Sign::Positive
    }

    /// Linear value; saturates to `±inf` or `0` outside the scalar's range.
    pub fn value(&self) -> R {
        match self.sign {
            Sign::Zero => R::zero(),
            Sign::Positive => self.ln.exp(),
            Sign::Negative => -self.ln.exp(),
        }
    }

    /// Linear value when it is representable without overflow or underflow.
    pub fn finite_value(&self) -> Option<R> {
        let v = self.value();
        if v.is_finite() && (v != R::zero() || self.is_zero()) {
            Some(v)
        } else {
            None
        }
    }

    pub fn abs(&self) -> Self {
        Self::from_parts(
            if self.is_zero() {
                Sign::Zero
            } else {
                Sign::Positive
            },
            self.ln,
        )
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        LogReal {
            sign: self.sign,
            ln: -self.ln,
        }
    }

    /// `|self|^p`, sign dropped. `0^p = 0` for `p > 0`.
    pub fn powf_abs(&self, p: R) -> Self {
        if self.is_zero() {
            return if p == R::zero() {
                Self::one()
            } else {
                Self::zero()
            };
        }
        Self::from_ln(self.ln * p)
    }

    pub fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        if self.is_zero() {
            return Self::zero();
        }
        let sign = if n % 2 == 0 { Sign::Positive } else { self.sign };
        Self::from_parts(sign, self.ln * R::from_i32(n).unwrap())
    }

    /// Sum with an explicit cancellation threshold (natural-log units).
    pub fn add_with_threshold(self, rhs: Self, threshold: R) -> Self {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.ln >= rhs.ln {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let diff = small.ln - big.ln;
        if big.sign == small.sign {
            return LogReal {
                sign: big.sign,
                ln: big.ln + diff.exp().ln_1p(),
            };
        }
        if diff == R::zero() {
            return Self::zero();
        }
        let ln = big.ln + (-diff.exp_m1()).ln();
        if ln < big.ln - threshold {
            Self::zero()
        } else {
            LogReal { sign: big.sign, ln }
        }
    }

    /// `max(|a|, |b|)` style maximum of two values by ordering.
    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Comparison of log-magnitudes of two positive values with the scalar's
    /// log tolerance: `self >= other` up to rounding.
    pub fn approx_ge(&self, other: &Self) -> bool {
        match (self.sign, other.sign) {
            (_, Sign::Zero) => self.sign != Sign::Negative,
            (Sign::Positive, Sign::Positive) => crate::scalar::approx_le(other.ln, self.ln),
            (Sign::Negative, Sign::Negative) => crate::scalar::approx_le(self.ln, other.ln),
            (Sign::Positive, _) => true,
            _ => false,
        }
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        self.approx_ge(other) && other.approx_ge(self)
    }

    pub fn cast<S: Real>(&self) -> LogReal<S> {
        LogReal::from_parts(self.sign, S::from_f64(self.ln.to_f64().unwrap()).unwrap())
    }
}

impl<R: Real> Default for LogReal<R> {
    fn default() -> Self {
        Self::zero()
    }
}

/// `ln Σ exp(a_i)`, stable for any dynamic range. Empty input gives `-inf`.
pub fn log_sum_exp<R: Real>(terms: impl IntoIterator<Item = R> + Clone) -> R {
    let max = terms
        .clone()
        .into_iter()
        .fold(R::neg_infinity(), |m, t| m.max(t));
    if max == R::neg_infinity() || max == R::infinity() {
        return max;
    }
    let sum = terms
        .into_iter()
        .fold(R::zero(), |acc, t| acc + (t - max).exp());
    max + sum.ln()
}

impl<R: Real> Add for LogReal<R> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.add_with_threshold(rhs, lit(CANCELLATION_THRESHOLD))
    }
}

impl<R: Real> Sub for LogReal<R> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<R: Real> Neg for LogReal<R> {
    type Output = Self;
    fn neg(self) -> Self {
        LogReal {
            sign: self.sign.flip(),
            ln: self.ln,
        }
    }
}

impl<R: Real> Mul for LogReal<R> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let sign = self.sign.times(rhs.sign);
        if sign == Sign::Zero {
            return Self::zero();
        }
        LogReal {
            sign,
            ln: self.ln + rhs.ln,
        }
    }
}

impl<R: Real> Div for LogReal<R> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<R: Real> PartialOrd for LogReal<R> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                Sign::Zero => Ordering::Equal,
                Sign::Positive => self.ln.partial_cmp(&other.ln)?,
                Sign::Negative => other.ln.partial_cmp(&self.ln)?,
            },
            ord => ord,
        })
    }
}

impl<R: Real> fmt::Display for LogReal<R> {
    /// `0`, `ln:<x>` or `-ln:<x>` with 17 significant digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Zero => write!(f, "0"),
            Sign::Positive => write!(f, "ln:{:.16e}", self.ln.to_f64().unwrap()),
            Sign::Negative => write!(f, "-ln:{:.16e}", self.ln.to_f64().unwrap()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("malformed log-real literal `{0}`")]
pub struct ParseLogRealError(String);

impl<R: Real> FromStr for LogReal<R> {
    type Err = ParseLogRealError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ParseLogRealError(s.to_string());
        if s == "0" {
            return Ok(Self::zero());
        }
        let (sign, rest) = if let Some(rest) = s.strip_prefix("-ln:") {
            (Sign::Negative, rest)
        } else if let Some(rest) = s.strip_prefix("ln:") {
            (Sign::Positive, rest)
        } else {
            // plain decimal, linear scale
            let x: f64 = s.parse().map_err(|_| bad())?;
            if x.is_nan() {
                return Err(bad());
            }
            return Ok(Self::from_value(R::from_f64(x).ok_or_else(bad)?));
        };
        let ln: f64 = rest.parse().map_err(|_| bad())?;
        if ln.is_nan() || ln == f64::INFINITY {
            return Err(bad());
        }
        Ok(Self::from_parts(sign, R::from_f64(ln).ok_or_else(bad)?))
    }
}

impl<R: Real> Serialize for LogReal<R> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de, R: Real> Deserialize<'de> for LogReal<R> {
    /// Accepts the string forms produced by `Display`, or a plain JSON number
    /// taken on the linear scale.
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(x) => Ok(Self::from_value(
                R::from_f64(x).ok_or_else(|| de::Error::custom("number out of range"))?,
            )),
            Repr::Text(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type L = LogReal<f64>;

    #[test]
    fn exact_cancellation_is_zero() {
        let a = L::from_value(3.0);
        assert!((a - a).is_zero());
        let near = L::from_ln(1.0) - L::from_ln(1.0 - 1e-20);
        assert!(near.is_zero());
    }

    #[test]
    fn small_differences_survive_the_threshold() {
        let d = L::from_value(1.0) - L::from_value(1.0 - 1e-9);
        assert!(d.is_positive());
        assert!((d.value() - 1e-9).abs() < 1e-15);
    }

    #[test]
    fn extreme_range_products() {
        let big = L::from_ln(1e5);
        let tiny = L::from_ln(-1e5);
        assert_eq!((big * tiny).ln(), 0.0);
        assert_eq!(big.finite_value(), None);
        assert!((big + tiny).approx_eq(&big));
    }

    #[test]
    fn ordering_across_signs() {
        let xs = [-5.0, -0.5, 0.0, 1e-3, 2.0, 1e10];
        for w in xs.windows(2) {
            assert!(L::from_value(w[0]) < L::from_value(w[1]));
        }
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        for x in [1.0, -2.5, 1e-300, 7.0 / 3.0] {
            let a = L::from_value(x);
            let s = a.to_string();
            let b: L = s.parse().unwrap();
            assert_eq!(a.ln().to_bits(), b.ln().to_bits());
            assert_eq!(a.sign(), b.sign());
        }
        let z: L = "0".parse().unwrap();
        assert!(z.is_zero());
        let plain: L = "2".parse().unwrap();
        assert_eq!(plain.value(), 2.0);
    }

    #[test]
    fn json_accepts_numbers() {
        let v: Vec<L> = serde_json::from_str(r#"[2, "ln:0e0", "-ln:1e0", 0]"#).unwrap();
        assert_eq!(v[0].value(), 2.0);
        assert_eq!(v[1].value(), 1.0);
        assert!((v[2].value() + std::f64::consts::E).abs() < 1e-15);
        assert!(v[3].is_zero());
    }

    #[test]
    fn single_precision_backend() {
        let a = LogReal::<f32>::from_value(2.0);
        let b = a * a * a;
        assert!((b.value() - 8.0).abs() < 1e-5);
        assert!((a - a).is_zero());
    }

    proptest! {
        #[test]
        fn sum_matches_linear(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let s = (L::from_value(a) + L::from_value(b)).value();
            let want = a + b;
            prop_assert!((s - want).abs() <= 1e-9 * (a.abs() + b.abs()).max(1e-300));
        }

        #[test]
        fn product_matches_linear(a in -1e3f64..1e3, b in -1e3f64..1e3) {
            let p = (L::from_value(a) * L::from_value(b)).value();
            prop_assert!((p - a * b).abs() <= 1e-12 * (a * b).abs().max(1e-300));
        }
    }
}
