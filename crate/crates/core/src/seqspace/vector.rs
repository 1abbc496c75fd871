use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::logreal::LogReal;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Finitely supported sequence with log-domain coefficients.
///
/// Zero coefficients are never stored, so the support is exactly the key set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real", try_from = "BTreeMap<Index, LogReal<R>>", into = "BTreeMap<u64, LogReal<R>>")]
pub struct SparseVector<R: Real = f64> {
    entries: BTreeMap<u64, LogReal<R>>,
}

impl<R: Real> Default for SparseVector<R> {
    fn default() -> Self {
        Self::zero()
    }
}

/// Map key that accepts `"12"` as well as `12`: JSON object keys are
/// strings, but buffered (tagged-enum) input hands them over unconverted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[doc(hidden)]
pub struct Index(u64);

impl<'de> Deserialize<'de> for Index {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Index;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a nonnegative integer index")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<Index, E> {
                Ok(Index(v))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Index, E> {
                v.parse().map(Index).map_err(|_| E::custom(format!("bad index `{v}`")))
            }
        }
        d.deserialize_any(V)
    }
}

impl<R: Real> TryFrom<BTreeMap<Index, LogReal<R>>> for SparseVector<R> {
    type Error = Error;

    fn try_from(entries: BTreeMap<Index, LogReal<R>>) -> Result<Self> {
        if let Some((i, _)) = entries.iter().find(|(_, c)| c.is_zero()) {
            return Err(Error::invalid(format!("explicit zero coefficient at index {}", i.0)));
        }
        Ok(SparseVector {
            entries: entries.into_iter().map(|(i, c)| (i.0, c)).collect(),
        })
    }
}

impl<R: Real> From<SparseVector<R>> for BTreeMap<u64, LogReal<R>> {
    fn from(v: SparseVector<R>) -> Self {
        v.entries
    }
}

impl<R: Real> SparseVector<R> {
    pub fn zero() -> Self {
        SparseVector {
            entries: BTreeMap::new(),
        }
    }

    /// The canonical basis vector `e_j`.
    pub fn basis(j: u64) -> Self {
        Self::from_entries([(j, LogReal::one())])
    }

    /// Builds a vector from `(index, coefficient)` pairs; repeated indices are summed.
    pub fn from_entries(entries: impl IntoIterator<Item = (u64, LogReal<R>)>) -> Self {
        let mut v = Self::zero();
        for (i, c) in entries {
            v.add_at(i, c);
        }
        v
    }

    pub fn from_values(entries: impl IntoIterator<Item = (u64, R)>) -> Self {
        Self::from_entries(entries.into_iter().map(|(i, x)| (i, LogReal::from_value(x))))
    }

    /// Dense coefficients `x_0, x_1, …`.
    pub fn from_dense(values: &[R]) -> Self {
        Self::from_values(values.iter().enumerate().map(|(i, &x)| (i as u64, x)))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: u64) -> LogReal<R> {
        self.entries.get(&i).copied().unwrap_or_else(LogReal::zero)
    }

    pub fn max_index(&self) -> Option<u64> {
        self.entries.last_key_value().map(|(&i, _)| i)
    }

    pub fn min_index(&self) -> Option<u64> {
        self.entries.first_key_value().map(|(&i, _)| i)
    }

    /// Entries in increasing index order.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (u64, LogReal<R>)> + '_ {
        self.entries.iter().map(|(&i, &c)| (i, c))
    }

    pub fn add_at(&mut self, i: u64, c: LogReal<R>) {
        if c.is_zero() {
            return;
        }
        let sum = self.get(i) + c;
        if sum.is_zero() {
            self.entries.remove(&i);
        } else {
            self.entries.insert(i, sum);
        }
    }

    pub fn scale(&self, alpha: LogReal<R>) -> Self {
        if alpha.is_zero() {
            return Self::zero();
        }
        SparseVector {
            entries: self.entries.iter().map(|(&i, &c)| (i, c * alpha)).collect(),
        }
    }

    /// Applies `f` to every index; `f` must be injective on the support.
    pub fn map_indices(&self, mut f: impl FnMut(u64) -> u64) -> Self {
        SparseVector {
            entries: self.entries.iter().map(|(&i, &c)| (f(i), c)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-LogReal::one())
    }

    pub fn add(&self, other: &Self) -> Self {
        axpy(LogReal::one(), other, self)
    }

    pub fn sub(&self, other: &Self) -> Self {
        axpy(-LogReal::one(), other, self)
    }

    pub fn cast<S: Real>(&self) -> SparseVector<S> {
        SparseVector {
            entries: self.entries.iter().map(|(&i, c)| (i, c.cast())).collect(),
        }
    }

    /// Linear values, when every coefficient is representable.
    pub fn to_values(&self) -> Option<Vec<(u64, R)>> {
        self.iter().map(|(i, c)| c.finite_value().map(|x| (i, x))).collect()
    }

    /// Largest coefficient magnitude (ln scale), `-inf` for the zero vector.
    pub fn max_ln_abs(&self) -> R {
        self.entries
            .values()
            .fold(R::neg_infinity(), |m, c| m.max(c.ln()))
    }

    /// Sum with a non-default cancellation threshold.
    pub fn axpy_with_threshold(alpha: LogReal<R>, x: &Self, y: &Self, threshold: R) -> Self {
        let mut out = y.clone();
        if alpha.is_zero() {
            return out;
        }
        for (i, c) in x.iter() {
            let sum = out.get(i).add_with_threshold(c * alpha, threshold);
            if sum.is_zero() {
                out.entries.remove(&i);
            } else {
                out.entries.insert(i, sum);
            }
        }
        out
    }
}

/// `αx + y`. Coefficients whose sum cancels below the resolution threshold
/// are dropped.
pub fn axpy<R: Real>(alpha: LogReal<R>, x: &SparseVector<R>, y: &SparseVector<R>) -> SparseVector<R> {
    SparseVector::axpy_with_threshold(alpha, x, y, lit(super::logreal::CANCELLATION_THRESHOLD))
}

#[cfg(test)]
mod tests {
    use super::*;

    type V = SparseVector<f64>;

    #[test]
    fn axpy_examples() {
        let one = LogReal::one();
        assert!(axpy(one, &V::basis(0), &V::basis(0).neg()).is_zero());
        let v = axpy(LogReal::from_value(2.0), &V::basis(1), &V::basis(0));
        assert_eq!(v.to_values().unwrap(), vec![(0, 1.0), (1, 2.0)]);
        assert_eq!(axpy(LogReal::zero(), &V::basis(7), &V::basis(3)), V::basis(3));
    }

    #[test]
    fn support_bookkeeping() {
        let v = V::from_values([(4, 1.0), (9, -2.0), (2, 0.0)]);
        assert_eq!(v.support_len(), 2);
        assert_eq!(v.max_index(), Some(9));
        assert_eq!(v.min_index(), Some(4));
        assert!(v.get(2).is_zero());
    }

    #[test]
    fn json_rejects_explicit_zero() {
        let ok: V = serde_json::from_str(r#"{"3": "ln:0e0", "5": 2}"#).unwrap();
        assert_eq!(ok.support_len(), 2);
        assert!(serde_json::from_str::<V>(r#"{"3": "0"}"#).is_err());
        let back: V = serde_json::from_str(&serde_json::to_string(&ok).unwrap()).unwrap();
        assert_eq!(back, ok);
    }
}
