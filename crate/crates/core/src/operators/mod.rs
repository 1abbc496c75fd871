//! Symbolic operators on weighted sequence spaces: exact application to
//! sparse vectors, orbit traces, power norms and spectral radius.

mod apply;
mod norm;
mod orbit;
mod spectral;
mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seqspace::{LogReal, SpaceSpec, WeightSequence};

pub use apply::{apply, apply_power};
pub use norm::{power_norm, PowerNorm};
pub use orbit::{orbit, orbit_iterated, orbit_with, OrbitOptions, OrbitRecord, DEFAULT_ORBIT_BUDGET};
pub use spectral::{spectral_radius_estimate, SpectralInterval};
pub use trace::{Cmp, Piece, Trace};

/// The action of an operator, independent of the space it acts on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", bound = "R: Real")]
pub enum OperatorKind<R: Real = f64> {
    /// `(x₀, x₁, …) ↦ (x₁, x₂, …)`
    BackwardShift,
    /// `e_j ↦ w_j e_{j-1}`, `e₀ ↦ 0`
    WeightedBackwardShift { w: WeightSequence<R> },
    /// `e_j ↦ w_j e_{j+1}`
    WeightedForwardShift { w: WeightSequence<R> },
    /// `λI + T`
    ScalarPlus {
        lambda: LogReal<R>,
        inner: Box<OperatorKind<R>>,
    },
    /// Square matrix acting on coordinates `0..d`.
    FiniteMatrix { rows: Vec<Vec<R>> },
}

/// Direction of a (weighted) shift.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Backward,
    Forward,
}

impl<R: Real> OperatorKind<R> {
    /// `(direction, weights)` for shift kinds; `None` weights mean all ones.
    pub(crate) fn as_shift(&self) -> Option<(Direction, Option<&WeightSequence<R>>)> {
        match self {
            OperatorKind::BackwardShift => Some((Direction::Backward, None)),
            OperatorKind::WeightedBackwardShift { w } => Some((Direction::Backward, Some(w))),
            OperatorKind::WeightedForwardShift { w } => Some((Direction::Forward, Some(w))),
            _ => None,
        }
    }

    pub fn is_shift(&self) -> bool {
        self.as_shift().is_some()
    }

    #[allow(dead_code)]
    pub(crate) fn dim(&self) -> Option<usize> {
        match self {
            OperatorKind::FiniteMatrix { rows } => Some(rows.len()),
            OperatorKind::ScalarPlus { inner, .. } => inner.dim(),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            OperatorKind::FiniteMatrix { rows } => {
                let d = rows.len();
                if d == 0 {
                    return Err(Error::invalid("matrix must have at least one row"));
                }
                for row in rows {
                    if row.len() != d {
                        return Err(Error::invalid("matrix must be square"));
                    }
                    if row.iter().any(|x| !x.is_finite()) {
                        return Err(Error::invalid("matrix entries must be finite"));
                    }
                }
                Ok(())
            }
            OperatorKind::ScalarPlus { lambda, inner } => {
                if !lambda.is_zero() && !lambda.ln().is_finite() {
                    return Err(Error::invalid("λ must be finite"));
                }
                inner.validate()
            }
            _ => Ok(()),
        }
    }

    pub fn cast<S: Real>(&self) -> OperatorKind<S> {
        match self {
            OperatorKind::BackwardShift => OperatorKind::BackwardShift,
            OperatorKind::WeightedBackwardShift { w } => OperatorKind::WeightedBackwardShift { w: w.cast() },
            OperatorKind::WeightedForwardShift { w } => OperatorKind::WeightedForwardShift { w: w.cast() },
            OperatorKind::ScalarPlus { lambda, inner } => OperatorKind::ScalarPlus {
                lambda: lambda.cast(),
                inner: Box::new(inner.cast()),
            },
            OperatorKind::FiniteMatrix { rows } => OperatorKind::FiniteMatrix {
                rows: rows
                    .iter()
                    .map(|r| r.iter().map(|x| S::from_f64(x.to_f64().unwrap()).unwrap()).collect())
                    .collect(),
            },
        }
    }
}

/// An operator together with the space it acts on.
///
/// Construction checks boundedness: `‖T‖` must be finite (computed exactly for
/// shifts from the weight rules).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real", try_from = "OperatorRepr<R>", into = "OperatorRepr<R>")]
pub struct OperatorSpec<R: Real = f64> {
    kind: OperatorKind<R>,
    space: SpaceSpec<R>,
}

/// JSON layout `{kind, params, space}`.
#[derive(Serialize, Deserialize)]
#[serde(bound = "R: Real", deny_unknown_fields)]
struct OperatorRepr<R: Real> {
    kind: String,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    params: serde_json::Value,
    space: SpaceSpec<R>,
}

impl<R: Real> TryFrom<OperatorRepr<R>> for OperatorSpec<R> {
    type Error = Error;

    fn try_from(r: OperatorRepr<R>) -> Result<Self> {
        let mut tagged = serde_json::Map::new();
        tagged.insert("kind".into(), serde_json::Value::String(r.kind));
        if !r.params.is_null() {
            tagged.insert("params".into(), r.params);
        }
        let kind: OperatorKind<R> = serde_json::from_value(serde_json::Value::Object(tagged))
            .map_err(|e| Error::invalid(format!("operator: {e}")))?;
        OperatorSpec::new(kind, r.space)
    }
}

impl<R: Real> From<OperatorSpec<R>> for OperatorRepr<R> {
    fn from(op: OperatorSpec<R>) -> Self {
        let v = serde_json::to_value(&op.kind).expect("operator kinds serialize");
        let mut obj = match v {
            serde_json::Value::Object(m) => m,
            _ => unreachable!("adjacently tagged enum"),
        };
        let kind = match obj.remove("kind") {
            Some(serde_json::Value::String(s)) => s,
            _ => unreachable!("tag present"),
        };
        OperatorRepr {
            kind,
            params: obj.remove("params").unwrap_or(serde_json::Value::Null),
            space: op.space,
        }
    }
}

impl<R: Real> OperatorSpec<R> {
    pub fn new(kind: OperatorKind<R>, space: SpaceSpec<R>) -> Result<Self> {
        kind.validate()?;
        let op = OperatorSpec { kind, space };
        let n1 = power_norm(&op, 1)?;
        if !n1.value.ln().is_finite() && !n1.value.is_zero() {
            return Err(Error::Unbounded("operator norm is infinite".into()));
        }
        Ok(op)
    }

    pub fn kind(&self) -> &OperatorKind<R> {
        &self.kind
    }

    pub fn space(&self) -> &SpaceSpec<R> {
        &self.space
    }

    pub fn backward_shift(space: SpaceSpec<R>) -> Result<Self> {
        Self::new(OperatorKind::BackwardShift, space)
    }

    pub fn weighted_backward(w: WeightSequence<R>, space: SpaceSpec<R>) -> Result<Self> {
        Self::new(OperatorKind::WeightedBackwardShift { w }, space)
    }

    pub fn weighted_forward(w: WeightSequence<R>, space: SpaceSpec<R>) -> Result<Self> {
        Self::new(OperatorKind::WeightedForwardShift { w }, space)
    }

    pub fn scalar_plus(lambda: R, inner: OperatorKind<R>, space: SpaceSpec<R>) -> Result<Self> {
        Self::new(
            OperatorKind::ScalarPlus {
                lambda: LogReal::from_value(lambda),
                inner: Box::new(inner),
            },
            space,
        )
    }

    /// Matrix on unweighted coordinates with the given space kind.
    pub fn matrix(rows: Vec<Vec<R>>, space: SpaceSpec<R>) -> Result<Self> {
        Self::new(OperatorKind::FiniteMatrix { rows }, space)
    }

    /// `‖T‖` (exact for shifts, upper bound otherwise).
    pub fn norm(&self) -> Result<LogReal<R>> {
        Ok(power_norm(self, 1)?.value)
    }

    pub fn cast<S: Real>(&self) -> OperatorSpec<S> {
        OperatorSpec {
            kind: self.kind.cast(),
            space: self.space.cast(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_layout_is_flat() {
        let op = OperatorSpec::<f64>::weighted_backward(WeightSequence::constant(2.0), SpaceSpec::ell2()).unwrap();
        let s = serde_json::to_string(&op).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["kind"], "weighted_backward_shift");
        assert!(v["params"]["w"].is_object());
        let back: OperatorSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, op);

        let b: OperatorSpec = serde_json::from_str(
            r#"{"kind": "backward_shift", "space": {"kind": {"kind": "c0"}, "v": {"tail": {"kind": "constant", "params": {"c": 1}}}}}"#,
        )
        .unwrap();
        assert_eq!(b.kind(), &OperatorKind::BackwardShift);
    }

    #[test]
    fn unknown_fields_and_unbounded_rejected() {
        let bad = r#"{"kind": "backward_shift", "extra": 1, "space": {"kind": {"kind": "c0"}, "v": {"tail": {"kind": "constant", "params": {"c": 1}}}}}"#;
        assert!(serde_json::from_str::<OperatorSpec>(bad).is_err());
        // v_i = 2^i makes B unbounded? No: v_i/v_{i+1} = 1/2. v_i = 2^{-i} gives ratio 2, still bounded.
        let growing_w = WeightSequence::geometric(1.0, 2.0);
        assert!(matches!(
            OperatorSpec::weighted_backward(growing_w, SpaceSpec::ell2()),
            Err(Error::Unbounded(_))
        ));
        assert!(OperatorSpec::<f64>::matrix(vec![vec![1.0, 2.0]], SpaceSpec::ell2()).is_err());
    }
}
