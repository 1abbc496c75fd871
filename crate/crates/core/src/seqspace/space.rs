use serde::{Deserialize, Serialize};

use super::logreal::{log_sum_exp, LogReal};
use super::vector::SparseVector;
use super::weights::WeightSequence;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "R: Real", deny_unknown_fields)]
pub enum SpaceKind<R: Real = f64> {
    /// `ℓᵖ(v)`: `‖x‖ = (Σ v_i |x_i|^p)^{1/p}`.
    EllP { p: R },
    /// `c₀(v)`: `‖x‖ = sup_i v_i |x_i|`.
    C0,
}

/// A weighted sequence space `ℓᵖ(v)` or `c₀(v)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real", try_from = "SpaceRepr<R>", into = "SpaceRepr<R>")]
pub struct SpaceSpec<R: Real = f64> {
    kind: SpaceKind<R>,
    v: WeightSequence<R>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "R: Real", deny_unknown_fields)]
struct SpaceRepr<R: Real> {
    kind: SpaceKind<R>,
    v: WeightSequence<R>,
}

impl<R: Real> TryFrom<SpaceRepr<R>> for SpaceSpec<R> {
    type Error = Error;
    fn try_from(r: SpaceRepr<R>) -> Result<Self> {
        SpaceSpec::new(r.kind, r.v)
    }
}

impl<R: Real> From<SpaceSpec<R>> for SpaceRepr<R> {
    fn from(s: SpaceSpec<R>) -> Self {
        SpaceRepr { kind: s.kind, v: s.v }
    }
}

/// How per-coordinate log-magnitudes combine into a norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormMode<R: Real = f64> {
    /// `(1/p)·LSE(p·terms)`
    Lp(R),
    /// `max(terms)`
    Sup,
}

impl<R: Real> NormMode<R> {
    /// Weight exponent applied to `ln v_i` inside a term: `1/p` or `1`.
    pub fn weight_exponent(&self) -> R {
        match self {
            NormMode::Lp(p) => p.recip(),
            NormMode::Sup => R::one(),
        }
    }

    /// Combines per-coordinate log-contributions `ln|x_i| + q·ln v_i`.
    pub fn combine(&self, terms: impl Iterator<Item = R> + Clone) -> R {
        match *self {
            NormMode::Lp(p) if p == R::one() => log_sum_exp(terms),
            NormMode::Lp(p) => log_sum_exp(terms.map(move |t| t * p)) / p,
            NormMode::Sup => terms.fold(R::neg_infinity(), R::max),
        }
    }
}

impl<R: Real> SpaceSpec<R> {
    pub fn new(kind: SpaceKind<R>, v: WeightSequence<R>) -> Result<Self> {
        if let SpaceKind::EllP { p } = kind {
            if !(p >= R::one()) || !p.is_finite() {
                return Err(Error::invalid(format!("ℓᵖ requires finite p >= 1, got {p}")));
            }
        }
        Ok(SpaceSpec { kind, v })
    }

    pub fn ell_p(p: R, v: WeightSequence<R>) -> Result<Self> {
        Self::new(SpaceKind::EllP { p }, v)
    }

    pub fn c0(v: WeightSequence<R>) -> Self {
        SpaceSpec {
            kind: SpaceKind::C0,
            v,
        }
    }

    /// Unweighted ℓ².
    pub fn ell2() -> Self {
        Self::ell_p(R::one() + R::one(), WeightSequence::constant(R::one())).expect("p = 2")
    }

    pub fn kind(&self) -> SpaceKind<R> {
        self.kind
    }

    pub fn v(&self) -> &WeightSequence<R> {
        &self.v
    }

    pub fn mode(&self) -> NormMode<R> {
        match self.kind {
            SpaceKind::EllP { p } => NormMode::Lp(p),
            SpaceKind::C0 => NormMode::Sup,
        }
    }

    /// Log-contribution of coefficient `c` at coordinate `i`: `ln|c| + q·ln v_i`.
    pub fn term_ln(&self, i: u64, c: LogReal<R>) -> R {
        c.ln() + self.mode().weight_exponent() * self.v.ln_at(i)
    }

    pub fn cast<S: Real>(&self) -> SpaceSpec<S> {
        let kind = match self.kind {
            SpaceKind::EllP { p } => SpaceKind::EllP {
                p: S::from_f64(p.to_f64().unwrap()).unwrap(),
            },
            SpaceKind::C0 => SpaceKind::C0,
        };
        SpaceSpec {
            kind,
            v: self.v.cast(),
        }
    }
}

/// Norm of a finitely supported vector in `space`.
pub fn norm<R: Real>(x: &SparseVector<R>, space: &SpaceSpec<R>) -> LogReal<R> {
    if x.is_zero() {
        return LogReal::zero();
    }
    let terms = x.iter().map(|(i, c)| space.term_ln(i, c));
    let terms: Vec<R> = terms.collect();
    LogReal::from_ln(space.mode().combine(terms.iter().copied()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqspace::weights::{Run, Tail};

    #[test]
    fn norm_examples() {
        let l2 = SpaceSpec::<f64>::ell2();
        assert_eq!(norm(&SparseVector::basis(0), &l2).value(), 1.0);
        let v = WeightSequence::from_runs(
            vec![
                Run { value: LogReal::one(), len: 1 },
                Run { value: LogReal::from_value(2.0), len: 1 },
            ],
            Tail::Constant { c: LogReal::one() },
        )
        .unwrap();
        let x = SparseVector::from_values([(0, 1.0), (1, 1.0)]);
        let l1 = SpaceSpec::<f64>::ell_p(1.0, v.clone()).unwrap();
        assert!((norm(&x, &l1).value() - 3.0).abs() < 1e-15);
        assert!((norm(&x, &SpaceSpec::<f64>::c0(v)).value() - 2.0).abs() < 1e-15);
        assert!(norm(&SparseVector::zero(), &l2).is_zero());
    }

    #[test]
    fn rejects_p_below_one() {
        assert!(SpaceSpec::ell_p(0.5, WeightSequence::constant(1.0)).is_err());
        let bad = r#"{"kind": {"kind": "ell_p", "p": 0.5}, "v": {"tail": {"kind": "constant", "params": {"c": 1}}}}"#;
        assert!(serde_json::from_str::<SpaceSpec>(bad).is_err());
    }
}
