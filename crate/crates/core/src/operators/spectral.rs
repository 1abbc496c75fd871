use nalgebra::DMatrix;
use serde::Serialize;

use super::norm::{flatten_scalar_plus, kind_power_norm};
use super::{Direction, OperatorKind, OperatorSpec};
use crate::error::Result;
use crate::scalar::Real;
use crate::seqspace::{LogReal, SpaceSpec, Tail, WeightSequence};

/// Enclosure of the spectral radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "R: Real")]
pub struct SpectralInterval<R: Real = f64> {
    pub lower: LogReal<R>,
    pub upper: LogReal<R>,
    /// Both ends equal a closed-form value.
    pub closed_form: bool,
    /// `min_{1≤n≤n_max} ‖Tⁿ‖^{1/n}`.
    pub norm_bound: LogReal<R>,
}

/// Spectral radius: closed form where the kind admits one, always paired with
/// the Gelfand bound `min_n ‖Tⁿ‖^{1/n}` over `n ≤ n_max`.
pub fn spectral_radius_estimate<R: Real>(t: &OperatorSpec<R>, n_max: u64) -> Result<SpectralInterval<R>> {
    let mut bound = R::infinity();
    for n in 1..=n_max.max(1) {
        let pn = kind_power_norm(t.kind(), t.space(), n)?;
        bound = bound.min(pn.value.ln() / R::from_u64(n).unwrap());
    }
    let norm_bound = LogReal::from_ln(bound);
    Ok(match closed_form_ln(t.kind(), t.space()) {
        Some(r) => SpectralInterval {
            lower: LogReal::from_ln(r),
            upper: LogReal::from_ln(r),
            closed_form: true,
            norm_bound,
        },
        None => SpectralInterval {
            lower: LogReal::zero(),
            upper: norm_bound,
            closed_form: false,
            norm_bound,
        },
    })
}

/// `ln r(T)` (`-∞` for quasinilpotent operators).
fn closed_form_ln<R: Real>(kind: &OperatorKind<R>, space: &SpaceSpec<R>) -> Option<R> {
    let (lambda, base) = flatten_scalar_plus(kind);
    match base {
        OperatorKind::FiniteMatrix { rows } => {
            let d = rows.len();
            let lam = lambda.value().to_f64()?;
            let a = DMatrix::from_fn(d, d, |i, j| rows[i][j].to_f64().unwrap() + if i == j { lam } else { 0.0 });
            let r = a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
            Some(R::from_f64(r.ln()).unwrap())
        }
        _ => {
            let (dir, w) = base.as_shift()?;
            let q = space.mode().weight_exponent();
            let r = w.map_or(Some(R::zero()), weight_rate)? + space_rate(dir, space.v(), q);
            if lambda.is_zero() {
                Some(r)
            } else {
                // the spectrum of a weighted shift is invariant under rotation,
                // so r(λI + T) = |λ| + r(T)
                Some((lambda.abs() + LogReal::from_ln(r)).ln())
            }
        }
    }
}

/// `lim_n (1/n) sup_k ln Π (window of n weights)`.
fn weight_rate<R: Real>(w: &WeightSequence<R>) -> Option<R> {
    match w.tail() {
        Tail::Constant { c } => Some(c.ln()),
        Tail::Geometric { scale, ratio } => {
            let lr = ratio.ln();
            if lr < R::zero() {
                Some(R::neg_infinity())
            } else if lr == R::zero() {
                Some(scale.ln())
            } else {
                None
            }
        }
        Tail::PowerLaw { scale, exponent, .. } => {
            if *exponent < R::zero() {
                Some(R::neg_infinity())
            } else {
                (*exponent == R::zero()).then(|| scale.ln())
            }
        }
        Tail::Blocks { blocks } => {
            if blocks.iter().all(|b| b.growth == 0) {
                let len: u64 = blocks.iter().map(|b| b.base).sum();
                let tot = blocks
                    .iter()
                    .fold(R::zero(), |s, b| s + b.value.ln() * R::from_u64(b.base).unwrap());
                Some(tot / R::from_u64(len).unwrap())
            } else {
                blocks
                    .iter()
                    .filter(|b| b.growth > 0)
                    .map(|b| b.value.ln())
                    .reduce(R::max)
            }
        }
    }
}

fn space_rate<R: Real>(dir: Direction, v: &WeightSequence<R>, q: R) -> R {
    match v.tail() {
        Tail::Geometric { ratio, .. } => match dir {
            Direction::Backward => -q * ratio.ln(),
            Direction::Forward => q * ratio.ln(),
        },
        _ => R::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: LogReal<f64>, b: f64) -> bool {
        (a.value() - b).abs() < 1e-12
    }

    #[test]
    fn examples() {
        let t = OperatorSpec::weighted_backward(WeightSequence::constant(2.0), SpaceSpec::ell2()).unwrap();
        let s = spectral_radius_estimate(&t, 16).unwrap();
        assert!(s.closed_form && close(s.lower, 2.0) && close(s.upper, 2.0));
        assert!(close(s.norm_bound, 2.0));

        let m = OperatorSpec::matrix(vec![vec![0.5, 0.0], vec![0.0, 1.0 / 3.0]], SpaceSpec::ell2()).unwrap();
        let s = spectral_radius_estimate(&m, 8).unwrap();
        assert!(close(s.upper, 0.5));

        let v = WeightSequence::power_law(1.0, -1.0, 1).unwrap();
        let b = OperatorSpec::backward_shift(SpaceSpec::ell_p(2.0, v).unwrap()).unwrap();
        let s = spectral_radius_estimate(&b, 64).unwrap();
        assert!(close(s.upper, 1.0));
        // ‖Bⁿ‖ = (n+1)^{1/2}
        assert!(s.norm_bound.value() >= 1.0 && s.norm_bound.value() < 1.1);
    }

    #[test]
    fn scalar_plus_adds_modulus() {
        let t = OperatorSpec::scalar_plus(-0.5, OperatorKind::WeightedBackwardShift { w: WeightSequence::constant(2.0) }, SpaceSpec::ell2())
            .unwrap();
        let s = spectral_radius_estimate(&t, 4).unwrap();
        assert!(close(s.upper, 2.5));
        assert!(s.norm_bound.value() >= 2.5 - 1e-12);
    }
}
