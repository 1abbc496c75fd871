use super::{Direction, OperatorKind, OperatorSpec};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::seqspace::{axpy, LogReal, SparseVector, WeightSequence};
use crate::special::ln_binomial;

fn shift_step<R: Real>(dir: Direction, w: Option<&WeightSequence<R>>, x: &SparseVector<R>) -> SparseVector<R> {
    shift_power(dir, w, x, 1)
}

/// `Tⁿx` for a shift, one closed-form weight product per support entry.
fn shift_power<R: Real>(dir: Direction, w: Option<&WeightSequence<R>>, x: &SparseVector<R>, n: u64) -> SparseVector<R> {
    if n == 0 {
        return x.clone();
    }
    let entries = x.iter().filter_map(|(j, c)| match dir {
        Direction::Backward => {
            if j < n {
                return None;
            }
            let f = w.map_or(R::zero(), |w| w.ln_sum(j - n + 1, j).expect("ordered"));
            Some((j - n, c * LogReal::from_ln(f)))
        }
        Direction::Forward => {
            let target = j.checked_add(n).expect("forward shift index overflow");
            let f = w.map_or(R::zero(), |w| w.ln_sum(j, target - 1).expect("ordered"));
            Some((target, c * LogReal::from_ln(f)))
        }
    });
    SparseVector::from_entries(entries)
}

fn matrix_apply<R: Real>(rows: &[Vec<R>], x: &SparseVector<R>) -> Result<SparseVector<R>> {
    let d = rows.len();
    if let Some(i) = x.max_index() {
        if i as usize >= d || i > usize::MAX as u64 {
            return Err(Error::SupportOutOfRange { index: i, dim: d });
        }
    }
    let mut out = SparseVector::zero();
    for (r, row) in rows.iter().enumerate() {
        let mut acc = LogReal::zero();
        for (j, c) in x.iter() {
            let a = row[j as usize];
            if a != R::zero() {
                acc = acc + LogReal::from_value(a) * c;
            }
        }
        out.add_at(r as u64, acc);
    }
    Ok(out)
}

pub(crate) fn apply_kind<R: Real>(kind: &OperatorKind<R>, x: &SparseVector<R>) -> Result<SparseVector<R>> {
    if let Some((dir, w)) = kind.as_shift() {
        return Ok(shift_step(dir, w, x));
    }
    match kind {
        OperatorKind::ScalarPlus { lambda, inner } => Ok(axpy(*lambda, x, &apply_kind(inner, x)?)),
        OperatorKind::FiniteMatrix { rows } => matrix_apply(rows, x),
        _ => unreachable!("shift kinds handled above"),
    }
}

pub(crate) fn apply_power_kind<R: Real>(kind: &OperatorKind<R>, x: &SparseVector<R>, n: u64) -> Result<SparseVector<R>> {
    if let Some((dir, w)) = kind.as_shift() {
        return Ok(shift_power(dir, w, x, n));
    }
    match kind {
        OperatorKind::ScalarPlus { lambda, inner } => {
            // (λI + T)ⁿx = Σ_k C(n,k) λ^{n-k} T^k x
            if lambda.is_zero() {
                return apply_power_kind(inner, x, n);
            }
            let mut acc = SparseVector::zero();
            let mut tk = x.clone();
            for k in 0..=n {
                if tk.is_zero() {
                    break;
                }
                let ln_c = ln_binomial::<R>(n, k) + lambda.ln() * R::from_u64(n - k).unwrap();
                let sign_neg = !lambda.is_positive() && (n - k) % 2 == 1;
                let coef = if sign_neg { -LogReal::from_ln(ln_c) } else { LogReal::from_ln(ln_c) };
                acc = SparseVector::axpy_with_threshold(coef, &tk, &acc, lit(crate::seqspace::CANCELLATION_THRESHOLD));
                if k < n {
                    tk = apply_kind(inner, &tk)?;
                }
            }
            Ok(acc)
        }
        OperatorKind::FiniteMatrix { rows } => {
            let mut y = x.clone();
            for _ in 0..n {
                if y.is_zero() {
                    break;
                }
                y = matrix_apply(rows, &y)?;
            }
            Ok(y)
        }
        _ => unreachable!("shift kinds handled above"),
    }
}

/// `Tx`, exactly.
pub fn apply<R: Real>(t: &OperatorSpec<R>, x: &SparseVector<R>) -> Result<SparseVector<R>> {
    apply_kind(t.kind(), x)
}

/// `Tⁿx`: closed-form weight products for shifts, binomial expansion for
/// `λI + T`, iteration for matrices.
pub fn apply_power<R: Real>(t: &OperatorSpec<R>, x: &SparseVector<R>, n: u64) -> Result<SparseVector<R>> {
    apply_power_kind(t.kind(), x, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqspace::SpaceSpec;

    fn l2() -> SpaceSpec<f64> {
        SpaceSpec::ell2()
    }

    #[test]
    fn apply_examples() {
        let t = OperatorSpec::weighted_backward(WeightSequence::constant(2.0), l2()).unwrap();
        let y = apply(&t, &SparseVector::basis(5)).unwrap();
        assert_eq!(y.to_values().unwrap(), vec![(4, 2.0)]);
        let b = OperatorSpec::backward_shift(l2()).unwrap();
        assert!(apply(&b, &SparseVector::basis(0)).unwrap().is_zero());
        let w = WeightSequence::geometric(1.0, 0.5);
        let s = OperatorSpec::scalar_plus(1.0, OperatorKind::WeightedBackwardShift { w: w.clone() }, l2()).unwrap();
        let y = apply(&s, &SparseVector::basis(1)).unwrap();
        let vals = y.to_values().unwrap();
        assert_eq!(vals[1], (1, 1.0));
        assert_eq!(vals[0].0, 0);
        assert!((vals[0].1 - w.at(1).value()).abs() < 1e-15);
    }

    #[test]
    fn binomial_power_matches_iteration() {
        let w = WeightSequence::geometric(0.9, 0.97);
        for lambda in [1.0, -0.5, 0.3] {
            let s = OperatorSpec::scalar_plus(lambda, OperatorKind::WeightedBackwardShift { w: w.clone() }, l2()).unwrap();
            let x = SparseVector::from_values([(3, 1.0), (7, -2.0), (12, 0.25)]);
            let mut y = x.clone();
            for _ in 0..9 {
                y = apply(&s, &y).unwrap();
            }
            let z = apply_power(&s, &x, 9).unwrap();
            let (a, b) = (y.to_values().unwrap(), z.to_values().unwrap());
            assert_eq!(a.len(), b.len());
            for ((i, u), (j, v)) in a.iter().zip(&b) {
                assert_eq!(i, j);
                assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0), "λ={lambda} i={i}: {u} vs {v}");
            }
        }
    }

    #[test]
    fn matrix_support_checked() {
        let m = OperatorSpec::matrix(vec![vec![0.5, 0.0], vec![0.0, 1.0 / 3.0]], l2()).unwrap();
        assert!(matches!(apply(&m, &SparseVector::basis(2)), Err(Error::SupportOutOfRange { .. })));
        let y = apply_power(&m, &SparseVector::from_values([(0, 1.0), (1, 1.0)]), 2).unwrap();
        let v = y.to_values().unwrap();
        assert!((v[0].1 - 0.25).abs() < 1e-15 && (v[1].1 - 1.0 / 9.0).abs() < 1e-15);
    }
}
