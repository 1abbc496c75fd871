use serde::Serialize;

use super::apply::apply_kind;
use super::trace::{Piece, Trace};
use super::{Direction, OperatorSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seqspace::{norm, LogReal, SpaceSpec, SparseVector, WeightSequence};

/// Default cap on orbit work (pieces × live terms, or steps × support).
pub const DEFAULT_ORBIT_BUDGET: u64 = 250_000_000;

/// Longest horizon for which a record serializes its full norm list.
const SERIALIZE_LIST_LIMIT: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrbitOptions {
    pub budget: u64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            budget: DEFAULT_ORBIT_BUDGET,
        }
    }
}

/// `‖Tⁿx‖` for `n = 0..=horizon`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord<R: Real = f64> {
    pub operator: OperatorSpec<R>,
    pub seed: SparseVector<R>,
    pub horizon: u64,
    pub trace: Trace<R>,
}

impl<R: Real> OrbitRecord<R> {
    pub fn lognorm(&self, n: u64) -> LogReal<R> {
        self.trace.lognorm(n)
    }

    /// All `horizon + 1` norms; avoid for huge horizons.
    pub fn lognorms(&self) -> Vec<LogReal<R>> {
        self.trace.to_vec()
    }
}

#[derive(Serialize)]
#[serde(bound = "R: Real")]
struct OrbitRepr<'a, R: Real> {
    operator: &'a OperatorSpec<R>,
    seed: &'a SparseVector<R>,
    horizon: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lognorms: Option<Vec<LogReal<R>>>,
    pieces: usize,
}

impl<R: Real> Serialize for OrbitRecord<R> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OrbitRepr {
            operator: &self.operator,
            seed: &self.seed,
            horizon: self.horizon,
            lognorms: (self.horizon <= SERIALIZE_LIST_LIMIT).then(|| self.lognorms()),
            pieces: self.trace.pieces().len(),
        }
        .serialize(s)
    }
}

pub fn orbit<R: Real>(t: &OperatorSpec<R>, x: &SparseVector<R>, horizon: u64) -> Result<OrbitRecord<R>> {
    orbit_with(t, x, horizon, OrbitOptions::default())
}

/// Orbit norms; shifts use closed-form weight products, everything else
/// iterated exact application.
pub fn orbit_with<R: Real>(
    t: &OperatorSpec<R>,
    x: &SparseVector<R>,
    horizon: u64,
    opts: OrbitOptions,
) -> Result<OrbitRecord<R>> {
    let trace = match t.kind().as_shift() {
        Some((dir, w)) => shift_trace(dir, w, t.space(), x, horizon, opts.budget)?,
        None => iterated_trace(t, x, horizon, opts.budget)?,
    };
    Ok(OrbitRecord {
        operator: t.clone(),
        seed: x.clone(),
        horizon,
        trace,
    })
}

/// Orbit norms by repeated application, whatever the operator kind.
pub fn orbit_iterated<R: Real>(
    t: &OperatorSpec<R>,
    x: &SparseVector<R>,
    horizon: u64,
    opts: OrbitOptions,
) -> Result<OrbitRecord<R>> {
    Ok(OrbitRecord {
        operator: t.clone(),
        seed: x.clone(),
        horizon,
        trace: iterated_trace(t, x, horizon, opts.budget)?,
    })
}

fn iterated_trace<R: Real>(t: &OperatorSpec<R>, x: &SparseVector<R>, horizon: u64, budget: u64) -> Result<Trace<R>> {
    let needed = (horizon as u128 + 1) * x.support_len().max(1) as u128;
    if needed > budget as u128 {
        return Err(Error::Budget { needed, budget });
    }
    let mut ln = Vec::new();
    let mut y = x.clone();
    let mut n = 0u64;
    while n <= horizon && !y.is_zero() {
        ln.push(norm(&y, t.space()).ln());
        if n < horizon {
            y = apply_kind(t.kind(), &y)?;
        }
        n += 1;
    }
    let mut pieces = Vec::new();
    if !ln.is_empty() {
        pieces.push(Piece::Explicit { start: 0, ln });
    }
    if n <= horizon {
        pieces.push(Piece::Zero {
            start: n,
            end: horizon + 1,
        });
    }
    Ok(Trace::new(horizon, pieces))
}

/// Each support entry `c e_j` follows its own path `Tⁿ(c e_j) = c·Π w · e_{j∓n}`
/// and distinct entries never collide, so the log-norm is a combination of
/// per-entry terms. On stretches where both the multiplied weight and the
/// space weight at the moving index are affine in the log, every term is
/// affine in `n`.
fn shift_trace<R: Real>(
    dir: Direction,
    w: Option<&WeightSequence<R>>,
    space: &SpaceSpec<R>,
    x: &SparseVector<R>,
    horizon: u64,
    budget: u64,
) -> Result<Trace<R>> {
    let mode = space.mode();
    let q = mode.weight_exponent();
    let v = space.v();
    let entries: Vec<(u64, R)> = x.iter().map(|(j, c)| (j, c.ln())).collect();
    if let (Direction::Forward, Some(&(j, _))) = (dir, entries.last()) {
        if j.checked_add(horizon).is_none() {
            return Err(Error::invalid("forward orbit leaves the index range"));
        }
    }
    let mut pieces = Vec::new();
    let mut work: u64 = 0;
    let mut s = 0u64;
    while s <= horizon {
        let mut end = horizon + 1;
        let mut terms = Vec::new();
        for &(j, lc) in &entries {
            let (i0, prod) = match dir {
                Direction::Backward => {
                    if j < s {
                        continue;
                    }
                    end = end.min(j + 1);
                    (j - s, w.map_or(R::zero(), |w| w.ln_sum_or_empty(j - s + 1, j + 1)))
                }
                Direction::Forward => (j + s, w.map_or(R::zero(), |w| w.ln_sum_or_empty(j, j + s))),
            };
            let bw = match w {
                None => R::zero(),
                Some(w) => {
                    let seg = w.segment_at(i0);
                    let e = if !seg.is_flat() {
                        s + 2
                    } else {
                        match dir {
                            Direction::Backward => s + (i0 - seg.lo) + 2,
                            Direction::Forward => s.saturating_add((seg.hi - i0).saturating_add(2)),
                        }
                    };
                    end = end.min(e);
                    seg.ln_at(i0)
                }
            };
            let vs = v.segment_at(i0);
            let (v_end, slope_v) = match dir {
                Direction::Backward => (s + (i0 - vs.lo) + 1, -vs.slope),
                Direction::Forward => (s.saturating_add((vs.hi - i0).saturating_add(1)), vs.slope),
            };
            end = end.min(v_end);
            terms.push((lc + prod + q * vs.ln_at(i0), bw + q * slope_v));
        }
        if terms.is_empty() {
            pieces.push(Piece::Zero {
                start: s,
                end: horizon + 1,
            });
            break;
        }
        work = work.saturating_add(terms.len() as u64);
        if work > budget {
            return Err(Error::Budget {
                needed: work as u128,
                budget,
            });
        }
        pieces.push(Piece::Convex {
            start: s,
            end,
            mode,
            terms,
        });
        s = end;
    }
    Ok(Trace::new(horizon, pieces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{apply_power, OperatorKind};
    use crate::seqspace::Tail;

    fn vals(r: &OrbitRecord<f64>) -> Vec<f64> {
        r.lognorms().iter().map(|x| x.value()).collect()
    }

    #[test]
    fn constant_weight_orbit() {
        let t = OperatorSpec::weighted_backward(WeightSequence::constant(2.0), SpaceSpec::ell2()).unwrap();
        let r = orbit(&t, &SparseVector::basis(5), 8).unwrap();
        let want = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 0.0, 0.0, 0.0];
        for (a, b) in vals(&r).iter().zip(want) {
            assert!((a - b).abs() < 1e-12 * b.max(1.0), "{a} vs {b}");
        }
        let z = orbit(&t, &SparseVector::zero(), 5).unwrap();
        assert!(z.lognorms().iter().all(|x| x.is_zero()));
        assert_eq!(z.lognorms().len(), 6);
    }

    #[test]
    fn backward_shift_on_harmonic_weights() {
        let v = WeightSequence::power_law(1.0, -1.0, 1).unwrap();
        let t = OperatorSpec::backward_shift(SpaceSpec::ell_p(2.0, v).unwrap()).unwrap();
        let r = orbit(&t, &SparseVector::basis(9), 3).unwrap();
        for (n, x) in vals(&r).iter().enumerate() {
            let want = (1.0 / (10 - n) as f64).sqrt();
            assert!((x - want).abs() < 1e-14, "n={n}");
        }
    }

    fn check_paths(t: &OperatorSpec<f64>, x: &SparseVector<f64>, horizon: u64) {
        let fast = orbit(t, x, horizon).unwrap();
        let slow = orbit_iterated(t, x, horizon, OrbitOptions::default()).unwrap();
        for n in 0..=horizon {
            let (a, b) = (fast.trace.ln_at(n), slow.trace.ln_at(n));
            if a.is_infinite() || b.is_infinite() {
                assert_eq!(a, b, "n={n}");
            } else {
                assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
            }
            let direct = norm(&apply_power(t, x, n).unwrap(), t.space()).ln();
            if a.is_finite() {
                assert!((a - direct).abs() < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn fast_path_matches_iteration() {
        let x = SparseVector::from_values([(3, 1.5), (17, -0.25), (40, 2.0)]);
        let w = WeightSequence::from_runs(
            vec![
                crate::seqspace::Run { value: LogReal::from_value(3.0), len: 5 },
                crate::seqspace::Run { value: LogReal::from_value(0.5), len: 7 },
            ],
            Tail::Blocks {
                blocks: vec![
                    crate::seqspace::BlockGen { value: LogReal::from_value(2.0), base: 2, growth: 1 },
                    crate::seqspace::BlockGen { value: LogReal::from_value(0.25), base: 1, growth: 2 },
                ],
            },
        )
        .unwrap();
        let v = WeightSequence::geometric(1.0, 0.9);
        for space in [
            SpaceSpec::ell_p(1.5, v.clone()).unwrap(),
            SpaceSpec::c0(v.clone()),
            SpaceSpec::ell_p(2.0, WeightSequence::power_law(1.0, -2.0, 1).unwrap()).unwrap(),
        ] {
            let b = OperatorSpec::weighted_backward(w.clone(), space.clone()).unwrap();
            check_paths(&b, &x, 60);
            let f = OperatorSpec::weighted_forward(WeightSequence::geometric(1.0, 0.97), space.clone()).unwrap();
            check_paths(&f, &x, 60);
            let f2 = OperatorSpec::weighted_forward(w.clone(), space.clone());
            if let Ok(f2) = f2 {
                check_paths(&f2, &x, 60);
            }
        }
    }

    #[test]
    fn huge_horizon_is_cheap_for_constant_weights() {
        let t = OperatorSpec::weighted_forward(WeightSequence::constant(0.5), SpaceSpec::ell2()).unwrap();
        let r = orbit(&t, &SparseVector::basis(0), 10_000_000_000).unwrap();
        assert!(r.trace.pieces().len() <= 2);
        let want = 10_000_000_000f64 * 0.5f64.ln();
        assert!((r.trace.ln_at(10_000_000_000) - want).abs() < 1e-6);
    }

    #[test]
    fn iterated_budget_enforced() {
        let t = OperatorSpec::scalar_plus(1.0, OperatorKind::BackwardShift, SpaceSpec::ell2()).unwrap();
        let opts = OrbitOptions { budget: 10 };
        assert!(matches!(
            orbit_with(&t, &SparseVector::basis(3), 100, opts),
            Err(Error::Budget { .. })
        ));
    }
}
