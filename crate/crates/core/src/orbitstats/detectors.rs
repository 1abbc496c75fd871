use std::f64::consts::LN_2;

use super::certificate::{
    Certificate, Claim, DetectorOptions, EnvelopePoint, Evidence, PairCheck, Rejection, Side, Thresholds, Verdict,
    Witnesses,
};
use super::index_set::{density_exact, IndexSet};
use crate::error::{Error, Result};
use crate::operators::{orbit_with, Cmp, OperatorSpec, OrbitOptions, Trace};
use crate::seqspace::{LogReal, SparseVector};

fn positive(x: f64, name: &str) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x.ln())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

fn trace_of(t: &OperatorSpec, x: &SparseVector, horizon: u64, opts: &DetectorOptions) -> Result<Trace> {
    Ok(orbit_with(t, x, horizon, OrbitOptions { budget: opts.budget })?.trace)
}

fn base_evidence(tr: &Trace) -> Evidence {
    let (n, m) = tr.max_ln(0, tr.horizon());
    Evidence {
        initial_norm: tr.lognorm(0),
        peak: (n, LogReal::from_ln(m)),
        envelope: vec![],
        densities: vec![],
        pair_checks: vec![],
    }
}

fn point(tr: &Trace, level: u32, side: Side, index: u64, bound_ln: f64) -> EnvelopePoint {
    EnvelopePoint {
        level,
        side,
        index,
        lognorm: tr.lognorm(index),
        bound: LogReal::from_ln(bound_ln),
    }
}

struct Interleaved {
    points: Vec<EnvelopePoint>,
    lows: Vec<u64>,
    highs: Vec<u64>,
}

/// Greedy `n₁ < m₁ < n₂ < …` with `ln‖T^{n_k}x‖ < low_ln(k)` and
/// `ln‖T^{m_k}x‖ > high_ln(k)`.
fn interleave(
    tr: &Trace,
    levels: u32,
    low_ln: impl Fn(u32) -> f64,
    high_ln: impl Fn(u32) -> f64,
    claim: Claim,
) -> std::result::Result<Interleaved, Rejection> {
    let mut out = Interleaved {
        points: vec![],
        lows: vec![],
        highs: vec![],
    };
    let mut from = 1;
    for k in 1..=levels {
        let reject = |side, at| Rejection {
            claim,
            reason: format!("no {} index at level {k}", if side == Side::Low { "low" } else { "high" }),
            best_level: k - 1,
            side: Some(side),
            blocking_index: Some(at),
            best_density: None,
        };
        let lo = low_ln(k);
        let n = tr.first(Cmp::below(lo), from).ok_or_else(|| reject(Side::Low, from))?;
        let hi = high_ln(k);
        let m = tr.first(Cmp::above(hi), n + 1).ok_or_else(|| reject(Side::High, n + 1))?;
        out.points.push(point(tr, k, Side::Low, n, lo));
        out.points.push(point(tr, k, Side::High, m, hi));
        out.lows.push(n);
        out.highs.push(m);
        from = m + 1;
    }
    Ok(out)
}

fn interleaved_certificate(
    claim: Claim,
    t: &OperatorSpec,
    vectors: Vec<SparseVector>,
    tr: &Trace,
    thresholds: Thresholds,
    opts: &DetectorOptions,
    found: Interleaved,
) -> Certificate {
    let h = tr.horizon();
    let mut evidence = base_evidence(tr);
    evidence.envelope = found.points;
    Certificate {
        claim,
        operator: t.clone(),
        witnesses: Witnesses {
            vectors,
            index_sets: vec![
                IndexSet::from_sorted(&found.lows, h).expect("increasing"),
                IndexSet::from_sorted(&found.highs, h).expect("increasing"),
            ],
        },
        horizon: h,
        thresholds,
        options: *opts,
        evidence,
    }
}

/// Irregularity evidence: interleaved `n_k < m_k` with
/// `‖T^{n_k}x‖ < low·2^{-k}` and `‖T^{m_k}x‖ > high·2^{k}`, `k = 1..K`.
pub fn irregular_test(
    t: &OperatorSpec,
    x: &SparseVector,
    horizon: u64,
    low: f64,
    high: f64,
    opts: &DetectorOptions,
) -> Result<Verdict> {
    let (ll, lh) = (positive(low, "low")?, positive(high, "high")?);
    let tr = trace_of(t, x, horizon, opts)?;
    let claim = Claim::IrregularVector;
    let found = match interleave(&tr, opts.levels, |k| ll - k as f64 * LN_2, |k| lh + k as f64 * LN_2, claim) {
        Ok(f) => f,
        Err(r) => return Ok(Err(r)),
    };
    let th = Thresholds {
        low: Some(low),
        high: Some(high),
        ..Default::default()
    };
    Ok(Ok(interleaved_certificate(claim, t, vec![x.clone()], &tr, th, opts, found)))
}

/// Li-Yorke pair evidence on the difference orbit: lows below
/// `opts.low·2^{-k}`, highs above the fixed bar `δ`.
pub fn liyorke_pair_test(
    t: &OperatorSpec,
    x: &SparseVector,
    y: &SparseVector,
    horizon: u64,
    delta: f64,
    opts: &DetectorOptions,
) -> Result<Verdict> {
    let d = x.sub(y);
    if d.is_zero() {
        return Err(Error::precondition("a Li-Yorke pair needs x ≠ y"));
    }
    let (ld, ll) = (positive(delta, "δ")?, positive(opts.low, "low")?);
    let tr = trace_of(t, &d, horizon, opts)?;
    let claim = Claim::LiYorkePair;
    let found = match interleave(&tr, opts.levels, |k| ll - k as f64 * LN_2, |_| ld, claim) {
        Ok(f) => f,
        Err(r) => return Ok(Err(r)),
    };
    let th = Thresholds {
        delta: Some(delta),
        low: Some(opts.low),
        ..Default::default()
    };
    Ok(Ok(interleaved_certificate(claim, t, vec![x.clone(), y.clone()], &tr, th, opts, found)))
}

/// First indices `p₁ < p₂ < …` with `cmp_k(ln‖T^{p_k}x‖)`.
fn envelope(tr: &Trace, levels: u32, side: Side, bound: impl Fn(u32) -> f64) -> (Vec<EnvelopePoint>, Option<u64>) {
    let mut pts = Vec::new();
    let mut from = 1;
    for k in 1..=levels {
        let b = bound(k);
        let cmp = match side {
            Side::Low => Cmp::below(b),
            Side::High => Cmp::above(b),
        };
        match tr.first(cmp, from) {
            Some(n) => {
                pts.push(point(tr, k, side, n, b));
                from = n + 1;
            }
            None => return (pts, Some(from)),
        }
    }
    (pts, None)
}

/// Distributional irregularity evidence for the orbit in `tr`.
fn dirregular_on_trace(
    claim: Claim,
    t: &OperatorSpec,
    vectors: Vec<SparseVector>,
    tr: &Trace,
    epsilon: f64,
    opts: &DetectorOptions,
) -> Result<Verdict> {
    let le = positive(epsilon, "ε")?;
    let h = tr.horizon();
    if h < opts.min_checkpoint.max(1) {
        return Err(Error::invalid(format!("horizon {h} below the first density checkpoint")));
    }
    let a = IndexSet::from_rule(tr, Cmp::below(le));
    let b = IndexSet::from_rule(tr, Cmp::above(-le));
    let da = density_exact(&a, opts.min_checkpoint, h);
    let db = density_exact(&b, opts.min_checkpoint, h);
    let (ea, fa) = envelope(tr, opts.levels, Side::Low, |k| le - k as f64 * LN_2);
    let (eb, fb) = envelope(tr, opts.levels, Side::High, |k| -le + k as f64 * LN_2);
    let reject = |side, reason: String, level: usize, at, dens: f64| Rejection {
        claim,
        reason,
        best_level: level as u32,
        side: Some(side),
        blocking_index: at,
        best_density: Some(dens),
    };
    for (side, d) in [(Side::Low, &da), (Side::High, &db)] {
        if !(d.udens_estimate >= opts.density_floor) {
            return Ok(Err(reject(
                side,
                format!("upper density {} below floor {}", d.udens_estimate, opts.density_floor),
                0,
                None,
                d.udens_estimate,
            )));
        }
    }
    for (side, e, f, d) in [(Side::Low, &ea, fa, &da), (Side::High, &eb, fb, &db)] {
        if f.is_some() {
            return Ok(Err(reject(side, "envelope incomplete".into(), e.len(), f, d.udens_estimate)));
        }
    }
    let mut evidence = base_evidence(tr);
    evidence.envelope = ea.into_iter().chain(eb).collect();
    evidence.densities = vec![da, db];
    Ok(Ok(Certificate {
        claim,
        operator: t.clone(),
        witnesses: Witnesses {
            vectors,
            index_sets: vec![a, b],
        },
        horizon: h,
        thresholds: Thresholds {
            epsilon: Some(epsilon),
            density_floor: Some(opts.density_floor),
            ..Default::default()
        },
        options: *opts,
        evidence,
    }))
}

/// `A = {n : ‖Tⁿx‖ < ε}` and `B = {n : ‖Tⁿx‖ > 1/ε}` both reach upper
/// density `opts.density_floor` (exact extrema of `card(·∩[1,n])/n` over
/// `n ∈ [min_checkpoint, horizon]`), with envelopes `ε/2^k` and `2^k/ε`.
pub fn dirregular_test(t: &OperatorSpec, x: &SparseVector, horizon: u64, epsilon: f64, opts: &DetectorOptions) -> Result<Verdict> {
    let tr = trace_of(t, x, horizon, opts)?;
    dirregular_on_trace(Claim::DistributionallyIrregularVector, t, vec![x.clone()], &tr, epsilon, opts)
}

/// Distributionally chaotic pair: `x - y` is distributionally irregular.
pub fn distributional_pair_test(
    t: &OperatorSpec,
    x: &SparseVector,
    y: &SparseVector,
    horizon: u64,
    epsilon: f64,
    opts: &DetectorOptions,
) -> Result<Verdict> {
    let d = x.sub(y);
    if d.is_zero() {
        return Err(Error::precondition("a distributional pair needs x ≠ y"));
    }
    let tr = trace_of(t, &d, horizon, opts)?;
    dirregular_on_trace(Claim::DistributionalChaos, t, vec![x.clone(), y.clone()], &tr, epsilon, opts)
}

/// Log-relative width of a threshold tie in the scrambled-line check.
const TIE_TOLERANCE: f64 = 1e-9;

/// Certificate that `span{u}` is distributionally scrambled on the sampled
/// scalars: `u` is distributionally irregular and for each pair `α ≠ β` the
/// sets of `(α-β)u` at thresholds scaled by `|α-β|` coincide with those of `u`.
pub fn scrambled_line_certificate(
    t: &OperatorSpec,
    u: &SparseVector,
    scalars: &[f64],
    horizon: u64,
    epsilon: f64,
    opts: &DetectorOptions,
) -> Result<Verdict> {
    let claim = Claim::ScrambledLine;
    if u.is_zero() {
        return Ok(Err(Rejection {
            claim,
            reason: "zero vector".into(),
            best_level: 0,
            side: None,
            blocking_index: None,
            best_density: None,
        }));
    }
    let le = positive(epsilon, "ε")?;
    let tr = trace_of(t, u, horizon, opts)?;
    let mut cert = match dirregular_on_trace(claim, t, vec![u.clone()], &tr, epsilon, opts)? {
        Ok(c) => c,
        Err(r) => return Ok(Err(r)),
    };
    let (a, b) = (&cert.witnesses.index_sets[0], &cert.witnesses.index_sets[1]);
    let mut checks = Vec::new();
    for (i, &alpha) in scalars.iter().enumerate() {
        for &beta in &scalars[i + 1..] {
            if alpha == beta {
                continue;
            }
            let s = (alpha - beta).abs();
            let ls = positive(s, "|α-β|")?;
            let d = u.scale(LogReal::from_value(alpha - beta));
            let td = trace_of(t, &d, horizon, opts)?;
            let ad = IndexSet::from_rule(&td, Cmp::below(le + ls));
            let bd = IndexSet::from_rule(&td, Cmp::above(-le + ls));
            // Homogeneity is exact; only norms sitting on a threshold may
            // flip under rounding, so those indices are allowed either way.
            let tol = |x: f64| TIE_TOLERANCE * x.abs().max(1.0);
            let a_in = IndexSet::from_rule(&tr, Cmp::below(le - tol(le)));
            let a_out = IndexSet::from_rule(&tr, Cmp::below(le + tol(le)));
            let b_in = IndexSet::from_rule(&tr, Cmp::above(-le + tol(le)));
            let b_out = IndexSet::from_rule(&tr, Cmp::above(-le - tol(le)));
            let ok = (&ad == a && &bd == b)
                || (a_in.is_subset(&ad) && ad.is_subset(&a_out) && b_in.is_subset(&bd) && bd.is_subset(&b_out));
            checks.push(PairCheck {
                alpha,
                beta,
                sets_match: ok,
            });
            if !ok {
                return Ok(Err(Rejection {
                    claim,
                    reason: format!("index sets differ for α={alpha}, β={beta}"),
                    best_level: opts.levels,
                    side: None,
                    blocking_index: None,
                    best_density: None,
                }));
            }
        }
    }
    cert.thresholds.scalars = scalars.to_vec();
    cert.evidence.pair_checks = checks;
    Ok(Ok(cert))
}

/// `true` iff [`scrambled_line_certificate`] accepts.
pub fn scrambled_line_check(
    t: &OperatorSpec,
    u: &SparseVector,
    scalars: &[f64],
    horizon: u64,
    epsilon: f64,
    opts: &DetectorOptions,
) -> Result<bool> {
    Ok(scrambled_line_certificate(t, u, scalars, horizon, epsilon, opts)?.is_ok())
}
