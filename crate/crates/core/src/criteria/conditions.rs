//! Finite-range checks of the SDCC, DCC and LYCC conditions.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{orbit_with, Cmp, OperatorSpec, OrbitOptions, Trace};
use crate::seqspace::{norm, LogReal, SparseVector};

/// Relative decay required when an orbit does not reach exact zero.
pub const DECAY_TOLERANCE: f64 = 1e-6;

/// Log-slack for `≥` comparisons between independently rounded log values.
const GE_SLACK: f64 = 1e-12;

fn slack(x: f64) -> f64 {
    GE_SLACK * x.abs().max(1.0)
}

/// Whether the orbit reaches exact zero, or ends below `DECAY_TOLERANCE·‖x‖`.
fn decays(tr: &Trace) -> bool {
    let h = tr.horizon();
    let end = tr.ln_at(h);
    end == f64::NEG_INFINITY || end < DECAY_TOLERANCE.ln() + tr.ln_at(0)
}

fn trace(t: &OperatorSpec, x: &SparseVector, horizon: u64, budget: u64) -> Result<Trace> {
    Ok(orbit_with(t, x, horizon, OrbitOptions { budget })?.trace)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdccWitness {
    pub r: f64,
    /// `x_m` for `m = 1..=verified_range`.
    pub vectors: Vec<SparseVector>,
    pub verified_range: u64,
    pub probe_horizon: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdccRejection {
    /// Smallest `m` with no admissible pool vector.
    pub failing_m: u64,
    pub reason: String,
}

/// For each `m ≤ m_max`, the first pool vector with `‖Tⁱx‖ ≥ rⁱ‖x‖` for
/// `i = 1..m` whose orbit decays within `probe_horizon`.
pub fn sdcc_witness_search(
    t: &OperatorSpec,
    r: f64,
    m_max: u64,
    pool: &[SparseVector],
    probe_horizon: u64,
    budget: u64,
) -> Result<std::result::Result<SdccWitness, SdccRejection>> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::invalid("SDCC needs a finite r > 1"));
    }
    let lr = r.ln();
    let horizon = probe_horizon.max(m_max);
    let mut traces = Vec::with_capacity(pool.len());
    for x in pool {
        traces.push(if x.is_zero() { None } else { Some(trace(t, x, horizon, budget)?) });
    }
    let mut vectors = Vec::new();
    for m in 1..=m_max {
        let found = traces.iter().position(|tr| {
            let Some(tr) = tr else { return false };
            let l0 = tr.ln_at(0);
            decays(tr)
                && (1..=m).all(|i| {
                    let want = l0 + i as f64 * lr;
                    tr.ln_at(i) >= want - slack(want)
                })
        });
        match found {
            Some(j) => vectors.push(pool[j].clone()),
            None => {
                return Ok(Err(SdccRejection {
                    failing_m: m,
                    reason: "pool exhausted".into(),
                }))
            }
        }
    }
    Ok(Ok(SdccWitness {
        r,
        vectors,
        verified_range: m_max,
        probe_horizon: horizon,
    }))
}

/// `Σ c_k x_{index_k}`.
pub type Combination = Vec<(usize, f64)>;

fn combine(xs: &[SparseVector], c: &Combination) -> Result<SparseVector> {
    let mut acc = SparseVector::zero();
    for &(i, a) in c {
        let x = xs
            .get(i)
            .ok_or_else(|| Error::precondition(format!("combination refers to x_{i}, only {} given", xs.len())))?;
        acc = acc.add(&x.scale(LogReal::from_value(a)));
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DccRatio {
    pub m: u64,
    pub n_m: u64,
    pub count: u64,
    pub ratio: f64,
    pub required: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DccReport {
    /// Condition (a) per `x_m`.
    pub decays: Vec<bool>,
    /// Condition (b): `card{0 ≤ i < N_m : ‖Tⁱy_m‖ ≥ m‖y_m‖}/N_m` vs `1 - 1/m`.
    pub ratios: Vec<DccRatio>,
    pub passed: bool,
}

/// Checks the DCC conditions for `m = 1..=ys.len()`, with `y_m` given as a
/// finite combination of the `xs`.
pub fn dcc_witness_check(
    t: &OperatorSpec,
    xs: &[SparseVector],
    ys: &[Combination],
    ns: &[u64],
    probe_horizon: u64,
    budget: u64,
) -> Result<DccReport> {
    if ys.len() != ns.len() {
        return Err(Error::invalid("need one N_m per y_m"));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) || ns.first() == Some(&0) {
        return Err(Error::invalid("N_m must be positive and increasing"));
    }
    let ys: Vec<SparseVector> = ys.iter().map(|c| combine(xs, c)).collect::<Result<_>>()?;
    let mut decays_v = Vec::new();
    for x in xs {
        decays_v.push(x.is_zero() || decays(&trace(t, x, probe_horizon, budget)?));
    }
    let mut ratios = Vec::new();
    for (k, (y, &n_m)) in ys.iter().zip(ns).enumerate() {
        let m = k as u64 + 1;
        let count = if y.is_zero() {
            0
        } else {
            let tr = trace(t, y, n_m - 1, budget)?;
            let bar = (m as f64).ln() + norm(y, t.space()).ln();
            tr.count(Cmp::at_least(bar - slack(bar)), 0, n_m - 1)
        };
        let ratio = count as f64 / n_m as f64;
        ratios.push(DccRatio {
            m,
            n_m,
            count,
            ratio,
            required: 1.0 - 1.0 / m as f64,
        });
    }
    let passed = decays_v.iter().all(|&d| d) && ratios.iter().all(|r| r.ratio >= r.required);
    Ok(DccReport {
        decays: decays_v,
        ratios,
        passed,
    })
}

/// A normalised span sample `Σ c_i x_i` (coefficients in `{-1, 0, 1}`)
/// with `‖Tⁿs‖/‖s‖ > 2^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub level: u32,
    pub coefficients: Vec<(usize, i8)>,
    pub index: u64,
    pub ln_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyccReport {
    /// Common indices `n₁ < … < n_K` with `‖T^{n_k}x‖ < 2^{-k}‖x‖` for all `x ∈ X₀`.
    pub decay_indices: Option<Vec<u64>>,
    pub growth: Vec<GrowthPoint>,
    pub condition_a: bool,
    pub condition_b: bool,
    pub failing: Option<String>,
}

impl LyccReport {
    pub fn holds(&self) -> bool {
        self.condition_a && self.condition_b
    }
}

/// Combination depth for span samples.
pub const SPAN_DEPTH: usize = 3;

/// All coefficient vectors over `d` generators with 1..=depth nonzero entries
/// in `{-1, 1}`, in lexicographic order of supports.
pub fn span_samples(d: usize, depth: usize) -> Vec<Vec<(usize, i8)>> {
    fn rec(d: usize, depth: usize, from: usize, cur: &mut Vec<(usize, i8)>, out: &mut Vec<Vec<(usize, i8)>>) {
        for i in from..d {
            for s in [1i8, -1] {
                cur.push((i, s));
                out.push(cur.clone());
                if cur.len() < depth {
                    rec(d, depth, i + 1, cur, out);
                }
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(d, depth, 0, &mut Vec::new(), &mut out);
    out
}

/// LYCC evidence over `Y = span(X₀)`: (a) a common decaying subsequence and
/// (b) `sup_n ‖Tⁿ|_Y‖` exceeding `2^k` for `k = 1..levels` on span samples.
pub fn lycc_evidence(t: &OperatorSpec, x0: &[SparseVector], horizon: u64, levels: u32, budget: u64) -> Result<LyccReport> {
    if x0.is_empty() {
        return Err(Error::invalid("X₀ must be nonempty"));
    }
    let traces: Vec<Trace> = x0.iter().map(|x| trace(t, x, horizon, budget)).collect::<Result<_>>()?;
    // (a): smallest n ≥ from where every orbit is below its bar
    let mut decay = Vec::new();
    let mut from = 1;
    'levels: for k in 1..=levels {
        let bars: Vec<f64> = traces.iter().map(|tr| tr.ln_at(0) - k as f64 * LN_2).collect();
        let mut n = from;
        loop {
            let mut next = n;
            for (tr, &b) in traces.iter().zip(&bars) {
                match tr.first(Cmp::below(b), n) {
                    Some(f) => next = next.max(f),
                    None => break 'levels,
                }
            }
            if next == n {
                break;
            }
            n = next;
        }
        decay.push(n);
        from = n + 1;
    }
    let condition_a = decay.len() == levels as usize;
    // (b)
    let mut growth = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut level = 1;
    for coeffs in span_samples(x0.len(), SPAN_DEPTH) {
        let s = coeffs
            .iter()
            .fold(SparseVector::zero(), |acc, &(i, c)| acc.add(&x0[i].scale(LogReal::from_value(c as f64))));
        if s.is_zero() {
            continue;
        }
        let tr = trace(t, &s, horizon, budget)?;
        let (n, m) = tr.max_ln(0, horizon);
        let ln_ratio = m - tr.ln_at(0);
        if ln_ratio > best {
            best = ln_ratio;
        }
        while level <= levels && ln_ratio > level as f64 * LN_2 {
            growth.push(GrowthPoint {
                level,
                coefficients: coeffs.clone(),
                index: n,
                ln_ratio,
            });
            level += 1;
        }
        if level > levels {
            break;
        }
    }
    let condition_b = growth.len() == levels as usize;
    let failing = if !condition_a {
        Some(format!("(a): common decay found for {} of {levels} levels", decay.len()))
    } else if !condition_b {
        Some(format!("(b): best growth ratio e^{best:.6} does not exceed 2^{}", growth.len() + 1))
    } else {
        None
    };
    Ok(LyccReport {
        decay_indices: condition_a.then_some(decay),
        growth,
        condition_a,
        condition_b,
        failing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_sample_count() {
        // Σ_{j ≤ 3} C(4, j) 2^j = 8 + 24 + 32
        assert_eq!(span_samples(4, 3).len(), 64);
        assert_eq!(span_samples(10, 3).len(), 20 + 180 + 960);
    }
}
