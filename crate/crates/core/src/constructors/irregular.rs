use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::{Check, Relation, SeriesPlan, SeriesTerm};
use crate::error::{Error, Result};
use crate::operators::{apply_power, orbit_with, Cmp, OperatorSpec, OrbitOptions, Trace};
use crate::seqspace::{log_sum_exp, norm, LogReal, SparseVector};

const LN_4: f64 = 2.0 * LN_2;
const LN_3: f64 = 1.098_612_288_668_109_8;

fn trace(t: &OperatorSpec, x: &SparseVector, horizon: u64, budget: u64) -> Result<Trace> {
    Ok(orbit_with(t, x, horizon, OrbitOptions { budget })?.trace)
}

fn select_err(level: u64, reason: impl Into<String>) -> Error {
    Error::Selection {
        level: level as usize,
        reason: reason.into(),
    }
}

/// Smallest `c ≥ from` with `tr(offset_j + c) < bars_j` for every `j`.
fn first_common(tr: &Trace, offsets: &[u64], bars: &[f64], from: u64) -> Option<u64> {
    let mut c = from;
    loop {
        let mut next = c;
        for (&o, &b) in offsets.iter().zip(bars) {
            let f = tr.first(Cmp::below(b), o.checked_add(c)?)?;
            next = next.max(f - o);
        }
        if next == c {
            return Some(c);
        }
        c = next;
    }
}

/// An irregular vector `u = Σ_j T^{n_{2j}}x / (4^j ‖T‖^{n_{2j-1}} ‖T^{n_{2j}}x‖)`
/// built from a vector whose orbit oscillates between 0 and a bounded level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedOscillation {
    pub u: SparseVector,
    pub plan: SeriesPlan,
    /// `n_0, n_1, …, n_{2K+1}` with `n_0 = 0`.
    pub lows: Vec<u64>,
    /// `m_1, …, m_{2K}`.
    pub highs: Vec<u64>,
    /// `M`, the largest observed `‖Tⁿx‖`.
    pub bound: LogReal,
    /// The selection inequalities, as checked.
    pub selection: Vec<Check>,
    pub verified: bool,
}

impl BoundedOscillation {
    /// `(n_{2k+1}, m_{2k} - n_{2k})`, the indices of the verified low and high at level `k`.
    pub fn witness_indices(&self, k: usize) -> (u64, Option<u64>) {
        let high = (k >= 1).then(|| self.highs[2 * k - 1] - self.lows[2 * k]);
        (self.lows[2 * k + 1], high)
    }
}

/// Greedy selection of `n_1 < m_1 < n_2 < m_2 < …` for levels `k = 0..=K`
/// followed by the verification of `‖T^{n_{2k+1}}u‖ < 2^{-k}` and
/// `‖T^{m_{2k}-n_{2k}}u‖ > k - 4^{-k}` on the truncated series (tail
/// included as an error bound). Strict inequalities carry a factor 2.
pub fn irregular_from_bounded_oscillation(
    t: &OperatorSpec,
    x: &SparseVector,
    delta: f64,
    horizon: u64,
    k_max: u64,
    budget: u64,
) -> Result<BoundedOscillation> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("δ must be positive"));
    }
    if k_max == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    if x.is_zero() {
        return Err(Error::precondition("x must be nonzero"));
    }
    let ln_t = t.norm()?.ln();
    if !(ln_t > 0.0) {
        return Err(Error::precondition("the construction needs ‖T‖ > 1"));
    }
    let tr = trace(t, x, horizon, budget)?;
    let r = |i: u64| tr.ln_at(i);
    let ln_delta = delta.ln();
    let (_, ln_m) = tr.max_ln(0, horizon);
    if tr.first(Cmp::below(-(k_max as f64) * LN_4), 1).is_none() {
        return Err(Error::precondition(format!(
            "no orbit norm below 4^-{k_max} within the horizon; liminf ‖Tⁿx‖ = 0 is not evidenced"
        )));
    }

    let mut n: Vec<u64> = vec![0];
    let mut m: Vec<u64> = Vec::new();
    let mut selection = Vec::new();
    // n_{2j-1}, with n_{-1} = 0
    let odd = |n: &[u64], j: u64| if j == 0 { 0 } else { n[2 * j as usize - 1] };
    let coef = |n: &[u64], j: u64| -(j as f64 * LN_4 + odd(n, j) as f64 * ln_t + r(n[2 * j as usize]));
    for k in 0..=k_max {
        if k >= 1 {
            let from = odd(&n, k) + 1;
            let m1 = tr
                .first(Cmp::above(ln_delta), from)
                .ok_or_else(|| select_err(k, format!("no m_{} with ‖Tᵐx‖ > δ after {}", 2 * k - 1, from - 1)))?;
            m.push(m1);
            let s = log_sum_exp((0..k).map(|j| ln_m + coef(&n, j)));
            let ln_ks = log_sum_exp([(k as f64).ln(), s]);
            let bar_small = -(k as f64) * LN_4 - LN_2;
            let bar_large = ln_delta - k as f64 * LN_4 - odd(&n, k) as f64 * ln_t - LN_2 - ln_ks;
            let n2 = tr
                .first(Cmp::below(bar_small.min(bar_large)), m1 + 1)
                .ok_or_else(|| select_err(k, format!("no n_{} deep enough within the horizon", 2 * k)))?;
            n.push(n2);
            selection.push(Check::less_ln("‖T^{n_2k}x‖ < 4^-k", k, r(n2), -(k as f64) * LN_4));
            let lead = LogReal::from_ln(ln_delta + coef(&n, k));
            selection.push(Check::new(
                "δ·coef_k - Σ_{j<k} M·coef_j > k",
                k,
                lead - LogReal::from_ln(s),
                Relation::Greater,
                LogReal::from_value(k as f64),
            ));
            let m2 = tr
                .first(Cmp::above(ln_delta), n2 + 1)
                .ok_or_else(|| select_err(k, format!("no m_{} with ‖Tᵐx‖ > δ after {n2}", 2 * k)))?;
            m.push(m2);
        }
        let target = r(n[2 * k as usize]) - LN_2;
        let offsets: Vec<u64> = (0..=k).map(|j| n[2 * j as usize]).collect();
        let coefs: Vec<f64> = (0..=k).map(|j| coef(&n, j)).collect();
        let bars: Vec<f64> = coefs.iter().map(|c| target - c).collect();
        let mut c = m.last().map_or(1, |&v| v + 1);
        let sum = |c: u64| log_sum_exp(offsets.iter().zip(&coefs).map(|(&o, &cf)| r(o + c) + cf));
        loop {
            c = first_common(&tr, &offsets, &bars, c)
                .ok_or_else(|| select_err(k, format!("no n_{} within the horizon", 2 * k + 1)))?;
            if sum(c) < target {
                break;
            }
            c += 1;
        }
        selection.push(Check::less_ln("Σ_j ‖T^{n_2j + n_2k+1}x‖·coef_j < ‖T^{n_2k}x‖", k, sum(c), target + LN_2));
        n.push(c);
    }

    // u and its tail
    let mut terms = Vec::new();
    for j in 0..=k_max {
        let nj = n[2 * j as usize];
        terms.push(SeriesTerm {
            coefficient: LogReal::from_ln(coef(&n, j)),
            vector: apply_power(t, x, nj)?,
            source: nj,
        });
    }
    let last = *n.last().expect("selected");
    let tail_ln = -(last as f64) * ln_t - (k_max + 1) as f64 * LN_4 + (4.0f64 / 3.0).ln();
    let mut plan = SeriesPlan {
        terms,
        truncation: k_max,
        tail_bound: LogReal::from_ln(tail_ln),
        targets: vec![],
    };
    let u = plan.sum();
    let ut = trace(t, &u, last, budget)?;
    for k in 0..=k_max {
        let i = n[2 * k as usize + 1];
        let upper = log_sum_exp([ut.ln_at(i), tail_ln + i as f64 * ln_t]);
        plan.targets.push(Check::less_ln("‖T^{n_2k+1}u‖ < 2^-k", k, upper, -(k as f64) * LN_2));
        if k >= 1 {
            let i = m[2 * k as usize - 1] - n[2 * k as usize];
            let lower = ut.lognorm(i) - LogReal::from_ln(tail_ln + i as f64 * ln_t);
            let bar = LogReal::from_value(k as f64 - 4f64.powi(-(k as i32)));
            plan.targets.push(Check::new("‖T^{m_2k - n_2k}u‖ > k - 4^-k", k, lower, Relation::Greater, bar));
        }
    }
    let verified = plan.targets.iter().all(|c| c.holds);
    Ok(BoundedOscillation {
        u,
        plan,
        lows: n,
        highs: m,
        bound: LogReal::from_ln(ln_m),
        selection,
        verified,
    })
}

/// A normalised vector `u_j` with its growth index `m_j` and decay index `n_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyccTerm {
    /// `j`: the term enters the series with coefficient `2^{-j}`.
    pub index: u64,
    pub u: SparseVector,
    pub m: u64,
    pub n: u64,
}

/// How `I` is drawn from the admissible indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IndexRule {
    /// Every index admissible given the earlier members.
    #[default]
    Greedy,
    /// Every other greedy member.
    EveryOther,
    Explicit { indices: Vec<u64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyccConstruction {
    pub u: SparseVector,
    pub plan: SeriesPlan,
    pub index_set: Vec<u64>,
    /// `M_j = sup{‖Tⁿu_i‖ : i ≤ j, n ≤ horizon}` per term.
    pub sup_norms: Vec<LogReal>,
    pub verified: bool,
}

/// `u = Σ_{i∈I} 2^{-i} u_i` after checking `‖T^{n_k}u_j‖ < 1/j` (`j ≤ k`)
/// and `‖T^{m_j}u_j‖ > 3^j M_{j-1}`; the growth rule `2^i > 2^j ‖T‖^{n_j}`
/// is imposed for `i > j` in `I`.
pub fn irregular_from_lycc(
    t: &OperatorSpec,
    terms: &[LyccTerm],
    rule: &IndexRule,
    horizon: u64,
    budget: u64,
) -> Result<LyccConstruction> {
    if terms.is_empty() {
        return Err(Error::invalid("at least one term is needed"));
    }
    for w in terms.windows(2) {
        if w[0].index >= w[1].index {
            return Err(Error::invalid("term indices must increase"));
        }
        if w[0].n >= w[1].m {
            return Err(Error::invalid(format!("indices must interleave: n_{} ≥ m_{}", w[0].index, w[1].index)));
        }
    }
    for s in terms {
        if s.index == 0 || s.m >= s.n {
            return Err(Error::invalid(format!("term {} needs index ≥ 1 and m < n", s.index)));
        }
        if s.n > horizon {
            return Err(Error::invalid(format!("n_{} = {} exceeds the horizon", s.index, s.n)));
        }
        let ln = norm(&s.u, t.space()).ln();
        if ln.abs() > 1e-9 {
            return Err(Error::violation("normalisation", vec![s.index], format!("‖u‖ = {}", ln.exp())));
        }
    }
    let ln_t = t.norm()?.ln();
    let traces: Vec<Trace> = terms.iter().map(|s| trace(t, &s.u, horizon, budget)).collect::<Result<_>>()?;
    let mut sup = Vec::new();
    let mut run = f64::NEG_INFINITY;
    for tr in &traces {
        run = run.max(tr.max_ln(0, horizon).1);
        sup.push(run);
    }
    // (a)'
    for (p, sk) in terms.iter().enumerate() {
        for (q, sj) in terms[..=p].iter().enumerate() {
            let l = traces[q].ln_at(sk.n);
            if !(l < -(sj.index as f64).ln()) {
                return Err(Error::violation(
                    "(a)' ‖T^{n_k}u_j‖ < 1/j",
                    vec![sj.index, sk.index],
                    format!("norm {}", l.exp()),
                ));
            }
        }
    }
    // (b)'
    for p in 1..terms.len() {
        let s = &terms[p];
        let l = traces[p].ln_at(s.m);
        if !(l > s.index as f64 * LN_3 + sup[p - 1]) {
            return Err(Error::violation(
                "(b)' ‖T^{m_j}u_j‖ > 3^j M_{j-1}",
                vec![s.index],
                format!("ln norm {l}, bar {}", s.index as f64 * LN_3 + sup[p - 1]),
            ));
        }
    }
    let admissible = |chosen: &[usize], p: usize| {
        chosen
            .iter()
            .all(|&q| (terms[p].index - terms[q].index) as f64 * LN_2 > terms[q].n as f64 * ln_t)
    };
    let mut greedy: Vec<usize> = Vec::new();
    for p in 0..terms.len() {
        if admissible(&greedy, p) {
            greedy.push(p);
        }
    }
    let chosen: Vec<usize> = match rule {
        IndexRule::Greedy => greedy,
        IndexRule::EveryOther => greedy.into_iter().step_by(2).collect(),
        IndexRule::Explicit { indices } => {
            let mut out = Vec::new();
            for &i in indices {
                let p = terms
                    .iter()
                    .position(|s| s.index == i)
                    .ok_or_else(|| Error::invalid(format!("index {i} has no term")))?;
                if out.last().is_some_and(|&q| q >= p) {
                    return Err(Error::invalid("explicit indices must increase"));
                }
                if let Some(&q) = out.iter().find(|&&q| !admissible(&[q], p)) {
                    return Err(Error::violation(
                        "growth rule 2^i > 2^j ‖T‖^{n_j}",
                        vec![terms[q].index, i],
                        "index gap too small",
                    ));
                }
                out.push(p);
            }
            out
        }
    };
    if chosen.is_empty() {
        return Err(Error::invalid("I is empty"));
    }
    let last = terms[*chosen.last().expect("nonempty")].index;
    let mut plan = SeriesPlan {
        terms: chosen
            .iter()
            .map(|&p| SeriesTerm {
                coefficient: LogReal::pow2(-(terms[p].index as i64)),
                vector: terms[p].u.clone(),
                source: terms[p].m,
            })
            .collect(),
        truncation: chosen.len() as u64,
        tail_bound: LogReal::pow2(-(last as i64)),
        targets: vec![],
    };
    let u = plan.sum();
    let ut = trace(t, &u, horizon, budget)?;
    for &p in &chosen {
        let s = &terms[p];
        let j = s.index as f64;
        let m_prev = if p == 0 { LogReal::zero() } else { LogReal::from_ln(sup[p - 1]) };
        let growth = LogReal::from_ln(j * 1.5f64.ln()) - LogReal::one();
        let bar = growth * m_prev - LogReal::pow2(1 - s.index as i64);
        plan.targets.push(Check::new("‖T^{m_j}u‖ > ((3/2)^j - 1)M_{j-1} - 2^{1-j}", s.index, ut.lognorm(s.m), Relation::Greater, bar));
        let bar = LogReal::from_value(1.0 / j) + LogReal::pow2(1 - s.index as i64);
        plan.targets.push(Check::new("‖T^{n_j}u‖ < 1/j + 2^{1-j}", s.index, ut.lognorm(s.n), Relation::Less, bar));
    }
    let verified = plan.targets.iter().all(|c| c.holds);
    Ok(LyccConstruction {
        u,
        plan,
        index_set: chosen.iter().map(|&p| terms[p].index).collect(),
        sup_norms: sup.into_iter().map(LogReal::from_ln).collect(),
        verified,
    })
}

/// Greedy LYCC terms from normalised basis vectors: term `j` takes the
/// first `e_s` (`s ≤ search_limit`) whose orbit exceeds `3^j M_{j-1}` after
/// the previous decay index, and the first later index where every term
/// so far is below `1/i`. Indices `j` respect the growth rule.
pub fn lycc_terms_from_growth(
    t: &OperatorSpec,
    count: usize,
    search_limit: u64,
    horizon: u64,
    budget: u64,
) -> Result<Vec<LyccTerm>> {
    let ln_t = t.norm()?.ln();
    let mut terms: Vec<LyccTerm> = Vec::new();
    let mut traces: Vec<Trace> = Vec::new();
    let mut sup = f64::NEG_INFINITY;
    while terms.len() < count {
        let level = terms.len() as u64 + 1;
        let index = terms
            .iter()
            .map(|s| s.index + (s.n as f64 * ln_t / LN_2).floor().max(0.0) as u64 + 1)
            .max()
            .unwrap_or(1);
        let after = terms.last().map_or(0, |s| s.n);
        let bar = if terms.is_empty() { f64::NEG_INFINITY } else { index as f64 * LN_3 + sup };
        let mut found = None;
        for s in after + 1..=search_limit {
            let e = SparseVector::basis(s);
            let u = e.scale(norm(&e, t.space()).recip());
            let tr = trace(t, &u, horizon, budget)?;
            let Some(m) = tr.first(Cmp::above(bar), after + 1) else { continue };
            let mut all: Vec<&Trace> = traces.iter().collect();
            all.push(&tr);
            let bars: Vec<f64> = terms
                .iter()
                .map(|s| -(s.index as f64).ln())
                .chain([-(index as f64).ln()])
                .collect();
            let Some(n) = first_common_many(&all, &bars, m + 1) else { continue };
            found = Some((LyccTerm { index, u, m, n }, tr));
            break;
        }
        let (term, tr) = found.ok_or_else(|| {
            select_err(level, format!("no basis vector up to {search_limit} grows past 3^{index}·M_{}", level - 1))
        })?;
        sup = sup.max(tr.max_ln(0, horizon).1);
        traces.push(tr);
        terms.push(term);
    }
    Ok(terms)
}

/// Smallest `n ≥ from` with `tr_i(n) < bars_i` for every trace.
fn first_common_many(traces: &[&Trace], bars: &[f64], from: u64) -> Option<u64> {
    let mut n = from;
    loop {
        let mut next = n;
        for (tr, &b) in traces.iter().zip(bars) {
            next = next.max(tr.first(Cmp::below(b), n)?);
        }
        if next == n {
            return Some(n);
        }
        n = next;
    }
}

/// LYCC terms from growth, assembled into an irregular vector.
pub fn irregular_from_growth(
    t: &OperatorSpec,
    count: usize,
    search_limit: u64,
    rule: &IndexRule,
    horizon: u64,
    budget: u64,
) -> Result<LyccConstruction> {
    let terms = lycc_terms_from_growth(t, count, search_limit, horizon, budget)?;
    irregular_from_lycc(t, &terms, rule, horizon, budget)
}
