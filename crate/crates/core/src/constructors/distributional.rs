use serde::{Deserialize, Serialize};

use super::{Check, MaskFamily, SeriesPlan, SeriesTerm};
use crate::criteria::span_samples;
use crate::error::{Error, Result};
use crate::operators::{orbit_with, Cmp, OperatorSpec, OrbitOptions, Trace};
use crate::orbitstats::{dirregular_test, DetectorOptions, Verdict};
use crate::seqspace::{norm, LogReal, SparseVector};

fn trace(t: &OperatorSpec, x: &SparseVector, horizon: u64, budget: u64) -> Result<Trace> {
    Ok(orbit_with(t, x, horizon, OrbitOptions { budget })?.trace)
}

/// Normalised vectors `x_m` with their counting lengths `N_m` (`N_0 = 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DccInputs {
    pub xs: Vec<SparseVector>,
    pub ns: Vec<u64>,
}

impl DccInputs {
    /// `x_m = e_{stretch·N_m} / ‖e_{stretch·N_m}‖`.
    pub fn basis(t: &OperatorSpec, ns: Vec<u64>, stretch: u64) -> Result<Self> {
        let xs = ns
            .iter()
            .map(|&n| {
                let i = n.checked_mul(stretch).ok_or_else(|| Error::invalid("support index overflows"))?;
                let e = SparseVector::basis(i);
                Ok(e.scale(norm(&e, t.space()).recip()))
            })
            .collect::<Result<_>>()?;
        Ok(DccInputs { xs, ns })
    }

    fn validate(&self, t: &OperatorSpec) -> Result<()> {
        if self.xs.len() != self.ns.len() {
            return Err(Error::invalid("need one N_m per x_m"));
        }
        let mut prev = 1;
        for (m, &n) in self.ns.iter().enumerate() {
            if n <= prev {
                return Err(Error::invalid(format!("N_{} = {n} must exceed N_{} = {prev}", m + 1, m)));
            }
            prev = n;
        }
        for (m, x) in self.xs.iter().enumerate() {
            let ln = norm(x, t.space()).ln();
            if ln.abs() > 1e-9 {
                return Err(Error::violation("normalisation", vec![m as u64 + 1], format!("‖x‖ = {}", ln.exp())));
            }
        }
        Ok(())
    }
}

/// `N_0 = 1`, `N_m = m²(N_{m-1} + 1) + 1`; with `x_m = e_{N_m}` under a
/// constant weight 2 backward shift both counting conditions hold.
pub fn dcc_feasible_schedule(count: usize) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(count);
    let mut prev: u64 = 1;
    for m in 1..=count as u64 {
        prev = (m * m)
            .checked_mul(prev + 1)
            .and_then(|v| v.checked_add(1))
            .ok_or_else(|| Error::invalid(format!("N_{m} overflows")))?;
        out.push(prev);
    }
    Ok(out)
}

/// `card{0 ≤ i < n : cmp}`.
fn count_below(tr: &Trace, cmp: Cmp, n: u64) -> u64 {
    tr.count(cmp, 0, n - 1)
}

/// `count/n > 1 - 1/d` in exact integer arithmetic.
fn exceeds(count: u64, n: u64, d: u64) -> bool {
    count as u128 * d as u128 > (d as u128 - 1) * n as u128
}

struct Counts {
    large: (u64, u64),
    small: Vec<(u64, u64)>,
}

/// The counts of both conditions for candidate `s` at position `m`.
fn counts(traces: &[Trace], ns: &[u64], chosen: &[usize], s: usize, m: u64, ln_t: f64) -> Counts {
    let n_prev = chosen.last().map_or(1, |&q| ns[q]);
    let bar = (m as f64).ln() + n_prev as f64 * ln_t;
    let n = ns[s];
    let large = (count_below(&traces[s], Cmp::above(bar), n), n);
    let small = chosen
        .iter()
        .map(|&k| (count_below(&traces[k], Cmp::below(-(m as f64).ln()), n), n))
        .collect();
    Counts { large, small }
}

fn all_traces(t: &OperatorSpec, inputs: &DccInputs, budget: u64) -> Result<Vec<Trace>> {
    let h = inputs.ns.last().copied().unwrap_or(1) - 1;
    inputs.xs.iter().map(|x| trace(t, x, h, budget)).collect()
}

/// Greedy subsequence (positions into `inputs`) along which
/// `card{i < N_m : ‖Tⁱx_m‖ > m‖T‖^{N_{m-1}}}/N_m > 1 - 1/m` and
/// `card{i < N_m : ‖Tⁱx_k‖ < 1/m}/N_m > 1 - 1/m²` (`k < m`) hold after
/// renumbering.
pub fn select_dcc_subsequence(t: &OperatorSpec, inputs: &DccInputs, budget: u64) -> Result<Vec<usize>> {
    inputs.validate(t)?;
    let ln_t = t.norm()?.ln();
    let traces = all_traces(t, inputs, budget)?;
    let mut chosen: Vec<usize> = Vec::new();
    for s in 0..inputs.xs.len() {
        let m = chosen.len() as u64 + 1;
        let c = counts(&traces, &inputs.ns, &chosen, s, m, ln_t);
        if exceeds(c.large.0, c.large.1, m) && c.small.iter().all(|&(k, n)| exceeds(k, n, m * m)) {
            chosen.push(s);
        }
    }
    Ok(chosen)
}

impl DccInputs {
    pub fn subsequence(&self, positions: &[usize]) -> DccInputs {
        DccInputs {
            xs: positions.iter().map(|&p| self.xs[p].clone()).collect(),
            ns: positions.iter().map(|&p| self.ns[p]).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DccConstruction {
    pub x: SparseVector,
    pub plan: SeriesPlan,
    /// The counting conditions on the inputs, as ratios.
    pub conditions: Vec<Check>,
    /// The density bounds of the argument, evaluated on `x`.
    pub counting: Vec<Check>,
    pub horizon: u64,
    pub verdict: Verdict,
}

impl DccConstruction {
    pub fn accepted(&self) -> bool {
        self.verdict.is_ok() && self.counting.iter().all(|c| c.holds)
    }
}

/// `x = Σ_k ‖T‖^{-N_{2k-1}} x_{2k}` from inputs satisfying both counting
/// conditions, checked with its density bounds and `dirregular_test`.
pub fn dirregular_from_dcc(
    t: &OperatorSpec,
    inputs: &DccInputs,
    horizon: u64,
    epsilon: f64,
    opts: &DetectorOptions,
) -> Result<DccConstruction> {
    inputs.validate(t)?;
    let len = inputs.xs.len();
    if len < 2 {
        return Err(Error::violation("range too short", vec![len as u64], "at least x_1 and x_2 are needed"));
    }
    let mut prev_gap = 0;
    let mut prev = 1;
    for (m, &n) in inputs.ns.iter().enumerate() {
        if n - prev <= prev_gap && m > 0 {
            return Err(Error::violation("N_m - N_{m-1} increasing", vec![m as u64 + 1], format!("gap {}", n - prev)));
        }
        prev_gap = n - prev;
        prev = n;
    }
    let ln_t = t.norm()?.ln();
    if !(ln_t > 0.0) {
        return Err(Error::precondition("the construction needs ‖T‖ > 1"));
    }
    let traces = all_traces(t, inputs, opts.budget)?;
    let all: Vec<usize> = (0..len).collect();
    let mut conditions = Vec::new();
    for s in 0..len {
        let m = s as u64 + 1;
        let c = counts(&traces, &inputs.ns, &all[..s], s, m, ln_t);
        let ratio = |(k, n): (u64, u64)| k as f64 / n as f64;
        let mut check = Check::greater("large-count ratio", m, ratio(c.large), 1.0 - 1.0 / m as f64);
        check.holds = exceeds(c.large.0, c.large.1, m);
        if !check.holds {
            return Err(Error::violation("large-count ratio", vec![m], format!("ratio {}", ratio(c.large))));
        }
        conditions.push(check);
        for (k, &e) in c.small.iter().enumerate() {
            let mut check = Check::greater(format!("small-count ratio for x_{}", k + 1), m, ratio(e), 1.0 - 1.0 / (m * m) as f64);
            check.holds = exceeds(e.0, e.1, m * m);
            if !check.holds {
                return Err(Error::violation("small-count ratio", vec![m, k as u64 + 1], format!("ratio {}", ratio(e))));
            }
            conditions.push(check);
        }
    }
    let ns = &inputs.ns;
    let terms: Vec<SeriesTerm> = (1..=len / 2)
        .map(|k| SeriesTerm {
            coefficient: LogReal::from_ln(-(ns[2 * k - 2] as f64) * ln_t),
            vector: inputs.xs[2 * k - 1].clone(),
            source: ns[2 * k - 2],
        })
        .collect();
    // later terms have N_{2k-1} ≥ N_last + k
    let last = *ns.last().expect("nonempty");
    let tail = LogReal::from_ln(-(last as f64) * ln_t - (ln_t.exp() - 1.0).ln());
    let mut plan = SeriesPlan {
        truncation: terms.len() as u64,
        terms,
        tail_bound: tail,
        targets: vec![],
    };
    let x = plan.sum();
    let h = horizon.max(last);
    let tr = trace(t, &x, h, opts.budget)?;
    let mut counting = Vec::new();
    for m in 1..=(len / 2) as u64 {
        let n = ns[2 * m as usize - 1];
        let k = count_below(&tr, Cmp::above((m as f64).ln()), n);
        let mut c = Check::greater("large fraction before N_2m", m, k as f64 / n as f64, (m - 1) as f64 / m as f64);
        c.holds = (k as u128) * (m as u128) > (m as u128 - 1) * n as u128;
        counting.push(c);
        if (2 * m as usize) < len {
            let n = ns[2 * m as usize];
            let k = count_below(&tr, Cmp::below(-((m + 1) as f64).ln()), n);
            let mut c = Check::greater("small fraction before N_2m+1", m, k as f64 / n as f64, 1.0 - 1.0 / m as f64);
            c.holds = exceeds(k, n, m);
            counting.push(c);
        }
    }
    plan.targets = counting.clone();
    let verdict = dirregular_test(t, &x, h, epsilon, opts)?;
    Ok(DccConstruction {
        x,
        plan,
        conditions,
        counting,
        horizon: h,
        verdict,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManifoldOptions {
    pub horizon: u64,
    pub epsilon: f64,
    /// Largest number of nonzero coefficients in a sampled combination.
    pub depth: usize,
    pub detector: DetectorOptions,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        ManifoldOptions {
            horizon: 1 << 20,
            epsilon: 0.5,
            depth: 3,
            detector: DetectorOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinationVerdict {
    pub coefficients: Vec<(usize, i8)>,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldReport {
    pub z: Vec<SparseVector>,
    pub combinations: Vec<CombinationVerdict>,
    pub all_passed: bool,
}

impl ManifoldReport {
    pub fn first_failure(&self) -> Option<&CombinationVerdict> {
        self.combinations.iter().find(|c| !c.accepted)
    }
}

/// `z_m = y_m + u_m/m` with `u_m = Σ_{k ∈ γ_m} x_k`, and `dirregular_test`
/// on every sampled `{-1, 0, 1}`-combination of `z_1, …, z_{m_max}`.
pub fn dense_irregular_manifold(
    t: &OperatorSpec,
    ys: &[SparseVector],
    x_terms: &[SparseVector],
    masks: &MaskFamily,
    m_max: u64,
    opts: &ManifoldOptions,
) -> Result<ManifoldReport> {
    masks.validate(m_max)?;
    if (ys.len() as u64) < m_max {
        return Err(Error::invalid(format!("{} samples y given, {m_max} needed", ys.len())));
    }
    let budget = opts.detector.budget;
    for (m, y) in ys.iter().take(m_max as usize).enumerate() {
        if y.is_zero() {
            continue;
        }
        let tr = trace(t, y, opts.horizon, budget)?;
        let end = tr.ln_at(opts.horizon);
        if !(end == f64::NEG_INFINITY || end < crate::criteria::DECAY_TOLERANCE.ln() + tr.ln_at(0)) {
            return Err(Error::violation("orbit decay of y_m", vec![m as u64 + 1], "orbit does not decay within the horizon"));
        }
    }
    let k_max = x_terms.len() as u64;
    let mut z = Vec::new();
    for m in 1..=m_max {
        let members = masks.members(m, k_max);
        if members.is_empty() {
            return Err(Error::invalid(format!("mask {m} has no member among the {k_max} series terms")));
        }
        let u = members
            .iter()
            .fold(SparseVector::zero(), |acc, &k| acc.add(&x_terms[k as usize - 1]));
        z.push(ys[m as usize - 1].add(&u.scale(LogReal::from_value(1.0 / m as f64))));
    }
    let mut combinations = Vec::new();
    for coefficients in span_samples(z.len(), opts.depth) {
        let v = coefficients
            .iter()
            .fold(SparseVector::zero(), |acc, &(i, c)| acc.add(&z[i].scale(LogReal::from_value(c as f64))));
        let verdict = dirregular_test(t, &v, opts.horizon, opts.epsilon, &opts.detector)?;
        combinations.push(CombinationVerdict {
            coefficients,
            accepted: verdict.is_ok(),
            reason: verdict.err().map(|r| r.to_string()),
        });
    }
    let all_passed = combinations.iter().all(|c| c.accepted);
    Ok(ManifoldReport {
        z,
        combinations,
        all_passed,
    })
}
