use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{Cmp, Trace};

/// Set of orbit indices `⊂ [0, horizon]`, stored as maximal runs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IndexSetRepr", into = "IndexSetRepr")]
pub struct IndexSet {
    horizon: u64,
    runs: Vec<(u64, u64)>,
    /// `cum[r]` = number of positive indices in runs `0..r`.
    cum: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexSetRepr {
    horizon: u64,
    runs: Vec<(u64, u64)>,
}

impl TryFrom<IndexSetRepr> for IndexSet {
    type Error = Error;

    fn try_from(r: IndexSetRepr) -> Result<Self> {
        IndexSet::from_runs(r.runs, r.horizon)
    }
}

impl From<IndexSet> for IndexSetRepr {
    fn from(s: IndexSet) -> Self {
        IndexSetRepr {
            horizon: s.horizon,
            runs: s.runs,
        }
    }
}

/// `card(A ∩ [1, b])` for a single run `[a, b]`.
fn positive_len(a: u64, b: u64) -> u64 {
    let a = a.max(1);
    if b < a {
        0
    } else {
        b - a + 1
    }
}

impl IndexSet {
    /// Runs must be ordered, disjoint and inside the horizon; adjacent runs
    /// are merged.
    pub fn from_runs(runs: Vec<(u64, u64)>, horizon: u64) -> Result<Self> {
        let mut merged: Vec<(u64, u64)> = Vec::with_capacity(runs.len());
        for (a, b) in runs {
            if a > b || b > horizon {
                return Err(Error::invalid(format!("run [{a}, {b}] invalid for horizon {horizon}")));
            }
            match merged.last_mut() {
                Some(last) if a <= last.1 => {
                    return Err(Error::invalid("runs must be strictly increasing and disjoint"));
                }
                Some(last) if a == last.1 + 1 => last.1 = b,
                _ => merged.push((a, b)),
            }
        }
        let mut cum = Vec::with_capacity(merged.len() + 1);
        let mut acc = 0;
        cum.push(0);
        for &(a, b) in &merged {
            acc += positive_len(a, b);
            cum.push(acc);
        }
        Ok(IndexSet {
            horizon,
            runs: merged,
            cum,
        })
    }

    pub fn from_sorted(indices: &[u64], horizon: u64) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("indices must be strictly increasing"));
        }
        Self::from_runs(indices.iter().map(|&i| (i, i)).collect(), horizon)
    }

    pub fn empty(horizon: u64) -> Self {
        Self::from_runs(vec![], horizon).expect("empty")
    }

    /// `{n ≤ horizon : cmp(ln‖Tⁿx‖)}`.
    pub fn from_rule(trace: &Trace, cmp: Cmp) -> Self {
        Self::from_runs(trace.intervals(cmp, 0, trace.horizon()), trace.horizon()).expect("trace runs are ordered")
    }

    /// `{n ≤ horizon : f(n)}`, evaluated pointwise.
    pub fn from_fn(horizon: u64, f: impl Fn(u64) -> bool) -> Self {
        let mut runs: Vec<(u64, u64)> = Vec::new();
        for n in 0..=horizon {
            if f(n) {
                match runs.last_mut() {
                    Some(last) if last.1 + 1 == n => last.1 = n,
                    _ => runs.push((n, n)),
                }
            }
        }
        Self::from_runs(runs, horizon).expect("ordered")
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn runs(&self) -> &[(u64, u64)] {
        &self.runs
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Number of members (including 0 if present).
    pub fn len(&self) -> u64 {
        self.runs.iter().map(|(a, b)| b - a + 1).sum()
    }

    pub fn contains(&self, n: u64) -> bool {
        let r = self.runs.partition_point(|&(_, b)| b < n);
        r < self.runs.len() && self.runs[r].0 <= n
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.runs.iter().flat_map(|&(a, b)| a..=b)
    }

    /// `card(A ∩ [1, n])`.
    pub fn count_upto(&self, n: u64) -> u64 {
        let r = self.runs.partition_point(|&(a, _)| a <= n);
        if r == 0 {
            return 0;
        }
        let (a, b) = self.runs[r - 1];
        self.cum[r - 1] + positive_len(a, b.min(n))
    }

    /// Every member of `self` is a member of `other`.
    pub fn is_subset(&self, other: &IndexSet) -> bool {
        let theirs = &other.runs;
        let mut k = 0;
        for &(a, b) in &self.runs {
            while k < theirs.len() && theirs[k].1 < a {
                k += 1;
            }
            if k == theirs.len() || theirs[k].0 > a || theirs[k].1 < b {
                return false;
            }
        }
        true
    }

    /// `[0, horizon] \ A`.
    pub fn complement(&self) -> Self {
        let mut runs = Vec::new();
        let mut at = 0u64;
        for &(a, b) in &self.runs {
            if a > at {
                runs.push((at, a - 1));
            }
            at = b + 1;
        }
        if at <= self.horizon {
            runs.push((at, self.horizon));
        }
        Self::from_runs(runs, self.horizon).expect("ordered")
    }

    /// Exact `(argmax, max)` and `(argmin, min)` of `count_upto(n)/n` over
    /// `n ∈ [lo, hi]` (`1 ≤ lo ≤ hi`). Within a run the ratio increases and
    /// within a gap it decreases, so only run ends, gap ends and the range
    /// ends need checking.
    pub fn density_extrema(&self, lo: u64, hi: u64) -> ((u64, f64), (u64, f64)) {
        assert!(lo >= 1 && lo <= hi, "density range must satisfy 1 ≤ lo ≤ hi");
        let ratio = |n: u64| self.count_upto(n) as f64 / n as f64;
        let mut sup = (lo, ratio(lo));
        let mut inf = sup;
        let mut consider = |n: u64| {
            if n < lo || n > hi {
                return;
            }
            let r = ratio(n);
            if r > sup.1 {
                sup = (n, r);
            }
            if r < inf.1 {
                inf = (n, r);
            }
        };
        consider(hi);
        let first = self.runs.partition_point(|&(_, b)| b < lo);
        for &(a, b) in &self.runs[first..] {
            if a > hi {
                consider(a - 1);
                break;
            }
            if a > 0 {
                consider(a - 1);
            }
            consider(b.min(hi));
        }
        (sup, inf)
    }
}

/// Finite-horizon density estimates of `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityReport {
    pub horizon: u64,
    /// `(n, card(A ∩ [1, n]))` at the checkpoints used.
    pub count_prefix: Vec<(u64, u64)>,
    pub udens_estimate: f64,
    pub ldens_estimate: f64,
}

/// Density estimate from checkpoints. Checkpoints below the warm-up prefix
/// `horizon/10` are excluded from both estimates (all are used if none
/// remain).
pub fn density(a: &IndexSet, horizon: u64, checkpoints: &[u64]) -> Result<DensityReport> {
    if checkpoints.is_empty() {
        return Err(Error::invalid("density needs at least one checkpoint"));
    }
    if let Some(&bad) = checkpoints.iter().find(|&&n| n == 0 || n > horizon) {
        return Err(Error::invalid(format!("checkpoint {bad} outside [1, {horizon}]")));
    }
    let warm = horizon / 10;
    let mut used: Vec<u64> = checkpoints.iter().copied().filter(|&n| n >= warm).collect();
    if used.is_empty() {
        used = checkpoints.to_vec();
    }
    used.sort_unstable();
    used.dedup();
    let count_prefix: Vec<(u64, u64)> = used.iter().map(|&n| (n, a.count_upto(n))).collect();
    let ratios = count_prefix.iter().map(|&(n, c)| c as f64 / n as f64);
    Ok(DensityReport {
        horizon,
        udens_estimate: ratios.clone().fold(0.0, f64::max),
        ldens_estimate: ratios.fold(1.0, f64::min),
        count_prefix,
    })
}

/// Exact extrema over `[n_min, horizon]` (upper) and `[max(n_min, horizon/10), horizon]`
/// (lower).
pub fn density_exact(a: &IndexSet, n_min: u64, horizon: u64) -> DensityReport {
    let n_min = n_min.clamp(1, horizon.max(1));
    let horizon = horizon.max(1);
    let (sup, _) = a.density_extrema(n_min, horizon);
    let (_, inf) = a.density_extrema(n_min.max(horizon / 10).max(1), horizon);
    let mut pts = vec![sup.0, inf.0, horizon];
    pts.sort_unstable();
    pts.dedup();
    DensityReport {
        horizon,
        count_prefix: pts.into_iter().map(|n| (n, a.count_upto(n))).collect(),
        udens_estimate: sup.1,
        ldens_estimate: inf.1,
    }
}
