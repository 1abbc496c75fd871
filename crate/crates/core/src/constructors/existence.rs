use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{OperatorKind, OperatorSpec};
use crate::seqspace::{log_sum_exp, LogReal, SpaceSpec, Tail, WeightSequence};
use crate::special::ln_factorial;

/// Largest stage: `N_7 = 8! + 1` is the deepest orbit index needed.
pub const MAX_STAGE: u64 = 6;

/// Points per range above which the bound is checked on a sample.
const SAMPLE_LIMIT: u64 = 10_000;

/// Slack for `≥` between independently rounded logs.
const SLACK: f64 = 1e-12;

/// `w_l = l^{-2/3}`, with `w_0 = 1`.
pub fn existence_weight(l: u64) -> f64 {
    if l == 0 {
        1.0
    } else {
        (l as f64).powf(-2.0 / 3.0)
    }
}

/// `N_0 = 0`, `N_k = (k+1)! + 1`.
fn stage_length(k: u64) -> u64 {
    if k == 0 {
        0
    } else {
        (2..=k + 1).product::<u64>() + 1
    }
}

fn factorial(k: u64) -> u64 {
    (2..=k).product()
}

/// Log-factorials and cumulative `ln w` up to a fixed size.
struct Tables {
    ln_fact: Vec<f64>,
    /// `cum[l] = Σ_{i<l} ln w_i`.
    cum: Vec<f64>,
}

impl Tables {
    fn new(n: u64) -> Self {
        let ln_fact = (0..=n).map(ln_factorial::<f64>).collect();
        let mut cum = Vec::with_capacity(n as usize + 1);
        let mut acc = 0.0;
        for l in 0..=n {
            cum.push(acc);
            acc += existence_weight(l).ln();
        }
        Tables { ln_fact, cum }
    }

    fn ln_binomial(&self, i: u64, k: u64) -> f64 {
        self.ln_fact[i as usize] - self.ln_fact[k as usize] - self.ln_fact[(i - k) as usize]
    }

    /// `ln ‖(I+T)ⁱe_j‖`, from `‖(I+T)ⁱe_j‖² = Σ_k (C(i,k) Π_{l=j-k}^{j-1} w_l)²`.
    fn ln_norm(&self, i: u64, j: u64) -> f64 {
        let top = i.min(j);
        let cj = self.cum[j as usize];
        0.5 * log_sum_exp((0..=top).map(|k| 2.0 * (self.ln_binomial(i, k) + cj - self.cum[(j - k) as usize])))
    }
}

/// `ln ‖(I+T)ⁱe_j‖` on `ℓ²` with `Te_{n+1} = w_n e_n`.
pub fn norm_power_basis(i: u64, j: u64) -> f64 {
    Tables::new(i.max(j)).ln_norm(i, j)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeCheck {
    pub lo: u64,
    pub hi: u64,
    /// `lo > hi`: nothing to check.
    pub vacuous: bool,
    pub checked: u64,
    pub sampled: bool,
    pub all_hold: bool,
    /// Smallest `ln‖(I+T)ⁱu‖ - ln(i w_{j-1}/2)` seen, with its `i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst: Option<(u64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub m: u64,
    pub n_m: u64,
    /// `u_m = e_j` with `j = N_{m+1} - 1`.
    pub j: u64,
    /// `‖(I+T)ⁱu_m‖ ≥ i w_{j-1}/2` on the stated range.
    pub alpha: RangeCheck,
    /// The same bound on `1 ≤ i ≤ N_{m+1} - N_m - 2`.
    pub alpha_broad: RangeCheck,
    /// `card{0 ≤ i < N_m : ‖(I+T)ⁱu_m‖ ≥ m}`.
    pub count: u64,
    pub fraction: f64,
    /// The lower bound formula for the fraction.
    pub stated_bound: f64,
    /// `fraction > stated_bound`, when the bound is positive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exceeds_bound: Option<bool>,
    /// `‖(I+T)ⁱu_m‖` nondecreasing over `0 ≤ i < N_m` (all `i ≤ j`).
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExistenceReport {
    pub operator: OperatorSpec,
    pub stages: Vec<StageReport>,
    /// The fractions are nondecreasing in `m` over all stages.
    pub nondecreasing: bool,
    /// The same from `m = 2` on.
    pub nondecreasing_from_2: bool,
}

/// `I + T` on `ℓ²`, `T` the backward shift with `Te_{n+1} = w_n e_n`,
/// `w_n = n^{-2/3}`; checked for `m ≤ m_max` with `u_m = e_{N_{m+1}-1}`.
pub fn existence_operator(m_max: u64) -> Result<ExistenceReport> {
    if m_max == 0 {
        return Err(Error::invalid("m_max must be at least 1"));
    }
    if m_max > MAX_STAGE {
        return Err(Error::Budget {
            needed: factorial(m_max + 3) as u128,
            budget: factorial(MAX_STAGE + 2),
        });
    }
    // backward weight at i multiplies e_i into e_{i-1}: w'_i = w_{i-1}
    let w = WeightSequence::from_runs(
        vec![
            crate::seqspace::Run { value: LogReal::one(), len: 2 },
        ],
        Tail::PowerLaw {
            scale: LogReal::one(),
            exponent: -2.0 / 3.0,
            shift: -1,
        },
    )?;
    let inner = OperatorKind::WeightedBackwardShift { w };
    let operator = OperatorSpec::scalar_plus(1.0, inner, SpaceSpec::ell2())?;

    let tables = Tables::new(stage_length(m_max + 1));
    let mut stages = Vec::new();
    for m in 1..=m_max {
        stages.push(stage(&tables, m));
    }
    let nondecreasing = stages.windows(2).all(|p| p[0].fraction <= p[1].fraction);
    let nondecreasing_from_2 = stages.iter().skip(1).collect::<Vec<_>>().windows(2).all(|p| p[0].fraction <= p[1].fraction);
    Ok(ExistenceReport {
        operator,
        stages,
        nondecreasing,
        nondecreasing_from_2,
    })
}

fn sample(lo: u64, hi: u64) -> (Vec<u64>, bool) {
    let len = hi - lo + 1;
    if len <= SAMPLE_LIMIT {
        return ((lo..=hi).collect(), false);
    }
    let step = (len - 1) as f64 / (SAMPLE_LIMIT - 1) as f64;
    let mut pts: Vec<u64> = (0..SAMPLE_LIMIT).map(|s| lo + (s as f64 * step).round() as u64).collect();
    *pts.last_mut().expect("nonempty") = hi;
    pts.dedup();
    (pts, true)
}

fn check_range(tables: &Tables, j: u64, lo: u64, hi: u64) -> RangeCheck {
    if lo > hi {
        return RangeCheck {
            lo,
            hi,
            vacuous: true,
            checked: 0,
            sampled: false,
            all_hold: true,
            worst: None,
        };
    }
    let ln_w = existence_weight(j - 1).ln();
    let (pts, sampled) = sample(lo, hi);
    let mut worst: Option<(u64, f64)> = None;
    for &i in &pts {
        let margin = tables.ln_norm(i, j) - ((i as f64).ln() + ln_w - std::f64::consts::LN_2);
        if worst.is_none_or(|(_, w)| margin < w) {
            worst = Some((i, margin));
        }
    }
    RangeCheck {
        lo,
        hi,
        vacuous: false,
        checked: pts.len() as u64,
        sampled,
        all_hold: worst.is_none_or(|(_, w)| w >= -SLACK),
        worst,
    }
}

fn stage(tables: &Tables, m: u64) -> StageReport {
    let n_m = stage_length(m);
    let j = stage_length(m + 1) - 1;
    // i = 3m([((m+2)!)^{2/3}] + 1), …, (m+2)! - (m+1)! - 2
    let lo = 3 * m * ((factorial(m + 2) as f64).powf(2.0 / 3.0).floor() as u64 + 1);
    let hi = (factorial(m + 2) - factorial(m + 1)).saturating_sub(2);
    let alpha = check_range(tables, j, lo, hi);
    let alpha_broad = check_range(tables, j, 1, (stage_length(m + 1) - n_m).saturating_sub(2));
    let bar = (m as f64).ln() - SLACK;
    let mut count = 0;
    let mut monotone = true;
    let mut prev = f64::NEG_INFINITY;
    for i in 0..n_m {
        let l = tables.ln_norm(i, j);
        if l >= bar {
            count += 1;
        }
        if l < prev - SLACK {
            monotone = false;
        }
        prev = l;
    }
    let fraction = count as f64 / n_m as f64;
    let f1 = factorial(m + 1) as f64;
    let fm = factorial(m) as f64;
    let stated_bound = (f1 - fm - 2.0 - 3.0 * (m - 1) as f64 * (f1.powf(2.0 / 3.0).floor() + 1.0)) / (f1 + 1.0);
    StageReport {
        m,
        n_m,
        j,
        alpha,
        alpha_broad,
        count,
        fraction,
        stated_bound,
        exceeds_bound: (stated_bound > 0.0).then_some(fraction > stated_bound),
        monotone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_lengths() {
        assert_eq!(stage_length(3), 25);
        assert_eq!(stage_length(4), 121);
        assert!((existence_weight(3) - 3f64.powf(-2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn sampling_keeps_endpoints() {
        let (pts, sampled) = sample(5, 100_000);
        assert!(sampled);
        assert_eq!(pts[0], 5);
        assert_eq!(*pts.last().unwrap(), 100_000);
        assert!(pts.len() as u64 <= SAMPLE_LIMIT);
    }
}
