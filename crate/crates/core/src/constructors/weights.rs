use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::OperatorSpec;
use crate::orbitstats::{dirregular_test, DetectorOptions, Verdict};
use crate::seqspace::{LogReal, Run, SpaceSpec, SparseVector, Tail, WeightSequence};

/// Appends a run travelling `ln_ratio` in steps of at most a factor 2.
fn travel(runs: &mut Vec<Run>, ln_ratio: f64) -> u64 {
    if ln_ratio == 0.0 {
        return 0;
    }
    let len = ((ln_ratio.abs() / LN_2) - 1e-9).ceil().max(1.0) as u64;
    runs.push(Run {
        value: LogReal::from_ln(ln_ratio / len as f64),
        len,
    });
    len
}

/// Forward-shift weights whose running product (the orbit of `e₀`) climbs to
/// `peak` and falls to `trough_decay^k` in the `k`-th up/down block pair.
pub fn oscillating_block_weights(peak: f64, trough_decay: f64, n_blocks: u64) -> Result<WeightSequence> {
    if !(peak > 1.0 && peak.is_finite()) {
        return Err(Error::invalid("peak must exceed 1"));
    }
    if !(trough_decay > 0.0 && trough_decay <= 1.0) {
        return Err(Error::invalid("trough decay must lie in (0, 1]"));
    }
    let (lp, ld) = (peak.ln(), trough_decay.ln());
    let mut runs = Vec::new();
    for k in 1..=n_blocks {
        travel(&mut runs, lp - (k - 1) as f64 * ld);
        travel(&mut runs, k as f64 * ld - lp);
    }
    WeightSequence::from_runs(runs, Tail::Constant { c: LogReal::one() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiDesign {
    pub weights: WeightSequence,
    pub density_target: f64,
    /// Stage lengths; odd stages are weight 2, even stages weight 1/2.
    pub lengths: Vec<u64>,
    /// `Σ L_k`, the natural verification horizon.
    pub horizon: u64,
    /// Too few stages for both sets to be observed.
    pub insufficient: bool,
}

/// Alternating blocks of 2's and 1/2's: stage `k` travels past level
/// `±k/2` (in log₂) and then stays long enough to cover `density_target`
/// of everything before it.
pub fn design_di_forward_weights(density_target: f64, n_stages: u32) -> Result<DiDesign> {
    if !(density_target > 0.0 && density_target < 1.0) {
        return Err(Error::invalid("density target must lie in (0, 1)"));
    }
    let t = density_target;
    let (mut total, mut level) = (0u64, 0i64);
    let mut lengths = Vec::new();
    let mut runs = Vec::new();
    for k in 1..=n_stages as i64 {
        let up = k % 2 == 1;
        let bar = k as f64 / 2.0;
        let gap = if up { bar - level as f64 } else { level as f64 + bar };
        let steps = if gap >= 0.0 { gap.floor() as u64 } else { 0 };
        let stay = (t * (total + steps) as f64 / (1.0 - t)).ceil() as u64;
        let len = (steps + stay).max(1);
        runs.push(Run {
            value: LogReal::from_value(if up { 2.0 } else { 0.5 }),
            len,
        });
        lengths.push(len);
        total = total.checked_add(len).ok_or_else(|| Error::invalid("design horizon overflows"))?;
        level += if up { len as i64 } else { -(len as i64) };
    }
    Ok(DiDesign {
        weights: WeightSequence::from_runs(runs, Tail::Constant { c: LogReal::one() })?,
        density_target,
        lengths,
        horizon: total,
        insufficient: n_stages < 2,
    })
}

impl DiDesign {
    pub fn operator(&self) -> Result<OperatorSpec> {
        OperatorSpec::weighted_forward(self.weights.clone(), SpaceSpec::ell2())
    }

    /// `dirregular_test(e₀)` at floor `density_target - 0.05`.
    pub fn verify(&self, epsilon: f64, opts: &DetectorOptions) -> Result<Verdict> {
        let opts = DetectorOptions {
            density_floor: self.density_target - 0.05,
            ..*opts
        };
        dirregular_test(&self.operator()?, &SparseVector::basis(0), self.horizon, epsilon, &opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels(w: &WeightSequence, n: u64) -> Vec<f64> {
        let mut out = vec![0.0];
        for i in 0..n {
            out.push(out.last().unwrap() + w.ln_at(i) / LN_2);
        }
        out
    }

    #[test]
    fn crests_and_troughs_are_exact() {
        let w = oscillating_block_weights(2.0, 0.5, 6).unwrap();
        let lv = levels(&w, w.prefix_len());
        let mut at = 0usize;
        for k in 1..=6usize {
            at += k;
            assert!((lv[at] - 1.0).abs() < 1e-12, "crest {k}");
            at += k + 1;
            assert!((lv[at] + k as f64).abs() < 1e-12, "trough {k}");
        }
        assert_eq!(at as u64, w.prefix_len());
    }

    #[test]
    fn fractional_peaks_are_hit() {
        let w = oscillating_block_weights(3.0, 0.3, 4).unwrap();
        let lv = levels(&w, w.prefix_len());
        let crest = 3f64.log2();
        assert!(lv.iter().all(|&l| l <= crest + 1e-9));
        assert!((lv.last().unwrap() - 4.0 * 0.3f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn zero_blocks() {
        let w = oscillating_block_weights(2.0, 0.5, 0).unwrap();
        assert_eq!(w.prefix_len(), 0);
        assert_eq!(w.ln_at(17), 0.0);
    }
}
