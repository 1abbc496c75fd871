use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{power_norm, spectral_radius_estimate, OperatorSpec};
use crate::orbitstats::{Certificate, Claim};
use crate::seqspace::LogReal;

use super::conditions::SdccWitness;

/// Index sequence `(m_k)_{k ≥ 1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IndexSequence {
    Explicit { values: Vec<u64> },
    /// `m_k = slope·k + offset`
    Affine { slope: u64, offset: u64 },
    /// `m_k = slope·k + offset + ⌊log_base k⌋`
    AffineFloorLog { slope: u64, offset: u64, base: f64 },
}

impl IndexSequence {
    /// `m_k` for `k = 1..=count`.
    pub fn take(&self, count: usize) -> Result<Vec<u64>> {
        let v: Vec<u64> = match self {
            IndexSequence::Explicit { values } => values.iter().copied().take(count).collect(),
            IndexSequence::Affine { slope, offset } => (1..=count as u64).map(|k| slope * k + offset).collect(),
            IndexSequence::AffineFloorLog { slope, offset, base } => {
                if !(*base > 1.0) {
                    return Err(Error::invalid("log base must exceed 1"));
                }
                (1..=count as u64)
                    .map(|k| slope * k + offset + ((k as f64).ln() / base.ln() + 1e-12).floor() as u64)
                    .collect()
            }
        };
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("index sequence must be strictly increasing"));
        }
        Ok(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summability {
    SummableCertified,
    NotCertified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesVerdict {
    pub verdict: Summability,
    /// `Σ_{k ≤ K} t_k`.
    pub partial_sum: LogReal,
    /// `(k₀, q)` of the geometric-decay certificate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<(usize, f64)>,
    /// `t_K·q/(1-q)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<LogReal>,
    /// `partial_sum + tail_bound`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_bound: Option<LogReal>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummabilityReport {
    pub indices: Vec<u64>,
    /// Upper bounds `t_k ≥ 1/‖T^{m_k}‖` (exact when the norm is).
    pub terms: Vec<LogReal>,
    pub plain: SeriesVerdict,
    /// Squared terms.
    pub squared: SeriesVerdict,
}

/// Largest ratio tolerated in a decay certificate.
const MAX_RATIO: f64 = 1.0 - 1e-12;

fn certify(ln_terms: &[f64]) -> SeriesVerdict {
    let partial = crate::seqspace::log_sum_exp(ln_terms.iter().copied());
    let k = ln_terms.len();
    // longest suffix whose successive ratios stay below 1
    let mut k0 = k.saturating_sub(1);
    let mut q = f64::NEG_INFINITY;
    while k0 > 0 {
        let r = ln_terms[k0] - ln_terms[k0 - 1];
        if r.exp() >= MAX_RATIO {
            break;
        }
        q = q.max(r);
        k0 -= 1;
    }
    let certified = k >= 2 && k0 + 1 < k && q.exp() < MAX_RATIO;
    if !certified {
        return SeriesVerdict {
            verdict: Summability::NotCertified,
            partial_sum: LogReal::from_ln(partial),
            decay: None,
            tail_bound: None,
            total_bound: None,
        };
    }
    let qv = q.exp();
    let tail = ln_terms[k - 1] + q - (1.0 - qv).ln();
    SeriesVerdict {
        verdict: Summability::SummableCertified,
        partial_sum: LogReal::from_ln(partial),
        decay: Some((k0 + 1, qv)),
        tail_bound: Some(LogReal::from_ln(tail)),
        total_bound: Some(LogReal::from_ln(partial) + LogReal::from_ln(tail)),
    }
}

/// Partial sums of `1/‖T^{m_k}‖`, `k ≤ K`, certified summable only through a
/// geometric-decay certificate on a suffix of the computed terms.
pub fn series_summability_test(t: &OperatorSpec, b: &IndexSequence, k: usize) -> Result<SummabilityReport> {
    let indices = b.take(k)?;
    let mut ln_terms = Vec::with_capacity(indices.len());
    for &m in &indices {
        let pn = power_norm(t, m)?;
        // 1/‖Tᵐ‖ ≤ 1/lower
        ln_terms.push(-pn.lower.ln());
    }
    let sq: Vec<f64> = ln_terms.iter().map(|x| 2.0 * x).collect();
    Ok(SummabilityReport {
        terms: ln_terms.iter().map(|&x| LogReal::from_ln(x)).collect(),
        plain: certify(&ln_terms),
        squared: certify(&sq),
        indices,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralConsistency {
    pub passed: bool,
    /// Upper end of the spectral-radius enclosure used.
    pub radius_upper: LogReal,
    pub diagnostics: Vec<String>,
}

/// Spectral-radius slack in consistency checks.
pub const SPECTRAL_SLACK: f64 = 1e-9;

/// Necessary spectral consequences of accepted evidence: Li-Yorke type
/// certificates need `r(T) ≥ 1`, SDCC witnesses with constant `r` need
/// `r(T) ≥ r`.
pub fn spectral_consistency_check(
    t: &OperatorSpec,
    certificates: &[Certificate],
    sdcc: &[SdccWitness],
    n_max: u64,
) -> Result<SpectralConsistency> {
    let s = spectral_radius_estimate(t, n_max)?;
    let r = s.upper.value();
    let mut diagnostics = Vec::new();
    for (i, c) in certificates.iter().enumerate() {
        if &c.operator != t {
            diagnostics.push(format!("certificate {i} concerns a different operator"));
            continue;
        }
        // every claim implies Li-Yorke chaos
        let _: Claim = c.claim;
        if r < 1.0 - SPECTRAL_SLACK {
            diagnostics.push(format!("certificate {i} ({:?}) accepted but r(T) ≤ {r} < 1", c.claim));
        }
    }
    for (i, w) in sdcc.iter().enumerate() {
        if r < w.r - SPECTRAL_SLACK {
            diagnostics.push(format!("SDCC witness {i} with r = {} but r(T) ≤ {r}", w.r));
        }
    }
    Ok(SpectralConsistency {
        passed: diagnostics.is_empty(),
        radius_upper: s.upper,
        diagnostics,
    })
}
