use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::detectors::{dirregular_test, irregular_test, liyorke_pair_test, scrambled_line_certificate};
use super::index_set::{DensityReport, IndexSet};
use crate::error::{Error, Result};
use crate::operators::OperatorSpec;
use crate::seqspace::{LogReal, SparseVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    LiYorkePair,
    IrregularVector,
    DistributionallyIrregularVector,
    ScrambledLine,
    DistributionalChaos,
}

/// Which envelope a point belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Small norms (`A`).
    Low,
    /// Large norms (`B`).
    High,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Witnesses {
    pub vectors: Vec<SparseVector>,
    #[serde(default)]
    pub index_sets: Vec<IndexSet>,
}

/// Detector thresholds; unused ones are omitted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scalars: Vec<f64>,
}

/// Detector settings that affect the verdict (recorded in certificates).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorOptions {
    /// Number `K` of envelope levels required.
    pub levels: u32,
    pub density_floor: f64,
    /// Smallest `n` at which `card(A ∩ [1,n])/n` is taken into account.
    pub min_checkpoint: u64,
    /// Li-Yorke low bar: lows must fall below `low·2^{-k}`.
    pub low: f64,
    /// Orbit work budget; not part of the evidence.
    #[serde(skip)]
    pub budget: u64,
}

impl Default for DetectorOptions {
    fn default() -> Self {
        DetectorOptions {
            levels: 3,
            density_floor: 0.9,
            min_checkpoint: 16,
            low: 1.0,
            budget: crate::operators::DEFAULT_ORBIT_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopePoint {
    pub level: u32,
    pub side: Side,
    pub index: u64,
    pub lognorm: LogReal,
    pub bound: LogReal,
}

/// Scrambled-line pair check: the sets for `(α-β)u` at thresholds scaled by
/// `|α-β|` coincide with those of `u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairCheck {
    pub alpha: f64,
    pub beta: f64,
    pub sets_match: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Evidence {
    pub initial_norm: LogReal,
    /// `(n, ‖Tⁿx‖)` with the largest norm over the horizon.
    pub peak: (u64, LogReal),
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub envelope: Vec<EnvelopePoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub densities: Vec<DensityReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pair_checks: Vec<PairCheck>,
}

/// Finite-horizon chaos evidence, recomputable from its witnesses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub claim: Claim,
    pub operator: OperatorSpec,
    pub witnesses: Witnesses,
    pub horizon: u64,
    pub thresholds: Thresholds,
    pub options: DetectorOptions,
    pub evidence: Evidence,
}

/// Why a detector did not accept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub claim: Claim,
    pub reason: String,
    /// Envelope levels completed before failing.
    pub best_level: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocking_index: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_density: Option<f64>,
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} rejected: {} (levels reached {})", self.claim, self.reason, self.best_level)?;
        if let Some(s) = self.side {
            write!(f, ", side {s:?}")?;
        }
        if let Some(i) = self.blocking_index {
            write!(f, ", blocked from index {i}")?;
        }
        if let Some(d) = self.best_density {
            write!(f, ", best density {d}")?;
        }
        Ok(())
    }
}

pub type Verdict = std::result::Result<Certificate, Rejection>;

/// First difference between a stored and a recomputed certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub path: String,
    pub stored: String,
    pub recomputed: String,
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "mismatch at {}: stored {}, recomputed {}", self.path, self.stored, self.recomputed)
    }
}

fn need(x: Option<f64>, name: &str) -> Result<f64> {
    x.ok_or_else(|| Error::invalid(format!("certificate lacks threshold {name}")))
}

fn vector(c: &Certificate, i: usize) -> Result<&SparseVector> {
    c.witnesses
        .vectors
        .get(i)
        .ok_or_else(|| Error::invalid(format!("certificate lacks witness vector {i}")))
}

/// Re-runs the detector named by the claim on the stored witnesses.
pub fn recompute(c: &Certificate, budget: u64) -> Result<Verdict> {
    let mut opts = c.options;
    opts.budget = budget;
    let t = &c.thresholds;
    match c.claim {
        Claim::IrregularVector => irregular_test(
            &c.operator,
            vector(c, 0)?,
            c.horizon,
            need(t.low, "low")?,
            need(t.high, "high")?,
            &opts,
        ),
        Claim::LiYorkePair => {
            liyorke_pair_test(&c.operator, vector(c, 0)?, vector(c, 1)?, c.horizon, need(t.delta, "delta")?, &opts)
        }
        Claim::DistributionallyIrregularVector => {
            dirregular_test(&c.operator, vector(c, 0)?, c.horizon, need(t.epsilon, "epsilon")?, &opts)
        }
        Claim::DistributionalChaos => {
            super::detectors::distributional_pair_test(&c.operator, vector(c, 0)?, vector(c, 1)?, c.horizon, need(t.epsilon, "epsilon")?, &opts)
        }
        Claim::ScrambledLine => scrambled_line_certificate(
            &c.operator,
            vector(c, 0)?,
            &t.scalars,
            c.horizon,
            need(t.epsilon, "epsilon")?,
            &opts,
        ),
    }
}

/// `Ok(Ok(()))` if recomputation reproduces the certificate exactly.
pub fn verify_certificate(c: &Certificate, budget: u64) -> Result<std::result::Result<(), Mismatch>> {
    let fresh = match recompute(c, budget)? {
        Ok(f) => f,
        Err(rej) => {
            return Ok(Err(Mismatch {
                path: "claim".into(),
                stored: "accepted".into(),
                recomputed: rej.to_string(),
            }))
        }
    };
    let a = serde_json::to_value(c).expect("certificates serialize");
    let b = serde_json::to_value(&fresh).expect("certificates serialize");
    Ok(match first_difference(&a, &b, String::new()) {
        None => Ok(()),
        Some(m) => Err(m),
    })
}

fn first_difference(a: &Value, b: &Value, path: String) -> Option<Mismatch> {
    let join = |k: &str| if path.is_empty() { k.to_string() } else { format!("{path}.{k}") };
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            for (k, va) in x {
                match y.get(k) {
                    Some(vb) => {
                        if let Some(m) = first_difference(va, vb, join(k)) {
                            return Some(m);
                        }
                    }
                    None => {
                        return Some(Mismatch {
                            path: join(k),
                            stored: va.to_string(),
                            recomputed: "<absent>".into(),
                        })
                    }
                }
            }
            y.iter().find(|(k, _)| !x.contains_key(*k)).map(|(k, vb)| Mismatch {
                path: join(k),
                stored: "<absent>".into(),
                recomputed: vb.to_string(),
            })
        }
        (Value::Array(x), Value::Array(y)) => {
            for (i, (va, vb)) in x.iter().zip(y).enumerate() {
                if let Some(m) = first_difference(va, vb, format!("{path}[{i}]")) {
                    return Some(m);
                }
            }
            (x.len() != y.len()).then(|| Mismatch {
                path: format!("{path}.length"),
                stored: x.len().to_string(),
                recomputed: y.len().to_string(),
            })
        }
        _ => (a != b).then(|| Mismatch {
            path,
            stored: a.to_string(),
            recomputed: b.to_string(),
        }),
    }
}
