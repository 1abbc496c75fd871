use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use linchaos::constructors::{DccInputs, IndexRule, LyccTerm, ManifoldOptions, MaskFamily, MAX_STAGE};
use linchaos::criteria::IndexSequence;
use linchaos::operators::DEFAULT_ORBIT_BUDGET;
use linchaos::orbitstats::{Claim, DetectorOptions, Thresholds};
use linchaos::{OperatorSpec, SparseVector};

use crate::error::CliError;

/// One experiment: an operator, a task and where to put the artifacts.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Not needed by `verify-certificate` (the certificate carries its
    /// operator) nor by constructors that build their own operator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSpec>,
    pub task: Task,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budget {
    /// Orbit work units (trace pieces × live support terms).
    pub orbit: u64,
    /// Largest factorial stage of the existence construction.
    pub max_stage: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            orbit: DEFAULT_ORBIT_BUDGET,
            max_stage: MAX_STAGE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write `orbit-<i>.csv` for analysed seeds.
    pub orbit_csv: bool,
    /// Rows dumped index by index before switching to piece breakpoints.
    pub csv_points: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("linchaos-out"),
            orbit_csv: true,
            csv_points: 4096,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Task {
    Analyze(AnalyzeTask),
    Construct(ConstructTask),
    Certify(CertifyTask),
    VerifyCertificate(VerifyTask),
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Analyze(_) => "analyze",
            Task::Construct(_) => "construct",
            Task::Certify(_) => "certify",
            Task::VerifyCertificate(_) => "verify-certificate",
        }
    }
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn search_bound() -> u64 {
    1 << 20
}

fn spectral_n_max() -> u64 {
    64
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeTask {
    pub horizon: u64,
    #[serde(default)]
    pub seeds: Vec<SparseVector>,
    /// Irregular seed assembled from `M_v`/`M_w` growth witnesses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_seed: Option<GrowthSeed>,
    /// Irregularity bars: lows below `low·2^{-k}`, highs above `high·2^{k}`.
    #[serde(default = "one")]
    pub low: f64,
    #[serde(default = "one")]
    pub high: f64,
    #[serde(default = "half")]
    pub epsilon: f64,
    #[serde(default)]
    pub detector: DetectorOptions,
    #[serde(default = "search_bound")]
    pub search_bound: u64,
    #[serde(default = "spectral_n_max")]
    pub spectral_n_max: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdcc: Option<SdccProbe>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lycc: Option<LyccProbe>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summability: Option<SummabilityProbe>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSeed {
    pub count: usize,
    pub search_limit: u64,
    #[serde(default)]
    pub rule: IndexRule,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdccProbe {
    /// Every `r > 1` to search.
    pub r: Vec<f64>,
    pub m_max: u64,
    pub pool: Vec<SparseVector>,
    pub probe_horizon: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyccProbe {
    pub x0: Vec<SparseVector>,
    pub levels: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummabilityProbe {
    pub indices: IndexSequence,
    pub terms: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructTask {
    pub constructor: Constructor,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Constructor {
    BoundedOscillation {
        x: SparseVector,
        delta: f64,
        horizon: u64,
        k: u64,
    },
    Lycc {
        terms: Vec<LyccTerm>,
        #[serde(default)]
        rule: IndexRule,
        horizon: u64,
    },
    LyccGrowth {
        count: usize,
        search_limit: u64,
        #[serde(default)]
        rule: IndexRule,
        horizon: u64,
    },
    Dcc {
        inputs: DccSource,
        /// Pass to the admissible subsequence first.
        #[serde(default)]
        select_subsequence: bool,
        horizon: u64,
        #[serde(default = "half")]
        epsilon: f64,
        #[serde(default)]
        detector: DetectorOptions,
    },
    Manifold {
        /// Source of the series terms of the distributionally irregular vector.
        dcc: DccSource,
        #[serde(default = "half")]
        dcc_epsilon: f64,
        ys: Vec<SparseVector>,
        #[serde(default)]
        masks: MaskFamily,
        m_max: u64,
        #[serde(default)]
        options: ManifoldOptions,
    },
    DiForward {
        density_target: f64,
        stages: u32,
        #[serde(default = "half")]
        epsilon: f64,
        #[serde(default)]
        detector: DetectorOptions,
    },
    Existence {
        m_max: u64,
    },
}

impl Constructor {
    pub fn name(&self) -> &'static str {
        match self {
            Constructor::BoundedOscillation { .. } => "bounded_oscillation",
            Constructor::Lycc { .. } => "lycc",
            Constructor::LyccGrowth { .. } => "lycc_growth",
            Constructor::Dcc { .. } => "dcc",
            Constructor::Manifold { .. } => "manifold",
            Constructor::DiForward { .. } => "di_forward",
            Constructor::Existence { .. } => "existence",
        }
    }

    pub fn needs_operator(&self) -> bool {
        !matches!(self, Constructor::DiForward { .. } | Constructor::Existence { .. })
    }
}

/// Normalised inputs `x_m` with counting lengths `N_m`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DccSource {
    /// `x_m = e_{stretch·N_m}` normalised.
    Basis {
        ns: Vec<u64>,
        #[serde(default = "one_u64")]
        stretch: u64,
    },
    /// Basis inputs on the schedule `N_m = m²(N_{m-1}+1)+1`.
    Feasible {
        count: usize,
        #[serde(default = "one_u64")]
        stretch: u64,
    },
    Explicit {
        xs: Vec<SparseVector>,
        ns: Vec<u64>,
    },
}

fn one_u64() -> u64 {
    1
}

impl DccSource {
    pub fn build(&self, t: &OperatorSpec) -> linchaos::Result<DccInputs> {
        match self {
            DccSource::Basis { ns, stretch } => DccInputs::basis(t, ns.clone(), *stretch),
            DccSource::Feasible { count, stretch } => {
                DccInputs::basis(t, linchaos::constructors::dcc_feasible_schedule(*count)?, *stretch)
            }
            DccSource::Explicit { xs, ns } => Ok(DccInputs {
                xs: xs.clone(),
                ns: ns.clone(),
            }),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyTask {
    pub claims: Vec<ClaimRequest>,
}

/// A detector run whose acceptance is packaged as a certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimRequest {
    pub claim: Claim,
    pub vectors: Vec<SparseVector>,
    pub horizon: u64,
    pub thresholds: Thresholds,
    #[serde(default)]
    pub detector: DetectorOptions,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyTask {
    /// Relative paths resolve against the config file's directory.
    pub certificates: Vec<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        if let Task::VerifyCertificate(v) = &mut cfg.task {
            let base = path.parent().unwrap_or(Path::new("."));
            for p in &mut v.certificates {
                if p.is_relative() {
                    *p = base.join(&p);
                }
            }
        }
        Ok(cfg)
    }

    /// Cross-field checks serde cannot express.
    fn validate(&self) -> Result<(), CliError> {
        let needs = match &self.task {
            Task::Analyze(_) | Task::Certify(_) => true,
            Task::Construct(c) => c.constructor.needs_operator(),
            Task::VerifyCertificate(_) => false,
        };
        if needs && self.operator.is_none() {
            return Err(CliError::Schema(format!("task `{}` needs an operator", self.task.name())));
        }
        if !needs && self.operator.is_some() {
            return Err(CliError::Schema(format!("task `{}` takes no operator", self.task.name())));
        }
        match &self.task {
            Task::Certify(c) if c.claims.is_empty() => Err(CliError::Schema("certify needs at least one claim".into())),
            Task::VerifyCertificate(v) if v.certificates.is_empty() => {
                Err(CliError::Schema("verify-certificate needs at least one path".into()))
            }
            _ => Ok(()),
        }
    }
}
