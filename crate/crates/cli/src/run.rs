use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use linchaos::constructors::{
    dense_irregular_manifold, design_di_forward_weights, dirregular_from_dcc, existence_operator,
    irregular_from_bounded_oscillation, irregular_from_growth, irregular_from_lycc, select_dcc_subsequence,
    SeriesPlan,
};
use linchaos::criteria::{
    compute_mv, compute_mw, lycc_evidence, sdcc_witness_search, series_summability_test, spectral_consistency_check,
    LyccReport, SdccRejection, SdccWitness, SpectralConsistency, Supremum, SummabilityReport, SupremumVerdict,
};
use linchaos::operators::{orbit_with, spectral_radius_estimate, OrbitOptions};
use linchaos::orbitstats::{
    dirregular_test, distributional_pair_test, irregular_test, liyorke_pair_test, scrambled_line_certificate,
    verify_certificate, Certificate, Claim, DetectorOptions, Rejection, Verdict,
};
use linchaos::{OperatorKind, OperatorSpec, SparseVector, WeightSequence};

use crate::config::{
    AnalyzeTask, Budget, CertifyTask, ClaimRequest, Constructor, ExperimentConfig, OutputConfig, Task, VerifyTask,
};
use crate::error::{CliError, Result};
use crate::output::{orbit_csv, write_atomic, write_json, Num};

/// Settings resolved from the config and command line.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub out: PathBuf,
    pub budget: Budget,
    pub output: OutputConfig,
}

impl RunContext {
    pub fn new(cfg: &ExperimentConfig, out: Option<PathBuf>, budget: Option<u64>) -> Self {
        let mut b = cfg.budget;
        if let Some(o) = budget {
            b.orbit = o;
        }
        RunContext {
            out: out.unwrap_or_else(|| cfg.output.dir.clone()),
            budget: b,
            output: cfg.output.clone(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn detector(&self, d: &DetectorOptions) -> DetectorOptions {
        DetectorOptions {
            budget: self.budget.orbit,
            ..*d
        }
    }
}

/// What a successful run produced.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub summary: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn write_json<T: Serialize>(&mut self, ctx: &RunContext, name: &str, value: &T) -> Result<()> {
        let p = ctx.path(name);
        write_json(&p, value)?;
        self.files.push(p);
        Ok(())
    }
}

/// Runs the task; artifacts are written even when the result is a
/// rejection, which is then returned as `CliError::Rejected`.
pub fn run(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Outcome> {
    let op = cfg.operator.as_ref();
    match &cfg.task {
        Task::Analyze(a) => analyze(op.expect("validated"), a, ctx),
        Task::Construct(c) => construct(op, &c.constructor, ctx),
        Task::Certify(c) => certify(op.expect("validated"), c, ctx),
        Task::VerifyCertificate(v) => verify(v, ctx),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SupremumReport {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub witness: Vec<(u64, u64)>,
    pub search_bound: u64,
}

impl From<SupremumVerdict> for SupremumReport {
    fn from(v: SupremumVerdict) -> Self {
        let (kind, value, reason) = match v.value {
            Supremum::Finite { value } => ("finite", Some(value.into()), None),
            Supremum::Infinite => ("infinite", None, None),
            Supremum::Unknown { reason } => ("unknown", None, Some(reason)),
        };
        SupremumReport {
            kind,
            value,
            reason,
            witness: v.witness,
            search_bound: v.search_bound,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub lower: Num,
    pub upper: Num,
    pub closed_form: bool,
    pub norm_bound: Num,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictReport {
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection: Option<Rejection>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedReport {
    pub origin: String,
    pub vector: SparseVector,
    pub initial_norm: Num,
    /// `(n, ‖Tⁿx‖)` at the largest norm over the horizon.
    pub peak: (u64, Num),
    pub irregular: VerdictReport,
    pub dirregular: VerdictReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit_csv: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthSeedReport {
    pub built: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index_set: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verified: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClaimSummary {
    pub accepted: bool,
    /// Certificate files supporting the claim.
    pub certificates: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SdccEntry {
    pub r: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<SdccWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection: Option<SdccRejection>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyzeReport {
    pub task: &'static str,
    pub operator: OperatorSpec,
    pub horizon: u64,
    pub norm: Num,
    pub m_v: SupremumReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_w: Option<SupremumReport>,
    pub spectral_radius: SpectralReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_seed: Option<GrowthSeedReport>,
    pub seeds: Vec<SeedReport>,
    pub liyorke: ClaimSummary,
    pub distributional: ClaimSummary,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sdcc: Vec<SdccEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lycc: Option<LyccReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summability: Option<SummabilityReport>,
    pub spectral_consistency: SpectralConsistency,
}

/// The weights whose products `M_w` ranges over, for shift kinds.
fn shift_weights(t: &OperatorSpec) -> Option<WeightSequence> {
    match t.kind() {
        OperatorKind::BackwardShift => Some(WeightSequence::constant(1.0)),
        OperatorKind::WeightedBackwardShift { w } | OperatorKind::WeightedForwardShift { w } => Some(w.clone()),
        _ => None,
    }
}

/// Only modelling failures are recorded; bad input and budget overruns abort.
fn recordable(e: &linchaos::Error) -> bool {
    use linchaos::Error as E;
    matches!(e, E::Precondition(_) | E::Selection { .. } | E::Violation { .. })
}

fn claim_slug(c: Claim) -> &'static str {
    match c {
        Claim::LiYorkePair => "liyorke-pair",
        Claim::IrregularVector => "irregular",
        Claim::DistributionallyIrregularVector => "dirregular",
        Claim::ScrambledLine => "scrambled-line",
        Claim::DistributionalChaos => "distributional-pair",
    }
}

fn analyze(t: &OperatorSpec, a: &AnalyzeTask, ctx: &RunContext) -> Result<Outcome> {
    let mut out = Outcome::default();
    let budget = ctx.budget.orbit;
    let det = ctx.detector(&a.detector);

    let m_v: SupremumReport = compute_mv(t.space().v(), a.search_bound).into();
    let m_w = shift_weights(t).map(|w| SupremumReport::from(compute_mw(&w, a.search_bound)));
    let s = spectral_radius_estimate(t, a.spectral_n_max)?;

    let mut seeds: Vec<(String, SparseVector)> =
        a.seeds.iter().enumerate().map(|(i, x)| (format!("config[{i}]"), x.clone())).collect();
    let growth_seed = match &a.growth_seed {
        None => None,
        Some(g) => Some(match irregular_from_growth(t, g.count, g.search_limit, &g.rule, a.horizon, budget) {
            Ok(c) => {
                seeds.push(("growth".into(), c.u.clone()));
                GrowthSeedReport {
                    built: true,
                    index_set: Some(c.index_set),
                    verified: Some(c.verified),
                    error: None,
                }
            }
            Err(e) if recordable(&e) => GrowthSeedReport {
                built: false,
                index_set: None,
                verified: None,
                error: Some(e.to_string()),
            },
            Err(e) => return Err(e.into()),
        }),
    };

    let runs: Vec<(Verdict, Verdict, linchaos::operators::Trace)> = seeds
        .par_iter()
        .map(|(_, x)| -> Result<_> {
            let tr = orbit_with(t, x, a.horizon, OrbitOptions { budget })?.trace;
            let irr = irregular_test(t, x, a.horizon, a.low, a.high, &det)?;
            let dirr = dirregular_test(t, x, a.horizon, a.epsilon, &det)?;
            Ok((irr, dirr, tr))
        })
        .collect::<Result<_>>()?;

    let mut certificates = Vec::new();
    let mut seed_reports = Vec::new();
    let (mut ly, mut dc) = (Vec::new(), Vec::new());
    for (i, ((origin, x), (irr, dirr, tr))) in seeds.iter().zip(runs).enumerate() {
        let mut verdict = |v: Verdict, sink: &mut Vec<String>| -> Result<VerdictReport> {
            Ok(match v {
                Ok(c) => {
                    let name = format!("certificate-{i}-{}.json", claim_slug(c.claim));
                    out.write_json(ctx, &name, &c)?;
                    certificates.push(c);
                    sink.push(name.clone());
                    VerdictReport {
                        accepted: true,
                        certificate: Some(name),
                        rejection: None,
                    }
                }
                Err(r) => VerdictReport {
                    accepted: false,
                    certificate: None,
                    rejection: Some(r),
                },
            })
        };
        let irregular = verdict(irr, &mut ly)?;
        let dirregular = verdict(dirr, &mut dc)?;
        let csv = if ctx.output.orbit_csv {
            let name = format!("orbit-{i}.csv");
            let p = ctx.path(&name);
            write_atomic(&p, orbit_csv(&tr, ctx.output.csv_points).as_bytes())?;
            out.files.push(p);
            Some(name)
        } else {
            None
        };
        let (pn, pm) = tr.max_ln(0, a.horizon);
        seed_reports.push(SeedReport {
            origin: origin.clone(),
            vector: x.clone(),
            initial_norm: tr.lognorm(0).into(),
            peak: (pn, linchaos::LogReal::from_ln(pm).into()),
            irregular,
            dirregular,
            orbit_csv: csv,
        });
    }

    let mut sdcc = Vec::new();
    if let Some(p) = &a.sdcc {
        let found: Vec<_> = p
            .r
            .par_iter()
            .map(|&r| sdcc_witness_search(t, r, p.m_max, &p.pool, p.probe_horizon, budget))
            .collect::<linchaos::Result<_>>()?;
        for (&r, f) in p.r.iter().zip(found) {
            let (witness, rejection) = match f {
                Ok(w) => (Some(w), None),
                Err(rej) => (None, Some(rej)),
            };
            sdcc.push(SdccEntry { r, witness, rejection });
        }
    }
    let witnesses: Vec<SdccWitness> = sdcc.iter().filter_map(|e| e.witness.clone()).collect();
    let lycc = match &a.lycc {
        Some(l) => Some(lycc_evidence(t, &l.x0, a.horizon, l.levels, budget)?),
        None => None,
    };
    let summability = match &a.summability {
        Some(s) => Some(series_summability_test(t, &s.indices, s.terms)?),
        None => None,
    };
    let spectral_consistency = spectral_consistency_check(t, &certificates, &witnesses, a.spectral_n_max)?;

    let report = AnalyzeReport {
        task: "analyze",
        operator: t.clone(),
        horizon: a.horizon,
        norm: t.norm()?.into(),
        m_v,
        m_w,
        spectral_radius: SpectralReport {
            lower: s.lower.into(),
            upper: s.upper.into(),
            closed_form: s.closed_form,
            norm_bound: s.norm_bound.into(),
        },
        growth_seed,
        seeds: seed_reports,
        liyorke: ClaimSummary {
            accepted: !ly.is_empty(),
            certificates: ly,
        },
        distributional: ClaimSummary {
            accepted: !dc.is_empty(),
            certificates: dc,
        },
        sdcc,
        lycc,
        summability,
        spectral_consistency,
    };
    out.write_json(ctx, "report.json", &report)?;

    let s = &mut out.summary;
    s.push(format!("M_v: {}", describe_sup(&report.m_v)));
    if let Some(m) = &report.m_w {
        s.push(format!("M_w: {}", describe_sup(m)));
    }
    s.push(format!(
        "r(T) in [{}, {}]",
        report.spectral_radius.lower.log.value(),
        report.spectral_radius.upper.log.value()
    ));
    if let Some(g) = &report.growth_seed {
        match &g.error {
            None => s.push(format!("growth seed built over I = {:?}", g.index_set.as_deref().unwrap_or(&[]))),
            Some(e) => s.push(format!("growth seed not built: {e}")),
        }
    }
    for (i, r) in report.seeds.iter().enumerate() {
        s.push(format!(
            "seed {i} ({}): irregular {}, distributionally irregular {}",
            r.origin,
            word(r.irregular.accepted),
            word(r.dirregular.accepted)
        ));
    }
    s.push(format!("Li-Yorke chaos: {}", word(report.liyorke.accepted)));
    s.push(format!("distributional chaos: {}", word(report.distributional.accepted)));
    for e in &report.sdcc {
        s.push(format!("SDCC r = {}: {}", e.r, word(e.witness.is_some())));
    }
    if let Some(l) = &report.lycc {
        s.push(format!("LYCC (a) {} (b) {}", l.condition_a, l.condition_b));
    }
    s.push(format!("spectral consistency: {}", if report.spectral_consistency.passed { "passed" } else { "FAILED" }));
    Ok(out)
}

fn describe_sup(r: &SupremumReport) -> String {
    match (&r.value, &r.reason) {
        (Some(v), _) => format!("{} = {}", r.kind, v.log.value()),
        (None, Some(why)) => format!("{} ({why})", r.kind),
        _ => r.kind.to_string(),
    }
}

fn word(accepted: bool) -> &'static str {
    if accepted {
        "accepted"
    } else {
        "rejected"
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstructReport {
    pub task: &'static str,
    pub constructor: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSpec>,
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub result: serde_json::Value,
}

/// The witness vector and the series that produced it.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessFile<'a> {
    pub vector: &'a SparseVector,
    pub plan: &'a SeriesPlan,
}

fn value<T: Serialize>(x: &T) -> serde_json::Value {
    serde_json::to_value(x).expect("constructions serialize")
}

fn construct(op: Option<&OperatorSpec>, c: &Constructor, ctx: &RunContext) -> Result<Outcome> {
    let mut out = Outcome::default();
    let budget = ctx.budget.orbit;
    let t = || op.expect("validated");
    let mut operator = op.cloned();
    let mut witness: Option<(SparseVector, SeriesPlan)> = None;
    let (accepted, failure, result) = match c {
        Constructor::BoundedOscillation { x, delta, horizon, k } => {
            let b = irregular_from_bounded_oscillation(t(), x, *delta, *horizon, *k, budget)?;
            witness = Some((b.u.clone(), b.plan.clone()));
            let failure = (!b.verified).then(|| first_failed(&b.plan));
            (b.verified, failure, value(&b))
        }
        Constructor::Lycc { terms, rule, horizon } => {
            let l = irregular_from_lycc(t(), terms, rule, *horizon, budget)?;
            witness = Some((l.u.clone(), l.plan.clone()));
            let failure = (!l.verified).then(|| first_failed(&l.plan));
            (l.verified, failure, value(&l))
        }
        Constructor::LyccGrowth {
            count,
            search_limit,
            rule,
            horizon,
        } => {
            let l = irregular_from_growth(t(), *count, *search_limit, rule, *horizon, budget)?;
            witness = Some((l.u.clone(), l.plan.clone()));
            let failure = (!l.verified).then(|| first_failed(&l.plan));
            (l.verified, failure, value(&l))
        }
        Constructor::Dcc {
            inputs,
            select_subsequence,
            horizon,
            epsilon,
            detector,
        } => {
            let mut inp = inputs.build(t())?;
            let mut selected = None;
            if *select_subsequence {
                let pos = select_dcc_subsequence(t(), &inp, budget)?;
                inp = inp.subsequence(&pos);
                selected = Some(pos);
            }
            let d = dirregular_from_dcc(t(), &inp, *horizon, *epsilon, &ctx.detector(detector))?;
            witness = Some((d.x.clone(), d.plan.clone()));
            let failure = d.verdict.as_ref().err().map(|r| r.to_string());
            let mut v = value(&d);
            if let Some(p) = selected {
                v["selected_positions"] = value(&p);
            }
            (d.accepted(), failure, v)
        }
        Constructor::Manifold {
            dcc,
            dcc_epsilon,
            ys,
            masks,
            m_max,
            options,
        } => {
            let opts = linchaos::constructors::ManifoldOptions {
                detector: ctx.detector(&options.detector),
                ..*options
            };
            let inp = dcc.build(t())?;
            let d = dirregular_from_dcc(t(), &inp, opts.horizon, *dcc_epsilon, &opts.detector)?;
            let x_terms: Vec<SparseVector> = d.plan.terms.iter().map(|s| s.vector.scale(s.coefficient)).collect();
            let m = dense_irregular_manifold(t(), ys, &x_terms, masks, *m_max, &opts)?;
            let failure = m.first_failure().map(|f| {
                format!("combination {:?}: {}", f.coefficients, f.reason.as_deref().unwrap_or("rejected"))
            });
            let v = serde_json::json!({ "series": value(&d.plan), "manifold": value(&m) });
            (m.all_passed, failure, v)
        }
        Constructor::DiForward {
            density_target,
            stages,
            epsilon,
            detector,
        } => {
            let d = design_di_forward_weights(*density_target, *stages)?;
            operator = Some(d.operator()?);
            let v = d.verify(*epsilon, &ctx.detector(detector))?;
            let failure = match (&v, d.insufficient) {
                (_, true) => Some("fewer than two stages: insufficient evidence".to_string()),
                (Err(r), _) => Some(r.to_string()),
                _ => None,
            };
            let r = serde_json::json!({ "design": value(&d), "verdict": value(&v) });
            (failure.is_none(), failure, r)
        }
        Constructor::Existence { m_max } => {
            if *m_max > ctx.budget.max_stage {
                return Err(linchaos::Error::Budget {
                    needed: *m_max as u128,
                    budget: ctx.budget.max_stage,
                }
                .into());
            }
            let e = existence_operator(*m_max)?;
            operator = Some(e.operator.clone());
            let ranges = e.stages.iter().all(|s| s.alpha.all_hold && s.alpha_broad.all_hold);
            let failure = if !ranges {
                let s = e.stages.iter().find(|s| !(s.alpha.all_hold && s.alpha_broad.all_hold)).unwrap();
                Some(format!("norm bound fails at stage m = {}", s.m))
            } else if !e.nondecreasing {
                let f: Vec<f64> = e.stages.iter().map(|s| s.fraction).collect();
                Some(format!("counting fractions not nondecreasing in m: {f:?}"))
            } else {
                None
            };
            (failure.is_none(), failure, value(&e))
        }
    };
    let report = ConstructReport {
        task: "construct",
        constructor: c.name(),
        operator,
        accepted,
        failure: failure.clone(),
        result,
    };
    out.write_json(ctx, "report.json", &report)?;
    if let Some((vector, plan)) = &witness {
        out.write_json(ctx, "witness.json", &WitnessFile { vector, plan })?;
    }
    out.summary.push(format!("{}: {}", c.name(), word(accepted)));
    match failure {
        Some(f) if !accepted => Err(CliError::Rejected(format!("{}: {f}", c.name()))),
        _ => Ok(out),
    }
}

fn first_failed(plan: &SeriesPlan) -> String {
    match plan.targets.iter().find(|c| !c.holds) {
        Some(c) => format!("{} at level {} does not hold", c.label, c.level),
        None => "verification incomplete".into(),
    }
}

fn need(x: Option<f64>, name: &str) -> Result<f64> {
    x.ok_or_else(|| CliError::Schema(format!("claim needs threshold `{name}`")))
}

fn vector(r: &ClaimRequest, i: usize) -> Result<&SparseVector> {
    r.vectors
        .get(i)
        .ok_or_else(|| CliError::Schema(format!("claim {:?} needs at least {} vectors", r.claim, i + 1)))
}

pub fn run_claim(t: &OperatorSpec, r: &ClaimRequest, budget: u64) -> Result<Verdict> {
    let opts = DetectorOptions { budget, ..r.detector };
    let th = &r.thresholds;
    Ok(match r.claim {
        Claim::IrregularVector => {
            irregular_test(t, vector(r, 0)?, r.horizon, need(th.low, "low")?, need(th.high, "high")?, &opts)?
        }
        Claim::LiYorkePair => liyorke_pair_test(t, vector(r, 0)?, vector(r, 1)?, r.horizon, need(th.delta, "delta")?, &opts)?,
        Claim::DistributionallyIrregularVector => {
            dirregular_test(t, vector(r, 0)?, r.horizon, need(th.epsilon, "epsilon")?, &opts)?
        }
        Claim::DistributionalChaos => {
            distributional_pair_test(t, vector(r, 0)?, vector(r, 1)?, r.horizon, need(th.epsilon, "epsilon")?, &opts)?
        }
        Claim::ScrambledLine => {
            scrambled_line_certificate(t, vector(r, 0)?, &th.scalars, r.horizon, need(th.epsilon, "epsilon")?, &opts)?
        }
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClaimResult {
    pub claim: Claim,
    #[serde(flatten)]
    pub verdict: VerdictReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyReport {
    pub task: &'static str,
    pub results: Vec<ClaimResult>,
    pub spectral_consistency: SpectralConsistency,
}

fn certify(t: &OperatorSpec, c: &CertifyTask, ctx: &RunContext) -> Result<Outcome> {
    let mut out = Outcome::default();
    let verdicts: Vec<Verdict> = c.claims.par_iter().map(|r| run_claim(t, r, ctx.budget.orbit)).collect::<Result<_>>()?;
    let mut results = Vec::new();
    let mut certs = Vec::new();
    let mut rejected = Vec::new();
    for (i, (r, v)) in c.claims.iter().zip(verdicts).enumerate() {
        let verdict = match v {
            Ok(cert) => {
                let name = format!("certificate-{i}-{}.json", claim_slug(r.claim));
                out.write_json(ctx, &name, &cert)?;
                certs.push(cert);
                VerdictReport {
                    accepted: true,
                    certificate: Some(name),
                    rejection: None,
                }
            }
            Err(rej) => {
                rejected.push(format!("claim {i}: {rej}"));
                VerdictReport {
                    accepted: false,
                    certificate: None,
                    rejection: Some(rej),
                }
            }
        };
        out.summary.push(format!("claim {i} ({}): {}", claim_slug(r.claim), word(verdict.accepted)));
        results.push(ClaimResult { claim: r.claim, verdict });
    }
    let spectral_consistency = spectral_consistency_check(t, &certs, &[], 64)?;
    out.write_json(
        ctx,
        "report.json",
        &CertifyReport {
            task: "certify",
            results,
            spectral_consistency,
        },
    )?;
    if rejected.is_empty() {
        Ok(out)
    } else {
        Err(CliError::Rejected(rejected.join("\n")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyResult {
    pub path: String,
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<String>,
}

pub fn load_certificate(path: &Path) -> Result<Certificate> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
}

fn verify(v: &VerifyTask, ctx: &RunContext) -> Result<Outcome> {
    let mut out = Outcome::default();
    let results: Vec<VerifyResult> = v
        .certificates
        .par_iter()
        .map(|p| -> Result<VerifyResult> {
            let c = load_certificate(p)?;
            let m = verify_certificate(&c, ctx.budget.orbit)?.err();
            Ok(VerifyResult {
                path: p.display().to_string(),
                verified: m.is_none(),
                mismatch: m.map(|m| m.to_string()),
            })
        })
        .collect::<Result<_>>()?;
    out.write_json(ctx, "report.json", &serde_json::json!({ "task": "verify-certificate", "results": results }))?;
    let mut failed = Vec::new();
    for r in &results {
        match &r.mismatch {
            None => out.summary.push(format!("{}: verified", r.path)),
            Some(m) => failed.push(format!("{}: {m}", r.path)),
        }
    }
    if failed.is_empty() {
        Ok(out)
    } else {
        Err(CliError::Rejected(failed.join("\n")))
    }
}
