//! Density statistics and chaos detectors over orbit traces, with
//! certificates that re-verify from their witnesses.

mod certificate;
mod detectors;
mod index_set;

pub use certificate::{
    recompute, verify_certificate, Certificate, Claim, DetectorOptions, EnvelopePoint, Evidence, Mismatch, PairCheck,
    Rejection, Side, Thresholds, Verdict, Witnesses,
};
pub use detectors::{
    dirregular_test, distributional_pair_test, irregular_test, liyorke_pair_test, scrambled_line_certificate,
    scrambled_line_check,
};
pub use index_set::{density, density_exact, DensityReport, IndexSet};

use crate::error::{Error, Result};
use crate::operators::{orbit_with, Cmp, OperatorSpec, OrbitOptions};
use crate::seqspace::SparseVector;

/// `Fⁿ_{xy}(τ) = (1/n)·card{0 ≤ i < n : ‖Tⁱx - Tⁱy‖ < τ}`.
pub fn distributional_function(t: &OperatorSpec, x: &SparseVector, y: &SparseVector, n: u64, tau: f64) -> Result<f64> {
    distributional_function_with(t, x, y, n, tau, OrbitOptions::default())
}

pub fn distributional_function_with(
    t: &OperatorSpec,
    x: &SparseVector,
    y: &SparseVector,
    n: u64,
    tau: f64,
    opts: OrbitOptions,
) -> Result<f64> {
    if n == 0 || !(tau > 0.0) {
        return Err(Error::invalid("need n ≥ 1 and τ > 0"));
    }
    let tr = orbit_with(t, &x.sub(y), n - 1, opts)?.trace;
    Ok(tr.count(Cmp::below(tau.ln()), 0, n - 1) as f64 / n as f64)
}
