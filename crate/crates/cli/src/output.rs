use std::io::Write;
use std::path::Path;

use serde::Serialize;

use linchaos::operators::Trace;
use linchaos::LogReal;

use crate::error::{CliError, Result};

/// A magnitude as its exact log-domain text plus the plain value when that
/// fits in a double.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Num {
    pub log: LogReal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear: Option<f64>,
}

impl From<LogReal> for Num {
    fn from(log: LogReal) -> Self {
        let linear = log.finite_value().filter(|v| log.is_zero() || *v != 0.0);
        Num { log, linear }
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io(dir))?;
    tmp.write_all(bytes).map_err(io(path))?;
    tmp.as_file().sync_all().map_err(io(path))?;
    tmp.persist(path).map_err(|e| CliError::Io {
        path: path.to_owned(),
        source: e.error,
    })?;
    Ok(())
}

/// Pretty JSON with a trailing newline; field order follows the types, so
/// identical inputs give identical bytes.
pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("reports serialize");
    out.push(b'\n');
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &to_json(value))
}

fn ln_text(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

/// `n,lognorm` rows: every index up to `points`, then the breakpoints of the
/// trace (between them the log-norm is convex and needs no sampling).
pub fn orbit_csv(tr: &Trace, points: u64) -> String {
    let mut out = String::from("n,lognorm\n");
    let h = tr.horizon();
    let dense = points.min(h.saturating_add(1));
    for n in 0..dense {
        out.push_str(&format!("{n},{}\n", ln_text(tr.ln_at(n))));
    }
    let mut rows: Vec<u64> = tr
        .pieces()
        .iter()
        .flat_map(|p| [p.start(), p.end().saturating_sub(1)])
        .filter(|&n| n >= dense && n <= h)
        .collect();
    rows.push(h);
    rows.sort_unstable();
    rows.dedup();
    for n in rows.into_iter().filter(|&n| n >= dense) {
        out.push_str(&format!("{n},{}\n", ln_text(tr.ln_at(n))));
    }
    out
}
