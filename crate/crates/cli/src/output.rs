//! CSV and report files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use twophoton::ScanResult;

use crate::error::CliError;
use crate::settings::Resolved;

pub const SCAN_COLUMNS: &str = "x,rate,counts,stderr";
pub const SWEEP_COLUMNS: &str = "parameter,visibility,stderr,status";

/// One row of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub parameter: f64,
    pub visibility: f64,
    pub stderr: f64,
    pub expected: f64,
    /// `None` on success, the failure otherwise.
    pub failure: Option<String>,
}

fn header(r: &Resolved, extra: &[(&str, String)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# twophoton {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# scenario: {}", r.scenario.name());
    let _ = writeln!(s, "# seed: {}", r.seed());
    let _ = writeln!(s, "# trials: {}", r.trials());
    let _ = writeln!(s, "# config_sha256: {}", r.hash());
    for (k, v) in extra {
        let _ = writeln!(s, "# {k}: {v}");
    }
    s
}

pub fn scan_csv(r: &Resolved, scan: &ScanResult) -> String {
    let mut s = header(r, &[("x", scan.x_label.clone())]);
    s.push_str(SCAN_COLUMNS);
    s.push('\n');
    for p in &scan.points {
        let _ = writeln!(s, "{},{},{},{}", p.x, p.rate, p.counts, p.stderr);
    }
    s
}

pub fn sweep_csv(r: &Resolved, parameter: &str, rows: &[SweepRow]) -> String {
    let mut s = header(r, &[("parameter", parameter.to_string())]);
    s.push_str(SWEEP_COLUMNS);
    s.push('\n');
    for row in rows {
        let status = match &row.failure {
            None => "ok".to_string(),
            Some(m) => format!("\"{}\"", m.replace('"', "'")),
        };
        let _ = writeln!(s, "{},{},{},{status}", row.parameter, row.visibility, row.stderr);
    }
    s
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}
