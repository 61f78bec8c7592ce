//! JSON reports, long-format CSV tables and the console summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sdde_core::probes::{ProbeReport, VerdictKind};

use crate::error::RunError;

/// Bumped whenever the report layout changes incompatibly.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a> {
    schema_version: u32,
    #[serde(flatten)]
    report: &'a ProbeReport,
}

pub fn report_json(report: &ProbeReport) -> String {
    let mut s = serde_json::to_string_pretty(&Envelope { schema_version: SCHEMA_VERSION, report })
        .expect("reports serialize");
    s.push('\n');
    s
}

/// Header row plus one line per trial row; values use the shortest
/// representation that round-trips.
pub fn trials_csv(report: &ProbeReport) -> String {
    let mut s = report.trials.columns.join(",");
    s.push('\n');
    for row in &report.trials.rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write!(s, "{v}").unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn write_report(dir: &Path, report: &ProbeReport) -> Result<(PathBuf, PathBuf), RunError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Output { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let json = dir.join(format!("{}_report.json", report.probe));
    let csv = dir.join(format!("{}_trials.csv", report.probe));
    std::fs::write(&json, report_json(report)).map_err(io(&json))?;
    std::fs::write(&csv, trials_csv(report)).map_err(io(&csv))?;
    Ok((json, csv))
}

/// Fixed-width table with one line per verdict.
pub fn summary(reports: &[ProbeReport]) -> String {
    let mut s = String::new();
    writeln!(s, "{:<16} {:<44} {:<9} result", "probe", "verdict", "kind").unwrap();
    for rep in reports {
        for v in &rep.verdicts {
            let kind = match v.kind {
                VerdictKind::Required => "required",
                VerdictKind::Observed => "observed",
            };
            let result = if v.pass { "pass" } else { "FAIL" };
            writeln!(s, "{:<16} {:<44} {:<9} {result}", rep.probe, v.name, kind).unwrap();
        }
        for n in &rep.notes {
            writeln!(s, "{:<16} note: {n}", rep.probe).unwrap();
        }
    }
    s
}
