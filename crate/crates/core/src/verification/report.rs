use std::fmt::Write as _;

use crate::error::{HazardError, Result};
use crate::verification::MartingaleReport;

/// CSV with a commented header line carrying the report metadata, then
/// `t,mean,se,z,pass` (orthogonality reports add `s` and `bucket` in front).
pub fn report_csv(report: &MartingaleReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# format_version={},label={},z_max={},threshold={},n_paths={},pass={},inconclusive={},skipped_mass={}",
        report.format_version,
        report.label,
        report.z_max,
        report.threshold,
        report.n_paths,
        report.pass,
        report.inconclusive,
        report.skipped_mass
    );
    for n in &report.notices {
        let _ = writeln!(out, "# notice: {n}");
    }
    let bucketed = report.rows.iter().any(|r| r.bucket.is_some());
    if bucketed {
        out.push_str("s,bucket,t,mean,se,z,pass\n");
    } else {
        out.push_str("t,mean,se,z,pass\n");
    }
    for r in &report.rows {
        if bucketed {
            let _ = write!(
                out,
                "{},\"{}\",",
                r.s.map_or(String::new(), |s| s.to_string()),
                r.bucket.as_deref().unwrap_or("")
            );
        }
        let _ = writeln!(out, "{},{},{},{},{}", r.t, r.mean, r.se, r.z, r.pass);
    }
    out
}

pub fn report_json(report: &MartingaleReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| HazardError::Io(e.to_string()))
}
