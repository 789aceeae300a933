//! Run archives: config echo, report.json, summary.csv and per-eps fields.

use std::fs;
use std::path::{Path, PathBuf};

use fhl::diagnostics::{
    boundary_bounds, eps_bound_check, mu_power_check, pohozaev_balance, rate_law_bn, rate_law_subcritical,
    BoundaryBounds, PohozaevBalance, RateLaw, SequenceCheck,
};
use fhl::spectral::RobinValue;
use fhl::{ContinuationReport, GridField, Regime, RieszWeights};
use serde::{Deserialize, Serialize};

use crate::fmt::{csv_row, g12};
use crate::CliError;

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_FILE: &str = "config.cfg";
pub const SUMMARY_HEADER: &str = "eps,mu_eps,mu_eps_pow_eps,x_eps,profile_dist,rate_lhs,boundary_sup,interior_L1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticError {
    pub diagnostic: String,
    pub error: String,
    pub message: String,
}

/// Every diagnostic that can be evaluated from a report; the ones that fail
/// are listed in `errors` instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mu_power: Option<SequenceCheck<f64>>,
    pub eps_bound: Option<SequenceCheck<f64>>,
    pub rate_law: Option<RateLaw<f64>>,
    pub boundary: Option<BoundaryBounds<f64>>,
    /// One balance per record, strip radius as in the report.
    pub pohozaev: Option<Vec<PohozaevBalance<f64>>>,
    pub errors: Vec<DiagnosticError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    /// Canonical text of the config that produced the run.
    pub config: String,
    pub report: ContinuationReport,
    pub robin_at_x0: Option<RobinValue<f64>>,
    pub diagnostics: Diagnostics,
    pub wall_time_s: f64,
}

fn keep<V>(name: &str, r: fhl::Result<V>, errors: &mut Vec<DiagnosticError>) -> Option<V> {
    r.map_err(|e| {
        errors.push(DiagnosticError { diagnostic: name.into(), error: e.kind().into(), message: e.to_string() })
    })
    .ok()
}

pub fn diagnose(report: &ContinuationReport, robin: Option<&RobinValue<f64>>, weights: &RieszWeights) -> Diagnostics {
    let mut errors = Vec::new();
    let phi = robin.map(|r| r.value);
    let mu_power = keep("mu_power", mu_power_check(report), &mut errors);
    let eps_bound = keep("eps_bound", eps_bound_check(report), &mut errors);
    let rate = match report.params.regime {
        Regime::BrezisNirenberg => rate_law_bn(report, phi),
        _ => rate_law_subcritical(report, phi),
    };
    let rate_law = keep("rate_law", rate, &mut errors);
    let boundary = keep("boundary", boundary_bounds(report, report.strip_radius), &mut errors);
    let balances = report
        .records
        .iter()
        .map(|rec| {
            let u = GridField { domain: report.domain, values: rec.values.clone() };
            pohozaev_balance(&u, &rec.params, rec.params.nonlinear_power(), weights, report.strip_radius)
        })
        .collect::<fhl::Result<Vec<_>>>();
    let pohozaev = keep("pohozaev", balances, &mut errors);
    Diagnostics { mu_power, eps_bound, rate_law, boundary, pohozaev, errors }
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| io(path, e))
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io(path, e))
}

/// `x[,y],u` samples of a grid field.
pub fn field_csv(u: &GridField) -> String {
    let dim = u.domain.dim();
    let mut out = String::from(if dim == 1 { "x,u\n" } else { "x,y,u\n" });
    for (i, v) in u.values.iter().enumerate() {
        let x = u.domain.node(i);
        let mut row = x[..dim].to_vec();
        row.push(*v);
        out.push_str(&csv_row(&row));
        out.push('\n');
    }
    out
}

pub fn summary_csv(report: &ContinuationReport) -> String {
    let dim = report.domain.dim();
    let mut out = format!("{SUMMARY_HEADER}\n");
    for d in &report.derived {
        let x = d.x_eps[..dim].iter().map(|v| g12(*v)).collect::<Vec<_>>().join(" ");
        let profile = d.profile_distance.map(g12).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            g12(d.eps),
            g12(d.mu_eps),
            g12(d.mu_eps_pow_eps),
            x,
            profile,
            g12(d.rate_lhs),
            g12(d.boundary_sup),
            g12(d.interior_l1)
        ));
    }
    out
}

pub struct RunArchive {
    pub root: PathBuf,
}

impl RunArchive {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunArchive { root: root.into() }
    }

    pub fn report_path(&self) -> PathBuf {
        self.root.join(REPORT_FILE)
    }

    pub fn field_path(&self, index: usize) -> PathBuf {
        self.root.join("fields").join(format!("u_{index:03}.csv"))
    }

    /// `FHL_CACHE_DIR` when set, otherwise `cache/` inside the archive.
    pub fn cache_dir(&self) -> PathBuf {
        match std::env::var_os("FHL_CACHE_DIR") {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.root.join("cache"),
        }
    }

    pub fn save(&self, file: &ReportFile) -> Result<(), CliError> {
        write(&self.root.join(CONFIG_FILE), &file.config)?;
        let json = serde_json::to_string_pretty(file).map_err(|e| CliError::Io(e.to_string()))?;
        write(&self.report_path(), &json)?;
        write(&self.root.join(SUMMARY_FILE), &summary_csv(&file.report))?;
        for (i, rec) in file.report.records.iter().enumerate() {
            let u = GridField { domain: file.report.domain, values: rec.values.clone() };
            write(&self.field_path(i), &field_csv(&u))?;
        }
        Ok(())
    }
}

/// Accepts either a report.json path or an archive directory.
pub fn load_report(path: &Path) -> Result<ReportFile, CliError> {
    let file = if path.is_dir() { path.join(REPORT_FILE) } else { path.to_path_buf() };
    let text = read(&file)?;
    serde_json::from_str(&text).map_err(|e| CliError::TypeError(format!("{}: {e}", file.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use fhl::domain::DomainSpec;

    #[test]
    fn field_csv_layout() {
        let d = DomainSpec::<f64>::interval(0.0, 1.0, 16).unwrap();
        let u = GridField::from_fn(d, |x| x[0] * (1.0 - x[0]));
        let csv = field_csv(&u);
        assert!(csv.starts_with("x,u\n0,0\n0.0625,0.05859375\n"), "{csv}");
        assert_eq!(csv.lines().count(), 18);
        let d = DomainSpec::<f64>::rectangle(0.0, 1.0, 0.0, 2.0, 16).unwrap();
        let csv = field_csv(&GridField::zeros(d));
        assert_eq!(csv.lines().next(), Some("x,y,u"));
        assert_eq!(csv.lines().count(), 1 + 17 * 17);
    }

    #[test]
    fn empty_report_summary_is_header_only() {
        let d = DomainSpec::<f64>::interval(0.0, 1.0, 64).unwrap();
        let p = fhl::Params::new(1, 0.3, 0.4, 0.1, Regime::SubcriticalHartree).unwrap();
        let r = fhl::diagnostics::assemble(p, d, 8, 0.1, vec![]).unwrap();
        assert_eq!(summary_csv(&r), format!("{SUMMARY_HEADER}\n"));
    }
}
