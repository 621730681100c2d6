//! Columnar data files and structured reports.

use std::fmt::Write as _;
use std::path::Path;

use diffwave::analysis::{BoundaryReport, EnergyLedger};
use serde::Serialize;

use crate::config::ReportFormat;
use crate::error::CliError;

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Serialize `value` as `<stem>.json` or `<stem>.toml` in `dir`.
pub fn write_report<T: Serialize>(dir: &Path, stem: &str, format: ReportFormat, value: &T) -> Result<(), CliError> {
    let text = match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))? + "\n"
        }
        ReportFormat::Toml => toml::to_string(value).map_err(|e| CliError::Runtime(e.to_string()))?,
    };
    write_text(&dir.join(format!("{stem}.{}", format.extension())), &text)
}

pub fn boundary_columns(report: &BoundaryReport) -> String {
    let mut s = String::new();
    match report {
        BoundaryReport::Dirichlet(rows) => {
            let _ = writeln!(s, "# t w(0) z(0) (1+t)|w_xx(0)|");
            let _ = writeln!(s, "# all quantities nondimensional");
            for r in rows {
                let _ = writeln!(s, "{:.10e} {:.10e} {:.10e} {:.10e}", r.t, r.w0, r.z0, r.w_xx_scaled);
            }
        }
        BoundaryReport::Neumann(rows) => {
            let _ = writeln!(s, "# t w_x(0) z_x(0) w_xxx(0)");
            let _ = writeln!(s, "# all quantities nondimensional");
            for r in rows {
                let _ = writeln!(s, "{:.10e} {:.10e} {:.10e} {:.10e}", r.t, r.w_x, r.z_x, r.w_xxx);
            }
        }
    }
    s
}

pub fn energy_columns(ledger: &EnergyLedger) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# t E E_x w_x2 z_x2 good2 w_xx2 z_xx2 good_x2 boundary"
    );
    let _ = writeln!(
        s,
        "# E = int(lambda w^2/2 + K z^2/2 - mu w z), K = {:.10e}; *2 are squared L2 norms",
        ledger.k
    );
    for i in 0..ledger.times.len() {
        let d = &ledger.dissipation[i];
        let _ = writeln!(
            s,
            "{:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e}",
            ledger.times[i],
            ledger.quadratic[i],
            ledger.quadratic_x[i],
            d.w_x2,
            d.z_x2,
            d.good2,
            d.w_xx2,
            d.z_xx2,
            d.good_x2,
            d.boundary
        );
    }
    s
}
