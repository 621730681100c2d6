//! Snapshot dumps: `#` header, then `x u rho w z` per node.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Field, Grid};

/// Render one snapshot. `w` and `z` are the perturbations of `ρ` and `u`.
pub fn format_snapshot(grid: &Grid, t: f64, u: &Field, rho: &Field, w: &Field, z: &Field) -> Result<String> {
    for f in [u, rho, w, z] {
        f.check_aligned(grid)?;
    }
    let mut s = String::with_capacity(grid.n() * 120);
    let _ = writeln!(s, "# t = {t:.17e}");
    let _ = writeln!(s, "# columns: x u rho w z (w = rho - rho_ref, z = u - u_ref)");
    for i in 0..grid.n() {
        let _ = writeln!(
            s,
            "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e}",
            grid.node(i),
            u[i],
            rho[i],
            w[i],
            z[i]
        );
    }
    Ok(s)
}

pub fn write_snapshot(
    path: &Path,
    grid: &Grid,
    t: f64,
    u: &Field,
    rho: &Field,
    w: &Field,
    z: &Field,
) -> Result<()> {
    std::fs::write(path, format_snapshot(grid, t, u, rho, w, z)?)?;
    Ok(())
}

/// Columns of a snapshot dump read back from text.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotDump {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
}

pub fn parse_snapshot(text: &str) -> Result<SnapshotDump> {
    let mut t = None;
    let mut cols: [Vec<f64>; 5] = Default::default();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("t =") {
                t = Some(v.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: e.to_string(),
                })?);
            }
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: idx + 1,
                msg: e.to_string(),
            })?;
        if vals.len() != 5 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected 5 columns, found {}", vals.len()),
            });
        }
        for (c, v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    let t = t.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "missing `# t = ...` header".into(),
    })?;
    let [x, u, rho, w, z] = cols;
    Ok(SnapshotDump { t, x, u, rho, w, z })
}
