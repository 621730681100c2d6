//! Columnar text export of profiles: a `#` header with the model parameters,
//! domain and anchor, then one `ξ φ φ'` line per sample.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Grid, ModelParams};
use crate::profile::{Anchor, Profile, ProfileDomain};

const MAGIC: &str = "# diffwave profile v1";

/// Render a profile in the text format read by [`parse_profile`].
pub fn format_profile(p: &Profile) -> String {
    let mut s = String::new();
    let m = &p.params;
    let _ = writeln!(s, "{MAGIC}");
    for (k, v) in [
        ("a", m.a),
        ("b", m.b),
        ("lambda", m.lambda),
        ("mu", m.mu),
        ("kappa", m.kappa),
        ("u_minus", m.u_minus),
        ("u_plus", m.u_plus),
    ] {
        let _ = writeln!(s, "# {k} = {v:.17e}");
    }
    match p.domain {
        ProfileDomain::Full => {
            let _ = writeln!(s, "# domain = full");
        }
        ProfileDomain::HalfLine { beta } => {
            let _ = writeln!(s, "# domain = half_line");
            let _ = writeln!(s, "# beta = {beta:.17e}");
        }
    }
    let _ = writeln!(s, "# xi0 = {:.17e}", p.anchor.xi0);
    let _ = writeln!(s, "# phi0 = {:.17e}", p.anchor.phi0);
    let _ = writeln!(s, "# slope0 = {:.17e}", p.anchor.slope0);
    let _ = writeln!(s, "# xi_start = {:.17e}", p.xi_grid.x0());
    let _ = writeln!(s, "# dxi = {:.17e}", p.xi_grid.dx());
    let _ = writeln!(s, "# n = {}", p.xi_grid.n());
    let _ = writeln!(s, "# columns: xi phi dphi");
    for i in 0..p.xi_grid.n() {
        let _ = writeln!(
            s,
            "{:.17e} {:.17e} {:.17e}",
            p.xi_grid.node(i),
            p.phi[i],
            p.dphi[i]
        );
    }
    s
}

pub fn write_profile(p: &Profile, path: &Path) -> Result<()> {
    std::fs::write(path, format_profile(p))?;
    Ok(())
}

pub fn read_profile(path: &Path) -> Result<Profile> {
    parse_profile(&std::fs::read_to_string(path)?)
}

/// Parse the format written by [`format_profile`]. The samples are taken
/// as stored; nothing is re-integrated.
pub fn parse_profile(text: &str) -> Result<Profile> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected `{MAGIC}`"),
            })
        }
    }
    let mut header = std::collections::HashMap::new();
    let mut rows: Vec<[f64; 3]> = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                header.insert(k.trim().to_string(), (line_no, v.trim().to_string()));
            }
            continue;
        }
        let mut row = [0.0; 3];
        let mut it = line.split_whitespace();
        for slot in row.iter_mut() {
            let tok = it.next().ok_or_else(|| Error::Parse {
                line: line_no,
                msg: "expected three columns".into(),
            })?;
            *slot = tok.parse().map_err(|e| Error::Parse {
                line: line_no,
                msg: format!("bad number `{tok}`: {e}"),
            })?;
        }
        if it.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                msg: "expected three columns".into(),
            });
        }
        rows.push(row);
    }

    let num = |key: &str| -> Result<f64> {
        let (line, v) = header.get(key).ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("missing header field `{key}`"),
        })?;
        v.parse().map_err(|e| Error::Parse {
            line: *line,
            msg: format!("bad value for `{key}`: {e}"),
        })
    };
    let params = ModelParams::new(
        num("a")?,
        num("b")?,
        num("lambda")?,
        num("mu")?,
        num("kappa")?,
        num("u_minus")?,
        num("u_plus")?,
    )?;
    let domain = match header.get("domain").map(|(_, v)| v.as_str()) {
        Some("full") => ProfileDomain::Full,
        Some("half_line") => ProfileDomain::HalfLine { beta: num("beta")? },
        other => {
            return Err(Error::Parse {
                line: 0,
                msg: format!("unknown domain {other:?}"),
            })
        }
    };
    let anchor = Anchor {
        xi0: num("xi0")?,
        phi0: num("phi0")?,
        slope0: num("slope0")?,
    };
    let n = num("n")? as usize;
    if rows.len() != n {
        return Err(Error::Parse {
            line: 0,
            msg: format!("header declares {n} samples, found {}", rows.len()),
        });
    }
    let grid = Grid::with_spacing(num("xi_start")?, num("dxi")?, n)?;
    for (i, r) in rows.iter().enumerate() {
        if (r[0] - grid.node(i)).abs() > 1e-9 * grid.dx().max(r[0].abs()) {
            return Err(Error::Parse {
                line: 0,
                msg: format!("sample {i} at xi = {} is off the uniform grid", r[0]),
            });
        }
    }
    let phi = rows.iter().map(|r| r[1]).collect();
    let dphi = rows.iter().map(|r| r[2]).collect();
    Profile::from_parts(params, grid, phi, dphi, anchor, domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{solve_profile_cauchy, solve_profile_halfline};

    #[test]
    fn round_trip_is_exact() {
        let p = ModelParams::new(1.0, 2.0, 1.0, 1.5, 0.8, -0.04, 0.06).unwrap();
        let prof = solve_profile_cauchy(&p, 1e-8).unwrap();
        let back = parse_profile(&format_profile(&prof)).unwrap();
        assert_eq!(back, prof);

        let half = solve_profile_halfline(&p, 0.0, 1e-8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("half.txt");
        write_profile(&half, &path).unwrap();
        assert_eq!(read_profile(&path).unwrap(), half);
    }

    #[test]
    fn malformed_input_reports_line() {
        let p = ModelParams::default();
        let text = format_profile(&solve_profile_cauchy(&p, 1e-6).unwrap());
        let broken = text.replacen("\n0", "\nzz", 1).replacen("\n-", "\n-x", 1);
        assert!(matches!(parse_profile(&broken), Err(Error::Parse { .. })));
        assert!(parse_profile("hello").is_err());
        let short: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(parse_profile(&short).is_err());
    }
}
