use crate::analysis::series::perturbation;
use crate::error::{Error, Result};
use crate::model::State;
use crate::solver::{ProblemKind, RunResult};
use crate::stencil::{dx1_slice, dx2_slice};

/// Dirichlet boundary data at one snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletRow {
    pub t: f64,
    pub w0: f64,
    pub z0: f64,
    /// `|w_xx(0,t)|·(1+t)`.
    pub w_xx_scaled: f64,
}

/// Neumann boundary data at one snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannRow {
    pub t: f64,
    pub w_x: f64,
    pub z_x: f64,
    pub w_xxx: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryReport {
    Dirichlet(Vec<DirichletRow>),
    Neumann(Vec<NeumannRow>),
}

impl BoundaryReport {
    /// Largest `|w(0,t)|`, `|z(0,t)|` (Dirichlet) or `|w_x(0,t)|`,
    /// `|z_x(0,t)|` (Neumann) over the run.
    pub fn max_boundary_value(&self) -> f64 {
        match self {
            BoundaryReport::Dirichlet(rows) => rows.iter().fold(0.0, |m, r| m.max(r.w0.abs()).max(r.z0.abs())),
            BoundaryReport::Neumann(rows) => rows.iter().fold(0.0, |m, r| m.max(r.w_x.abs()).max(r.z_x.abs())),
        }
    }

    /// `max_t |w_xx(0,t)|·(1+t)` for the Dirichlet kind.
    pub fn max_w_xx_scaled(&self) -> Option<f64> {
        match self {
            BoundaryReport::Dirichlet(rows) => Some(rows.iter().fold(0.0, |m, r| m.max(r.w_xx_scaled))),
            BoundaryReport::Neumann(_) => None,
        }
    }

    /// Running maximum `M(t) = max_{τ ≤ t} |w_xx(0,τ)|·(1+τ)` per snapshot.
    pub fn running_max_w_xx_scaled(&self) -> Option<Vec<f64>> {
        let BoundaryReport::Dirichlet(rows) = self else {
            return None;
        };
        let mut m = 0.0f64;
        Some(
            rows.iter()
                .map(|r| {
                    m = m.max(r.w_xx_scaled);
                    m
                })
                .collect(),
        )
    }

    /// Whether the running maximum `M(t)` is finite and does not increase
    /// over the snapshots with `t ≥ t_final/2`.
    pub fn running_max_settled_in_final_half(&self) -> Option<bool> {
        let BoundaryReport::Dirichlet(rows) = self else {
            return None;
        };
        let t_end = rows.last()?.t;
        let m = self.running_max_w_xx_scaled()?;
        let start = rows.iter().position(|r| r.t >= 0.5 * t_end)?;
        Some(m[m.len() - 1].is_finite() && m[m.len() - 1] <= m[start])
    }

    /// Whether `|w_xx(0,t)|·(1+t)` never rises by more than `rel_tol`
    /// (relative to the running value) over the snapshots with
    /// `t ≥ t_final/2`.
    pub fn scaled_non_increasing_in_final_half(&self, rel_tol: f64) -> Option<bool> {
        let BoundaryReport::Dirichlet(rows) = self else {
            return None;
        };
        let t_end = rows.last()?.t;
        let tail: Vec<f64> = rows
            .iter()
            .filter(|r| r.t >= 0.5 * t_end)
            .map(|r| r.w_xx_scaled)
            .collect();
        Some(tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + rel_tol)))
    }
}

/// Second-order one-sided third derivative at the first node.
fn dx3_left(v: &[f64], dx: f64) -> f64 {
    let b = v[0];
    (18.0 * (v[1] - b) - 24.0 * (v[2] - b) + 14.0 * (v[3] - b) - 3.0 * (v[4] - b)) / (2.0 * dx * dx * dx)
}

/// Boundary diagnostics at `x = 0` for the half-line kinds.
pub fn boundary_report(run: &RunResult, kind: &ProblemKind) -> Result<BoundaryReport> {
    if !kind.is_half_line() {
        return Err(Error::InvalidConfig(
            "boundary report applies to the half-line kinds only".into(),
        ));
    }
    if run.grid.n() < 5 {
        return Err(Error::InvalidGrid("boundary report needs at least 5 nodes".into()));
    }
    let dx = run.grid.dx();
    let dirichlet = matches!(kind, ProblemKind::Dirichlet { .. });
    let mut d_rows = Vec::new();
    let mut n_rows = Vec::new();
    for s in &run.snapshots {
        let st = State::new(run.grid, s.u.clone(), s.rho.clone(), s.t)?;
        let (w, z) = perturbation(&st, &run.params, kind)?;
        let (w, z) = (w.values(), z.values());
        if dirichlet {
            d_rows.push(DirichletRow {
                t: s.t,
                w0: w[0],
                z0: z[0],
                w_xx_scaled: dx2_slice(&w[..4.min(w.len())], dx)[0].abs() * (1.0 + s.t),
            });
        } else {
            n_rows.push(NeumannRow {
                t: s.t,
                w_x: dx1_slice(&w[..3], dx)[0],
                z_x: dx1_slice(&z[..3], dx)[0],
                w_xxx: dx3_left(w, dx),
            });
        }
    }
    Ok(if dirichlet {
        BoundaryReport::Dirichlet(d_rows)
    } else {
        BoundaryReport::Neumann(n_rows)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn third_derivative_stencil() {
        let dx = 0.01;
        let cubic: Vec<f64> = (0..5).map(|i| (i as f64 * dx + 0.3).powi(3)).collect();
        assert!((dx3_left(&cubic, dx) - 6.0).abs() < 1e-6);
        let quad: Vec<f64> = (0..5).map(|i| (i as f64 * dx).powi(2) + 1.0).collect();
        assert!(dx3_left(&quad, dx).abs() < 1e-6);
        let err = |h: f64| {
            let v: Vec<f64> = (0..5).map(|i| (i as f64 * h).sin()).collect();
            (dx3_left(&v, h) + 1.0).abs()
        };
        assert!((err(0.02) / err(0.01)).log2() > 1.8);
    }

    #[test]
    fn tolerance_on_monotone_tail() {
        let rows = |v: &[f64]| {
            BoundaryReport::Dirichlet(
                v.iter()
                    .enumerate()
                    .map(|(i, x)| DirichletRow {
                        t: i as f64,
                        w0: 0.0,
                        z0: 0.0,
                        w_xx_scaled: *x,
                    })
                    .collect(),
            )
        };
        let r = rows(&[5.0, 4.0, 3.0, 2.0, 2.0, 1.99]);
        assert_eq!(r.scaled_non_increasing_in_final_half(0.0), Some(true));
        let r = rows(&[5.0, 4.0, 3.0, 2.0, 2.01, 1.99]);
        assert_eq!(r.scaled_non_increasing_in_final_half(0.0), Some(false));
        assert_eq!(r.scaled_non_increasing_in_final_half(0.01), Some(true));
        assert_eq!(r.max_w_xx_scaled(), Some(5.0));
        assert_eq!(r.running_max_settled_in_final_half(), Some(true));
        let rising = rows(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(rising.running_max_settled_in_final_half(), Some(false));
        assert_eq!(rising.running_max_w_xx_scaled().unwrap()[5], 6.0);
    }
}
