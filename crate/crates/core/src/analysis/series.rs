use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{Field, ModelParams, State};
use crate::solver::{ProblemKind, RunResult};
use crate::stencil::{dx1_slice, dx2_slice, l2_slice};

/// `(w, z) = (ρ - ρ̄, u - ū)` at the state's time; for the Neumann kind the
/// reference is the constant state `(u+, μu+/λ)`.
pub fn perturbation(state: &State, params: &ModelParams, kind: &ProblemKind) -> Result<(Field, Field)> {
    state.u.check_aligned(&state.grid)?;
    state.rho.check_aligned(&state.grid)?;
    let (u_ref, rho_ref) = kind.reference(params, &state.grid, state.t)?;
    Ok((state.rho.minus(&rho_ref)?, state.u.minus(&u_ref)?))
}

/// Norms of the perturbation at one snapshot. Index `k` of `w` and `z`
/// holds `‖∂_x^k ·‖`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormRow {
    pub w: [f64; 3],
    pub z: [f64; 3],
    pub w_t: f64,
    pub z_t: f64,
    /// `‖λw - μz‖`.
    pub good: f64,
    /// `‖∂_x(λw - μz)‖`.
    pub good_x: f64,
    /// `‖λw_t - μz_t‖`.
    pub good_t: f64,
    /// `Σ_k (1+t)^k (‖∂_x^k w‖² + ‖∂_x^k z‖²)`.
    pub functional: f64,
}

/// Running time integrals from the first snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cumulative {
    /// `∫ ‖w_x‖²`.
    pub w_x: f64,
    /// `∫ ‖z_x‖²`.
    pub z_x: f64,
    /// `∫ ‖λw - μz‖²`.
    pub good: f64,
    /// `∫ (1+τ) ‖w_xx‖²`.
    pub w_xx_weighted: f64,
    /// `∫ (1+τ) ‖z_xx‖²`.
    pub z_xx_weighted: f64,
    /// `∫ (1+τ) ‖∂_x(λw - μz)‖²`.
    pub good_x_weighted: f64,
    /// `∫ (1+τ)² ‖λw_t - μz_t‖²`.
    pub good_t_weighted: f64,
}

impl Cumulative {
    /// `∫ (‖w_x‖² + ‖z_x‖² + ‖λw - μz‖²)`.
    pub fn dissipation(&self) -> f64 {
        self.w_x + self.z_x + self.good
    }
}

/// Perturbation norms over the snapshots of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbSeries {
    pub times: Vec<f64>,
    pub norms: Vec<NormRow>,
    pub cumulative: Vec<Cumulative>,
    /// Running maximum `N(t)` of [`NormRow::functional`].
    pub n_running: Vec<f64>,
}

impl PerturbSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// A column of the norm table selected by `f`.
    pub fn column(&self, f: impl Fn(&NormRow) -> f64) -> Vec<f64> {
        self.norms.iter().map(f).collect()
    }

    pub fn n_final(&self) -> f64 {
        self.n_running.last().copied().unwrap_or(0.0)
    }

    /// Columnar text with a `#` header.
    pub fn to_columns(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# t w w_x w_xx z z_x z_xx w_t z_t good good_x good_t functional n_running \
             cum_w_x cum_z_x cum_good cum_dissipation"
        );
        let _ = writeln!(s, "# norms are L2 over the grid; good = lambda*w - mu*z; cum_* are time integrals of squares");
        for i in 0..self.len() {
            let r = &self.norms[i];
            let c = &self.cumulative[i];
            let _ = writeln!(
                s,
                "{:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e}",
                self.times[i],
                r.w[0],
                r.w[1],
                r.w[2],
                r.z[0],
                r.z[1],
                r.z[2],
                r.w_t,
                r.z_t,
                r.good,
                r.good_x,
                r.good_t,
                r.functional,
                self.n_running[i],
                c.w_x,
                c.z_x,
                c.good,
                c.dissipation()
            );
        }
        s
    }
}

/// Second-order time derivative of snapshot values on a non-uniform
/// time grid (first order with only two snapshots).
pub(crate) fn time_derivatives(times: &[f64], fields: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = times.len();
    let n = fields[0].len();
    let mut out = vec![vec![0.0; n]; m];
    if m == 2 {
        let h = times[1] - times[0];
        for j in 0..n {
            let d = (fields[1][j] - fields[0][j]) / h;
            out[0][j] = d;
            out[1][j] = d;
        }
        return out;
    }
    // Three-point weights for the derivative at t[c] from t[a], t[b], t[c].
    let weights = |ta: f64, tb: f64, tc: f64, at: f64| -> [f64; 3] {
        [
            ((at - tb) + (at - tc)) / ((ta - tb) * (ta - tc)),
            ((at - ta) + (at - tc)) / ((tb - ta) * (tb - tc)),
            ((at - ta) + (at - tb)) / ((tc - ta) * (tc - tb)),
        ]
    };
    for i in 0..m {
        let (a, b, c) = if i == 0 {
            (0, 1, 2)
        } else if i == m - 1 {
            (m - 3, m - 2, m - 1)
        } else {
            (i - 1, i, i + 1)
        };
        let wts = weights(times[a], times[b], times[c], times[i]);
        for j in 0..n {
            out[i][j] = wts[0] * fields[a][j] + wts[1] * fields[b][j] + wts[2] * fields[c][j];
        }
    }
    out
}

/// Norm series of the perturbation for every snapshot of `run`.
pub fn norm_series(run: &RunResult, kind: &ProblemKind) -> Result<PerturbSeries> {
    let snaps = &run.snapshots;
    if snaps.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "norm series needs at least 2 snapshots, got {}",
            snaps.len()
        )));
    }
    let p = &run.params;
    let dx = run.grid.dx();
    let mut ws = Vec::with_capacity(snaps.len());
    let mut zs = Vec::with_capacity(snaps.len());
    for s in snaps {
        let state = State::new(run.grid, s.u.clone(), s.rho.clone(), s.t)?;
        let (w, z) = perturbation(&state, p, kind)?;
        ws.push(w.into_vec());
        zs.push(z.into_vec());
    }
    let times = run.times();
    let w_t = time_derivatives(&times, &ws);
    let z_t = time_derivatives(&times, &zs);

    let combo = |w: &[f64], z: &[f64]| -> Vec<f64> {
        w.iter().zip(z).map(|(a, b)| p.lambda * a - p.mu * b).collect()
    };
    let mut norms = Vec::with_capacity(snaps.len());
    for i in 0..snaps.len() {
        let (w, z) = (&ws[i], &zs[i]);
        let s = 1.0 + times[i];
        let wn = [l2_slice(w, dx), l2_slice(&dx1_slice(w, dx), dx), l2_slice(&dx2_slice(w, dx), dx)];
        let zn = [l2_slice(z, dx), l2_slice(&dx1_slice(z, dx), dx), l2_slice(&dx2_slice(z, dx), dx)];
        let g = combo(w, z);
        let functional = (0..3)
            .map(|k| s.powi(k as i32) * (wn[k] * wn[k] + zn[k] * zn[k]))
            .sum();
        norms.push(NormRow {
            w: wn,
            z: zn,
            w_t: l2_slice(&w_t[i], dx),
            z_t: l2_slice(&z_t[i], dx),
            good: l2_slice(&g, dx),
            good_x: l2_slice(&dx1_slice(&g, dx), dx),
            good_t: l2_slice(&combo(&w_t[i], &z_t[i]), dx),
            functional,
        });
    }

    let mut cumulative = Vec::with_capacity(snaps.len());
    let mut acc = Cumulative::default();
    cumulative.push(acc);
    let integrand = |r: &NormRow, t: f64| -> [f64; 7] {
        let s = 1.0 + t;
        [
            r.w[1] * r.w[1],
            r.z[1] * r.z[1],
            r.good * r.good,
            s * r.w[2] * r.w[2],
            s * r.z[2] * r.z[2],
            s * r.good_x * r.good_x,
            s * s * r.good_t * r.good_t,
        ]
    };
    for i in 1..snaps.len() {
        let h = times[i] - times[i - 1];
        let a = integrand(&norms[i - 1], times[i - 1]);
        let b = integrand(&norms[i], times[i]);
        let inc: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * h * (x + y)).collect();
        acc.w_x += inc[0];
        acc.z_x += inc[1];
        acc.good += inc[2];
        acc.w_xx_weighted += inc[3];
        acc.z_xx_weighted += inc[4];
        acc.good_x_weighted += inc[5];
        acc.good_t_weighted += inc[6];
        cumulative.push(acc);
    }

    let mut n_running = Vec::with_capacity(snaps.len());
    let mut m = 0.0f64;
    for r in &norms {
        m = m.max(r.functional);
        n_running.push(m);
    }
    Ok(PerturbSeries {
        times,
        norms,
        cumulative,
        n_running,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grid;
    use std::f64::consts::PI;

    fn synthetic(f: impl Fn(f64, f64) -> f64, times: &[f64]) -> (RunResult, ProblemKind) {
        let p = ModelParams::default();
        let n = 2001;
        let g = Grid::with_spacing(0.0, 2.0 * PI / (n - 1) as f64, n).unwrap();
        let states = times
            .iter()
            .map(|&t| {
                let rho = Field::from_fn(&g, |x| p.rho_plus() + f(x, t)).unwrap();
                let u = Field::constant(n, p.u_plus);
                (t, u, rho)
            })
            .collect();
        (
            RunResult::from_states(g, p, states).unwrap(),
            ProblemKind::Neumann { width: 2.0 * PI },
        )
    }

    #[test]
    fn zero_perturbation_is_zero() {
        let (run, kind) = synthetic(|_, _| 0.0, &[0.0, 1.0, 2.0]);
        let s = norm_series(&run, &kind).unwrap();
        for r in &s.norms {
            assert_eq!(*r, NormRow::default());
        }
        assert!(s.cumulative.iter().all(|c| *c == Cumulative::default()));
        assert_eq!(s.n_final(), 0.0);
    }

    #[test]
    fn single_mode_norms() {
        let times: Vec<f64> = (0..21).map(|i| i as f64 * 0.1).collect();
        let (run, kind) = synthetic(|x, t| (-t).exp() * x.sin(), &times);
        let s = norm_series(&run, &kind).unwrap();
        for (t, r) in s.times.iter().zip(&s.norms) {
            let expect = (-t).exp() * PI.sqrt();
            assert!((r.w[0] - expect).abs() < 1e-3, "t = {t}");
            assert!((r.w[1] - expect).abs() < 1e-3);
            // w_t = -w, differenced on a 0.1 snapshot grid.
            assert!((r.w_t - expect).abs() < 1e-2 * expect.max(0.1));
            assert_eq!(r.z, [0.0; 3]);
        }
    }

    #[test]
    fn running_max_matches_direct_recomputation() {
        let times: Vec<f64> = (0..15).map(|i| i as f64 * 0.3).collect();
        let (run, kind) = synthetic(|x, t| (1.0 + (3.0 * t).sin()) * 0.01 * x.sin(), &times);
        let s = norm_series(&run, &kind).unwrap();
        for i in 0..s.len() {
            let direct = s.norms[..=i].iter().map(|r| r.functional).fold(0.0, f64::max);
            assert_eq!(s.n_running[i], direct);
        }
        for w in s.cumulative.windows(2) {
            assert!(w[1].dissipation() >= w[0].dissipation());
        }
    }

    #[test]
    fn needs_two_snapshots() {
        let (run, kind) = synthetic(|_, _| 0.0, &[0.0]);
        assert!(matches!(norm_series(&run, &kind), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn time_derivative_exact_on_quadratics() {
        let times = [0.0, 0.3, 1.0, 1.2, 2.0];
        let fields: Vec<Vec<f64>> = times.iter().map(|t| vec![t * t, 3.0 * t - 1.0]).collect();
        let d = time_derivatives(&times, &fields);
        for (t, row) in times.iter().zip(&d) {
            assert!((row[0] - 2.0 * t).abs() < 1e-12);
            assert!((row[1] - 3.0).abs() < 1e-12);
        }
    }
}
