use crate::error::{Error, Result};
use crate::model::{Field, ModelParams, State};
use crate::solver::{ProblemKind, RunConfig};
use crate::tridiag::tridiag_solve;

/// Any state value above this magnitude is treated as blow-up.
pub const BLOWUP_LIMIT: f64 = 1e6;

/// Compatibility tolerance for initial data at `x = 0`.
const COMPAT_TOL: f64 = 1e-12;

/// End-node treatment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Closure {
    /// Fix `(u, ρ)` at the node.
    Clamp { u: f64, rho: f64 },
    /// Second-order one-sided zero slope, `3v0 - 4v1 + v2 = 0`.
    ZeroSlope,
}

/// One IMEX step of fixed size on a fixed uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scheme {
    pub params: ModelParams,
    pub dx: f64,
    pub dt: f64,
    pub upwind: bool,
}

impl Scheme {
    /// Chemotactic flux `κ u ρ_x` at the half nodes `i + 1/2`.
    pub fn half_node_flux(&self, u: &[f64], rho: &[f64]) -> Vec<f64> {
        let k = self.params.kappa;
        let inv = 1.0 / self.dx;
        (0..u.len() - 1)
            .map(|i| {
                let grad = (rho[i + 1] - rho[i]) * inv;
                let u_face = if self.upwind {
                    if k * grad > 0.0 {
                        u[i]
                    } else {
                        u[i + 1]
                    }
                } else {
                    0.5 * (u[i] + u[i + 1])
                };
                k * u_face * grad
            })
            .collect()
    }

    /// Advance `(u, ρ)` by `dt`. `forcing` holds source terms for the two
    /// equations evaluated at the new time level.
    pub fn advance(
        &self,
        u: &[f64],
        rho: &[f64],
        left: Closure,
        right: Closure,
        forcing: Option<(&[f64], &[f64])>,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = u.len();
        if rho.len() != n {
            return Err(Error::Misaligned {
                expected: n,
                found: rho.len(),
            });
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {n}")));
        }
        let p = &self.params;
        let (dt, dx) = (self.dt, self.dx);

        let flux = self.half_node_flux(u, rho);
        let mut rhs_u = vec![0.0; n];
        for i in 1..n - 1 {
            rhs_u[i] = u[i] - dt * (flux[i] - flux[i - 1]) / dx;
            if let Some((su, _)) = forcing {
                rhs_u[i] += dt * su[i];
            }
        }
        let r = p.a * dt / (dx * dx);
        let u_new = solve_implicit(r, 0.0, rhs_u, left, right, |c| match c {
            Closure::Clamp { u, .. } => u,
            Closure::ZeroSlope => 0.0,
        })?;

        let mut rhs_rho = vec![0.0; n];
        for i in 1..n - 1 {
            rhs_rho[i] = rho[i] + dt * p.mu * u_new[i];
            if let Some((_, sr)) = forcing {
                rhs_rho[i] += dt * sr[i];
            }
        }
        let s = p.b * dt / (dx * dx);
        let rho_new = solve_implicit(s, dt * p.lambda, rhs_rho, left, right, |c| match c {
            Closure::Clamp { rho, .. } => rho,
            Closure::ZeroSlope => 0.0,
        })?;
        Ok((u_new, rho_new))
    }
}

/// Solve `(1 + 2r + sink) v_i - r (v_{i-1} + v_{i+1}) = rhs_i` on the
/// interior with the given end closures.
fn solve_implicit(
    r: f64,
    sink: f64,
    mut rhs: Vec<f64>,
    left: Closure,
    right: Closure,
    clamp_value: impl Fn(Closure) -> f64,
) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut lower = vec![-r; n];
    let mut diag = vec![1.0 + 2.0 * r + sink; n];
    let mut upper = vec![-r; n];
    let d_int = diag[1];

    match left {
        Closure::Clamp { .. } => {
            diag[0] = 1.0;
            upper[0] = 0.0;
            rhs[0] = clamp_value(left);
        }
        Closure::ZeroSlope => {
            // 3v0 - 4v1 + v2 = 0 with v2 eliminated through row 1.
            let (l1, d1, c1, r1) = (-r, d_int, -r, rhs[1]);
            diag[0] = 3.0 - l1 / c1;
            upper[0] = -4.0 - d1 / c1;
            rhs[0] = -r1 / c1;
        }
    }
    lower[0] = 0.0;
    match right {
        Closure::Clamp { .. } => {
            diag[n - 1] = 1.0;
            lower[n - 1] = 0.0;
            rhs[n - 1] = clamp_value(right);
        }
        Closure::ZeroSlope => {
            let (c, d, l, rr) = (-r, d_int, -r, rhs[n - 2]);
            diag[n - 1] = 3.0 - c / l;
            lower[n - 1] = -4.0 - d / l;
            rhs[n - 1] = -rr / l;
        }
    }
    upper[n - 1] = 0.0;
    if r == 0.0 {
        // No coupling: the zero-slope rows degenerate, fall back to copying.
        if left == Closure::ZeroSlope {
            rhs[0] = rhs[1] / d_int;
            diag[0] = 1.0;
            upper[0] = 0.0;
        }
        if right == Closure::ZeroSlope {
            rhs[n - 1] = rhs[n - 2] / d_int;
            diag[n - 1] = 1.0;
            lower[n - 1] = 0.0;
        }
    }
    tridiag_solve(&lower, &diag, &upper, &rhs)
}

/// Initial state `(ū + z0, ρ̄ + w0)` (constant reference for Neumann runs),
/// after checking boundary compatibility of the perturbations.
pub fn init_state(config: &RunConfig) -> Result<State> {
    let grid = *config.grid();
    let params = config.params();
    let (u_ref, rho_ref) = config.kind().reference(params, &grid, 0.0)?;
    let w0 = config.initial().w0.compile()?;
    let z0 = config.initial().z0.compile()?;
    match config.kind() {
        ProblemKind::Dirichlet { .. } => {
            for (name, s) in [("w0", &w0), ("z0", &z0)] {
                let v = s.value(0.0);
                if v.abs() > COMPAT_TOL {
                    return Err(Error::Compatibility(format!(
                        "{name}(0) = {v:e} must vanish for the Dirichlet problem"
                    )));
                }
            }
        }
        ProblemKind::Neumann { .. } => {
            for (name, s) in [("w0", &w0), ("z0", &z0)] {
                let d = s.slope(0.0);
                if d.abs() > COMPAT_TOL {
                    return Err(Error::Compatibility(format!(
                        "{name}'(0) = {d:e} must vanish for the Neumann problem"
                    )));
                }
            }
        }
        ProblemKind::Cauchy { .. } => {}
    }
    let u: Vec<f64> = grid
        .nodes()
        .zip(u_ref.values())
        .map(|(x, r)| r + z0.value(x))
        .collect();
    let rho: Vec<f64> = grid
        .nodes()
        .zip(rho_ref.values())
        .map(|(x, r)| r + w0.value(x))
        .collect();
    let mut state = State::new(grid, Field::new(u)?, Field::new(rho)?, 0.0)?;
    if let ProblemKind::Dirichlet { .. } = config.kind() {
        apply_boundary(&mut state, params, config.kind());
    }
    Ok(state)
}

/// Impose the end conditions of `kind` on a state in place: clamps to the
/// boundary and far-field values, or the one-sided zero-slope relation.
pub fn apply_boundary(state: &mut State, params: &ModelParams, kind: &ProblemKind) {
    let mut u = std::mem::replace(&mut state.u, Field::zeros(0)).into_vec();
    let mut rho = std::mem::replace(&mut state.rho, Field::zeros(0)).into_vec();
    let n = u.len();
    u[n - 1] = params.u_plus;
    rho[n - 1] = params.rho_plus();
    match *kind {
        ProblemKind::Cauchy { .. } => {
            u[0] = params.u_minus;
            rho[0] = params.rho_minus();
        }
        ProblemKind::Dirichlet { beta, .. } => {
            u[0] = beta;
            rho[0] = params.darcy_ratio() * beta;
        }
        ProblemKind::Neumann { .. } => {
            u[0] = (4.0 * u[1] - u[2]) / 3.0;
            rho[0] = (4.0 * rho[1] - rho[2]) / 3.0;
        }
    }
    // Values were finite before and the closures are convex-like combinations.
    state.u = Field::new(u).expect("finite closure");
    state.rho = Field::new(rho).expect("finite closure");
}

pub(crate) fn check_blowup(t: f64, u: &[f64], rho: &[f64]) -> Result<()> {
    for (name, v) in [("u", u), ("rho", rho)] {
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::BlowUp {
                t,
                reason: format!("{name}[{i}] is not finite"),
            });
        }
        if let Some(i) = v.iter().position(|x| x.abs() > BLOWUP_LIMIT) {
            return Err(Error::BlowUp {
                t,
                reason: format!("|{name}[{i}]| = {:e} exceeds {BLOWUP_LIMIT:e}", v[i]),
            });
        }
    }
    Ok(())
}

/// One step of the configured scheme.
pub fn step(state: &State, config: &RunConfig) -> Result<State> {
    state.u.check_aligned(config.grid())?;
    let (left, right) = config.closures();
    let t = state.t + config.dt();
    let (u, rho) = config
        .scheme()
        .advance(state.u.values(), state.rho.values(), left, right, None)
        .map_err(|e| match e {
            Error::NonFinite { index } => Error::BlowUp {
                t,
                reason: format!("non-finite value at node {index}"),
            },
            other => other,
        })?;
    check_blowup(t, &u, &rho)?;
    Ok(State {
        grid: state.grid,
        u: Field::new(u)?,
        rho: Field::new(rho)?,
        t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grid;
    use crate::profile::{solve_profile_cauchy, DiffusionWave};
    use crate::solver::{InitialData, InitialShape, RunSetup};
    use crate::stencil::dx1;

    fn neumann(amp: f64) -> RunConfig {
        let p = ModelParams::default();
        RunSetup::new(p, ProblemKind::Neumann { width: 20.0 }, 0.1, 0.05, 1.0)
            .with_initial(InitialData::both(InitialShape::GaussianBump {
                amp,
                center: 0.0,
                sigma: 1.5,
            }))
            .build()
            .unwrap()
    }

    #[test]
    fn constant_neumann_state_is_fixed() {
        let c = neumann(0.0);
        let s0 = init_state(&c).unwrap();
        let s1 = step(&s0, &c).unwrap();
        for (a, b) in s1.u.values().iter().zip(s0.u.values()) {
            assert!((a - b).abs() <= 1e-14);
        }
        for (a, b) in s1.rho.values().iter().zip(s0.rho.values()) {
            assert!((a - b).abs() <= 1e-14);
        }
        assert_eq!(s1.t, 0.05);
    }

    #[test]
    fn neumann_slope_vanishes_after_step() {
        let c = neumann(0.01);
        let mut s = init_state(&c).unwrap();
        for _ in 0..10 {
            s = step(&s, &c).unwrap();
            assert!(dx1(&s.u, &s.grid).unwrap()[0].abs() < 1e-12);
            assert!(dx1(&s.rho, &s.grid).unwrap()[0].abs() < 1e-12);
        }
    }

    #[test]
    fn cauchy_ends_clamped_exactly() {
        let p = ModelParams::default();
        let wave = DiffusionWave::from_profile(solve_profile_cauchy(&p, 1e-8).unwrap());
        let c = RunSetup::new(p, ProblemKind::Cauchy { wave, half_width: 20.0 }, 0.1, 0.05, 1.0)
            .build()
            .unwrap();
        let s = step(&init_state(&c).unwrap(), &c).unwrap();
        assert_eq!(s.u[0], p.u_minus);
        assert_eq!(s.rho[0], p.rho_minus());
        assert_eq!(s.u[s.u.len() - 1], p.u_plus);
        assert_eq!(s.rho[s.rho.len() - 1], p.rho_plus());
    }

    #[test]
    fn zero_perturbation_starts_on_the_wave() {
        let p = ModelParams::default();
        let wave = DiffusionWave::from_profile(solve_profile_cauchy(&p, 1e-8).unwrap());
        let kind = ProblemKind::Cauchy {
            wave: wave.clone(),
            half_width: 20.0,
        };
        let c = RunSetup::new(p, kind, 0.1, 0.05, 1.0).build().unwrap();
        let s = init_state(&c).unwrap();
        let (u, rho) = wave.sample(c.grid(), 0.0).unwrap();
        assert_eq!(s.u, u);
        assert_eq!(s.rho, rho);
    }

    #[test]
    fn zero_slope_rows_agree_with_apply_boundary() {
        let scheme = Scheme {
            params: ModelParams::default(),
            dx: 0.1,
            dt: 0.05,
            upwind: false,
        };
        let g = Grid::with_spacing(0.0, 0.1, 50).unwrap();
        let u: Vec<f64> = g.nodes().map(|x| 0.02 + 0.01 * (-x * x).exp()).collect();
        let rho = u.clone();
        let clamp = Closure::Clamp { u: 0.02, rho: 0.02 };
        let (un, rn) = scheme.advance(&u, &rho, Closure::ZeroSlope, clamp, None).unwrap();
        assert!((3.0 * un[0] - 4.0 * un[1] + un[2]).abs() < 1e-15);
        assert!((3.0 * rn[0] - 4.0 * rn[1] + rn[2]).abs() < 1e-15);
    }

    #[test]
    fn upwind_flux_picks_upstream_value() {
        let scheme = Scheme {
            params: ModelParams::default(),
            dx: 1.0,
            dt: 0.1,
            upwind: true,
        };
        let f = scheme.half_node_flux(&[1.0, 2.0, 3.0], &[0.0, 1.0, 0.0]);
        assert_eq!(f, vec![1.0, -3.0]);
    }

    #[test]
    fn blowup_detected() {
        assert!(matches!(check_blowup(1.0, &[0.0, 2e6], &[0.0, 0.0]), Err(Error::BlowUp { .. })));
        assert!(matches!(
            check_blowup(1.0, &[0.0, 0.0], &[f64::NAN, 0.0]),
            Err(Error::BlowUp { .. })
        ));
        assert!(check_blowup(1.0, &[1.0], &[1.0]).is_ok());
    }
}
