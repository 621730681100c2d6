//! Self-similar diffusion-wave profiles.
//!
//! The wave `ū(x,t) = φ(ξ)`, `ξ = x/√(1+t)`, solves
//! `(f(φ) φ')' + (ξ/2) φ' = 0` with `f(φ) = a - (κμ/λ) φ` and far-field
//! limits `φ(±∞) = u±`. The ODE is integrated as a first-order system in
//! `(φ, ψ)` with the flux `ψ = f(φ) φ'`:
//!
//! ```text
//! φ' = ψ / f(φ),      ψ' = -ξ ψ / (2 f(φ))
//! ```
//!
//! so `ψ` never changes sign and every trajectory is monotone.

mod io;
mod wave;

pub use io::{format_profile, parse_profile, read_profile, write_profile};
pub use wave::{check_decay_table, DecayCheck, DiffusionWave};

use crate::error::{Error, Result};
use crate::model::{Field, Grid, ModelParams};
use crate::stats::fit_line;

/// Default far-field residual for shooting.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Integration steps on each side of the anchor.
const STEPS_PER_SIDE: usize = 1000;
const MAX_BISECTIONS: usize = 200;

/// Shooting data at the anchor `ξ0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub xi0: f64,
    pub phi0: f64,
    pub slope0: f64,
}

/// Fitted Gaussian envelope `|φ'(ξ)| ≈ c_amp·|u+ - u-|·exp(-c0 ξ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub c_amp: f64,
    pub c0: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileDomain {
    /// `ξ ∈ [-ξ_max, ξ_max]`, connecting `u-` to `u+`.
    Full,
    /// `ξ ∈ [0, ξ_max]` with `φ(0) = β`.
    HalfLine { beta: f64 },
}

/// Sampled profile with its shooting metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub(crate) params: ModelParams,
    pub(crate) xi_grid: Grid,
    pub(crate) phi: Field,
    pub(crate) dphi: Field,
    pub(crate) anchor: Anchor,
    pub(crate) domain: ProfileDomain,
    pub(crate) envelope: Option<Envelope>,
}

impl Profile {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn xi_grid(&self) -> &Grid {
        &self.xi_grid
    }

    pub fn phi(&self) -> &Field {
        &self.phi
    }

    pub fn dphi(&self) -> &Field {
        &self.dphi
    }

    pub fn anchor(&self) -> Anchor {
        self.anchor
    }

    pub fn domain(&self) -> ProfileDomain {
        self.domain
    }

    pub fn envelope(&self) -> Option<Envelope> {
        self.envelope
    }

    pub fn u_minus(&self) -> f64 {
        self.params.u_minus
    }

    pub fn u_plus(&self) -> f64 {
        self.params.u_plus
    }

    pub fn is_constant(&self) -> bool {
        self.dphi.values().iter().all(|v| *v == 0.0)
    }

    /// `|φ(ξ_min) - left target|` and `|φ(ξ_max) - u+|`. On the half line the
    /// left target is `β`.
    pub fn far_field_residuals(&self) -> (f64, f64) {
        let phi = self.phi.values();
        let left_target = match self.domain {
            ProfileDomain::Full => self.params.u_minus,
            ProfileDomain::HalfLine { beta } => beta,
        };
        (
            (phi[0] - left_target).abs(),
            (phi[phi.len() - 1] - self.params.u_plus).abs(),
        )
    }

    /// Attach a fitted envelope (see [`fit_envelope`]).
    pub fn with_envelope(mut self, envelope: Envelope) -> Self {
        self.envelope = Some(envelope);
        self
    }

    /// Max-norm residual of `(f(φ)φ')' + (ξ/2)φ'` on the samples, with the
    /// flux derivative taken by a five-point central difference.
    pub fn ode_residual(&self) -> f64 {
        let n = self.xi_grid.n();
        if n < 5 {
            return 0.0;
        }
        let h = self.xi_grid.dx();
        let phi = self.phi.values();
        let dphi = self.dphi.values();
        let flux: Vec<f64> = phi
            .iter()
            .zip(dphi)
            .map(|(p, d)| self.params.diffusivity(*p) * d)
            .collect();
        (2..n - 2)
            .map(|i| {
                let dflux =
                    (flux[i - 2] - 8.0 * flux[i - 1] + 8.0 * flux[i + 1] - flux[i + 2]) / (12.0 * h);
                (dflux + 0.5 * self.xi_grid.node(i) * dphi[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    pub(crate) fn from_parts(
        params: ModelParams,
        xi_grid: Grid,
        phi: Vec<f64>,
        dphi: Vec<f64>,
        anchor: Anchor,
        domain: ProfileDomain,
    ) -> Result<Self> {
        let phi = Field::new(phi)?;
        let dphi = Field::new(dphi)?;
        phi.check_aligned(&xi_grid)?;
        dphi.check_aligned(&xi_grid)?;
        Ok(Self {
            params,
            xi_grid,
            phi,
            dphi,
            anchor,
            domain,
            envelope: None,
        })
    }
}

/// Samples of an integrated trajectory, ordered by increasing `ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub xi: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    /// Where integration stopped because `f(φ) ≤ 0`, if it did.
    pub halted_left: Option<f64>,
    pub halted_right: Option<f64>,
}

impl Trajectory {
    pub fn halted(&self) -> bool {
        self.halted_left.is_some() || self.halted_right.is_some()
    }
}

#[inline]
fn rhs(c: f64, a: f64, xi: f64, phi: f64, psi: f64) -> Option<(f64, f64)> {
    let f = a - c * phi;
    if f > 0.0 {
        Some((psi / f, -0.5 * xi * psi / f))
    } else {
        None
    }
}

/// One classical RK4 step of the `(φ, ψ)` system; `None` on degeneracy.
#[inline]
fn rk4_step(c: f64, a: f64, xi: f64, phi: f64, psi: f64, h: f64) -> Option<(f64, f64)> {
    let (k1p, k1s) = rhs(c, a, xi, phi, psi)?;
    let (k2p, k2s) = rhs(c, a, xi + 0.5 * h, phi + 0.5 * h * k1p, psi + 0.5 * h * k1s)?;
    let (k3p, k3s) = rhs(c, a, xi + 0.5 * h, phi + 0.5 * h * k2p, psi + 0.5 * h * k2s)?;
    let (k4p, k4s) = rhs(c, a, xi + h, phi + h * k3p, psi + h * k3s)?;
    let phi = phi + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    let psi = psi + h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
    if a - c * phi > 0.0 {
        Some((phi, psi))
    } else {
        None
    }
}

/// Outcome of integrating in one direction.
struct Shot {
    samples: Vec<(f64, f64, f64)>,
    halted: Option<f64>,
}

fn integrate_direction(
    p: &ModelParams,
    phi0: f64,
    psi0: f64,
    h: f64,
    steps: usize,
    keep: bool,
) -> Result<Shot> {
    let (a, c) = (p.a, p.chemo_coupling());
    let mut samples = Vec::with_capacity(if keep { steps + 1 } else { 1 });
    let (mut phi, mut psi) = (phi0, psi0);
    if keep {
        samples.push((0.0, phi, psi / (a - c * phi)));
    }
    for s in 0..steps {
        let xi = s as f64 * h;
        match rk4_step(c, a, xi, phi, psi, h) {
            Some((np, ns)) => {
                if !(np.is_finite() && ns.is_finite()) {
                    return Err(Error::NonFinite { index: s + 1 });
                }
                phi = np;
                psi = ns;
                if keep {
                    let xi1 = (s + 1) as f64 * h;
                    samples.push((xi1, phi, psi / (a - c * phi)));
                }
            }
            None => {
                return Ok(Shot {
                    samples,
                    halted: Some(xi),
                })
            }
        }
    }
    if !keep {
        samples.push((steps as f64 * h, phi, psi / (a - c * phi)));
    }
    Ok(Shot {
        samples,
        halted: None,
    })
}

/// Integrate the profile ODE from `ξ = 0` outward to both ends of
/// `xi_span` with RK4 of step at most `dxi`. A direction that reaches
/// `f(φ) ≤ 0` stops early and is flagged in the trajectory.
pub fn integrate_profile_ode(
    params: &ModelParams,
    phi0: f64,
    slope0: f64,
    xi_span: (f64, f64),
    dxi: f64,
) -> Result<Trajectory> {
    let (lo, hi) = xi_span;
    if !(dxi.is_finite() && dxi > 0.0) {
        return Err(Error::InvalidConfig(format!("dxi must be positive, got {dxi}")));
    }
    if !(lo <= 0.0 && hi >= 0.0 && lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "xi span [{lo}, {hi}] must contain the anchor 0"
        )));
    }
    let f0 = params.diffusivity(phi0);
    if !(f0 > 0.0) {
        return Err(Error::Degenerate { xi: 0.0, f: f0 });
    }
    let psi0 = f0 * slope0;
    // Spans that are an exact multiple of dxi must not gain a step from rounding.
    let steps_for = |span: f64| (span / dxi * (1.0 - 1e-12)).ceil() as usize;
    let right_steps = steps_for(hi);
    let left_steps = steps_for(-lo);
    let right = if right_steps > 0 {
        integrate_direction(params, phi0, psi0, hi / right_steps as f64, right_steps, true)?
    } else {
        Shot {
            samples: vec![(0.0, phi0, slope0)],
            halted: None,
        }
    };
    let left = if left_steps > 0 {
        integrate_direction(params, phi0, psi0, lo / left_steps as f64, left_steps, true)?
    } else {
        Shot {
            samples: vec![(0.0, phi0, slope0)],
            halted: None,
        }
    };
    let mut traj = Trajectory {
        xi: Vec::new(),
        phi: Vec::new(),
        dphi: Vec::new(),
        halted_left: left.halted,
        halted_right: right.halted,
    };
    for &(x, p, d) in left.samples.iter().skip(1).rev().chain(right.samples.iter()) {
        traj.xi.push(x);
        traj.phi.push(p);
        traj.dphi.push(d);
    }
    Ok(traj)
}

/// Half-width `ξ_max` where the linear-diffusion envelope with the largest
/// diffusivity drops below `tol/10`.
pub fn xi_max_for(params: &ModelParams, tol: f64) -> f64 {
    let f_max = params.a + params.chemo_coupling() * params.u_minus.abs().max(params.u_plus.abs());
    (4.0 * f_max * (10.0 / tol).ln()).sqrt()
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(Error::InvalidConfig(format!(
            "shooting tolerance must lie in (0, 1e-3], got {tol}"
        )));
    }
    Ok(())
}

/// End value of a one-directional shot; `None` when the trajectory hit
/// `f(φ) ≤ 0`, which always lies beyond any admissible target.
fn end_value(p: &ModelParams, phi0: f64, slope: f64, h: f64, steps: usize) -> Result<Option<f64>> {
    let psi0 = p.diffusivity(phi0) * slope;
    let shot = integrate_direction(p, phi0, psi0, h, steps, false)?;
    Ok(match shot.halted {
        Some(_) => None,
        None => Some(shot.samples[0].1),
    })
}

/// Bisect on the slope magnitude so that the shot from `phi0` with step `h`
/// ends at `target`. `dir` is the sign of `φ'`; returns the largest
/// magnitude found that does not overshoot.
fn bisect_slope(
    p: &ModelParams,
    phi0: f64,
    target: f64,
    dir: f64,
    h: f64,
    steps: usize,
) -> Result<f64> {
    // The end value moves monotonically in the direction of travel.
    let travel = (target - phi0) * h.signum() * dir;
    if travel <= 0.0 {
        return Ok(0.0);
    }
    let overshoots = |m: f64| -> Result<bool> {
        let slope = dir * m;
        Ok(match end_value(p, phi0, slope, h, steps)? {
            None => true,
            Some(end) => (end - target) * h.signum() * dir > 0.0,
        })
    };
    let f0 = p.diffusivity(phi0);
    let mut lo = 0.0;
    let mut hi = (target - phi0).abs() / (std::f64::consts::PI * f0).sqrt();
    let mut grown = 0;
    while !overshoots(hi)? {
        lo = hi;
        hi *= 2.0;
        grown += 1;
        if grown > MAX_BISECTIONS || !hi.is_finite() {
            return Err(Error::NoConvergence(format!(
                "could not bracket slope from phi0 = {phi0} toward {target}"
            )));
        }
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if overshoots(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

fn constant_profile(params: &ModelParams, value: f64, domain: ProfileDomain, tol: f64) -> Result<Profile> {
    let xi_max = xi_max_for(params, tol);
    let grid = match domain {
        ProfileDomain::Full => Grid::with_spacing(-xi_max, xi_max / STEPS_PER_SIDE as f64, 2 * STEPS_PER_SIDE + 1)?,
        ProfileDomain::HalfLine { .. } => {
            Grid::with_spacing(0.0, xi_max / STEPS_PER_SIDE as f64, STEPS_PER_SIDE + 1)?
        }
    };
    let n = grid.n();
    Profile::from_parts(
        *params,
        grid,
        vec![value; n],
        vec![0.0; n],
        Anchor {
            xi0: 0.0,
            phi0: value,
            slope0: 0.0,
        },
        domain,
    )
}

fn finish_profile(
    params: &ModelParams,
    traj: Trajectory,
    xi_max: f64,
    anchor: Anchor,
    domain: ProfileDomain,
    tol: f64,
) -> Result<Profile> {
    if traj.halted() {
        return Err(Error::Degenerate {
            xi: traj.halted_left.or(traj.halted_right).unwrap_or(0.0),
            f: 0.0,
        });
    }
    let h = xi_max / STEPS_PER_SIDE as f64;
    let x0 = traj.xi[0];
    let grid = Grid::with_spacing(x0, h, traj.xi.len())?;
    let profile = Profile::from_parts(*params, grid, traj.phi, traj.dphi, anchor, domain)?;
    let (left, right) = profile.far_field_residuals();
    if left > tol || right > tol {
        return Err(Error::NoConvergence(format!(
            "far-field residuals ({left:e}, {right:e}) exceed tol {tol:e}; anchor phi0 = {}, slope0 = {}",
            anchor.phi0, anchor.slope0
        )));
    }
    Ok(profile)
}

/// Full-line profile by nested bisection: the outer loop bisects `φ(0)`
/// between the end states until the right limit hits `u+`; for every
/// candidate the inner loop bisects `φ'(0)` until the left limit hits `u-`.
pub fn solve_profile_cauchy(params: &ModelParams, tol: f64) -> Result<Profile> {
    params.validate()?;
    check_tol(tol)?;
    let (um, up) = (params.u_minus, params.u_plus);
    if um == up {
        return constant_profile(params, up, ProfileDomain::Full, tol);
    }
    let dir = (up - um).signum();
    let xi_max = xi_max_for(params, tol);
    let h = xi_max / STEPS_PER_SIDE as f64;
    let steps = STEPS_PER_SIDE;

    // Right limit as a function of phi0, with the slope tuned to the left limit.
    let right_limit = |phi0: f64| -> Result<(f64, Option<f64>)> {
        let m = bisect_slope(params, phi0, um, dir, -h, steps)?;
        Ok((m, end_value(params, phi0, dir * m, h, steps)?))
    };

    // Bisection in the direction of increasing right limit.
    let mut lo = um;
    let mut hi = up;
    let mut best = (um, 0.0);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let (m, end) = right_limit(mid)?;
        let over = match end {
            None => true,
            Some(e) => (e - up) * dir > 0.0,
        };
        if over {
            hi = mid;
        } else {
            lo = mid;
            best = (mid, m);
        }
    }
    let (phi0, m) = best;
    let slope0 = dir * m;
    log::debug!("cauchy profile anchor phi0 = {phi0:.16e}, slope0 = {slope0:.16e}");
    let traj = integrate_profile_ode(params, phi0, slope0, (-xi_max, xi_max), h)?;
    finish_profile(
        params,
        traj,
        xi_max,
        Anchor {
            xi0: 0.0,
            phi0,
            slope0,
        },
        ProfileDomain::Full,
        tol,
    )
}

/// Half-line profile with `φ(0) = β`, shooting the slope so that
/// `φ(+∞) = u+`.
pub fn solve_profile_halfline(params: &ModelParams, beta: f64, tol: f64) -> Result<Profile> {
    params.validate()?;
    check_tol(tol)?;
    let (um, up) = (params.u_minus, params.u_plus);
    let (lo, hi) = (um.min(up), um.max(up));
    if !(beta >= lo && beta <= hi) {
        return Err(Error::InvalidConfig(format!(
            "beta = {beta} must lie between u- = {um} and u+ = {up}"
        )));
    }
    let domain = ProfileDomain::HalfLine { beta };
    if beta == up {
        return constant_profile(params, up, domain, tol);
    }
    let dir = (up - beta).signum();
    let xi_max = xi_max_for(params, tol);
    let h = xi_max / STEPS_PER_SIDE as f64;
    let m = bisect_slope(params, beta, up, dir, h, STEPS_PER_SIDE)?;
    let slope0 = dir * m;
    let traj = integrate_profile_ode(params, beta, slope0, (0.0, xi_max), h)?;
    finish_profile(
        params,
        traj,
        xi_max,
        Anchor {
            xi0: 0.0,
            phi0: beta,
            slope0,
        },
        domain,
        tol,
    )
}

/// Least-squares fit of `log|φ'|` against `ξ²` over samples with
/// `|φ'| > 1e-12`. The amplitude is normalised by `|u+ - u-|`
/// (by `|u+ - β|` on the half line).
pub fn fit_envelope(profile: &Profile) -> Result<Envelope> {
    if profile.is_constant() {
        return Err(Error::DegenerateFit(
            "constant profile has no envelope".into(),
        ));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = profile
        .xi_grid
        .nodes()
        .zip(profile.dphi.values())
        .filter(|(_, d)| d.abs() > 1e-12)
        .map(|(xi, d)| (xi * xi, d.abs().ln()))
        .unzip();
    let fit = fit_line(&x, &y)
        .ok_or_else(|| Error::DegenerateFit("too few samples above 1e-12".into()))?;
    if !(fit.slope < 0.0) {
        return Err(Error::DegenerateFit(format!(
            "envelope exponent must be negative, got slope {}",
            fit.slope
        )));
    }
    let jump = match profile.domain {
        ProfileDomain::Full => (profile.u_plus() - profile.u_minus()).abs(),
        ProfileDomain::HalfLine { beta } => (profile.u_plus() - beta).abs(),
    };
    Ok(Envelope {
        c_amp: fit.intercept.exp() / jump,
        c0: -fit.slope,
        r2: fit.r2,
    })
}
