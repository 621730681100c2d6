use serde::{Deserialize, Serialize};

use crate::analysis::series::{norm_series, perturbation};
use crate::error::{Error, Result};
use crate::model::{Grid, State};
use crate::solver::{ProblemKind, RunResult};
use crate::stencil::{dx1_slice, dx2_slice, trapezoid, trapezoid_nonuniform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelDomain {
    FullLine,
    HalfLine,
}

/// Heat-kernel weight `ω̃ = (1+t)^{-1/2} exp(-αx²/(1+t))` and its
/// primitive `g` (from `-∞` on the full line, from `0` on the half line).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightKernel {
    pub alpha: f64,
    pub domain: KernelDomain,
}

/// Default `α`.
pub const DEFAULT_ALPHA: f64 = 0.125;

impl WeightKernel {
    pub fn new(alpha: f64, domain: KernelDomain) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParams(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { alpha, domain })
    }

    /// Kernel matching the geometry of a problem kind.
    pub fn for_kind(alpha: f64, kind: &ProblemKind) -> Result<Self> {
        let domain = if kind.is_half_line() {
            KernelDomain::HalfLine
        } else {
            KernelDomain::FullLine
        };
        Self::new(alpha, domain)
    }

    pub fn omega(&self, x: f64, t: f64) -> f64 {
        let s = 1.0 + t;
        (-self.alpha * x * x / s).exp() / s.sqrt()
    }

    pub fn g(&self, x: f64, t: f64) -> f64 {
        let scale = 0.5 * (std::f64::consts::PI / self.alpha).sqrt();
        let e = libm::erf(x * (self.alpha / (1.0 + t)).sqrt());
        match self.domain {
            KernelDomain::FullLine => scale * (1.0 + e),
            KernelDomain::HalfLine => scale * e,
        }
    }

    /// `sup_x g(x,t)`, independent of `t`.
    pub fn g_sup(&self) -> f64 {
        let full = (std::f64::consts::PI / self.alpha).sqrt();
        match self.domain {
            KernelDomain::FullLine => full,
            KernelDomain::HalfLine => 0.5 * full,
        }
    }
}

/// `(ω̃, g)` at `(x, t)`.
pub fn weight_eval(kernel: &WeightKernel, x: f64, t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidConfig(format!("time must be >= 0, got {t}")));
    }
    Ok((kernel.omega(x, t), kernel.g(x, t)))
}

/// Max-norm residuals of `ω̃_t = ω̃_xx/(4α)` and `4α g_t = ω̃_x` on a grid,
/// with every derivative replaced by a second-order difference (time step
/// equal to the grid spacing).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    pub heat: f64,
    pub primitive: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.heat.max(self.primitive)
    }
}

pub fn weight_identity_check(kernel: &WeightKernel, grid: &Grid, t: f64) -> Result<IdentityResiduals> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidConfig(format!("identity check needs t > 0, got {t}")));
    }
    let dx = grid.dx();
    let h = dx.min(0.5 * t);
    let a4 = 4.0 * kernel.alpha;
    let sample = |f: &dyn Fn(f64) -> f64| -> Vec<f64> { grid.nodes().map(f).collect() };
    let w = sample(&|x| kernel.omega(x, t));
    let w_t: Vec<f64> = grid
        .nodes()
        .map(|x| (kernel.omega(x, t + h) - kernel.omega(x, t - h)) / (2.0 * h))
        .collect();
    let g_t: Vec<f64> = grid
        .nodes()
        .map(|x| (kernel.g(x, t + h) - kernel.g(x, t - h)) / (2.0 * h))
        .collect();
    let w_xx = dx2_slice(&w, dx);
    let w_x = dx1_slice(&w, dx);
    let heat = w_t
        .iter()
        .zip(&w_xx)
        .map(|(a, b)| (a - b / a4).abs())
        .fold(0.0, f64::max);
    let primitive = g_t
        .iter()
        .zip(&w_x)
        .map(|(a, b)| (a4 * a - b).abs())
        .fold(0.0, f64::max);
    Ok(IdentityResiduals { heat, primitive })
}

/// Which perturbation component to weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    W,
    Z,
}

/// `∫∫ h² ω̃² dx dt` for samples `fields[i]` at `times[i]` on `grid`.
pub fn weighted_integral_of(grid: &Grid, times: &[f64], fields: &[Vec<f64>], kernel: &WeightKernel) -> Result<f64> {
    if times.len() != fields.len() || times.len() < 2 {
        return Err(Error::InsufficientData(
            "weighted integral needs at least 2 aligned snapshots".into(),
        ));
    }
    let inner: Vec<f64> = times
        .iter()
        .zip(fields)
        .map(|(&t, h)| {
            let v: Vec<f64> = grid
                .nodes()
                .zip(h)
                .map(|(x, h)| {
                    let o = kernel.omega(x, t);
                    h * h * o * o
                })
                .collect();
            trapezoid(&v, grid.dx())
        })
        .collect();
    Ok(trapezoid_nonuniform(times, &inner))
}

fn component_fields(run: &RunResult, kind: &ProblemKind, which: Component) -> Result<Vec<Vec<f64>>> {
    run.snapshots
        .iter()
        .map(|s| {
            let st = State::new(run.grid, s.u.clone(), s.rho.clone(), s.t)?;
            let (w, z) = perturbation(&st, &run.params, kind)?;
            Ok(match which {
                Component::W => w.into_vec(),
                Component::Z => z.into_vec(),
            })
        })
        .collect()
}

/// `∫∫ h² ω̃² dx dt` over the run, `h` being `w` or `z`.
pub fn weighted_spacetime_integral(
    run: &RunResult,
    kind: &ProblemKind,
    which: Component,
    kernel: &WeightKernel,
) -> Result<f64> {
    let fields = component_fields(run, kind, which)?;
    weighted_integral_of(&run.grid, &run.times(), &fields, kernel)
}

/// Both sides of the weighted estimate
/// `∫∫ z² ω̃² ≤ C (∫ (‖z_x‖² + ‖w_x‖²) dτ + ‖z0‖²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEstimate {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

pub fn check_weighted_estimate(run: &RunResult, kind: &ProblemKind, kernel: &WeightKernel) -> Result<WeightedEstimate> {
    let lhs = weighted_spacetime_integral(run, kind, Component::Z, kernel)?;
    let series = norm_series(run, kind)?;
    let cum = series.cumulative.last().copied().unwrap_or_default();
    let z0 = series.norms[0].z[0];
    let rhs = cum.w_x + cum.z_x + z0 * z0;
    let ratio = if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        return Err(Error::Inconsistent(format!(
            "weighted integral {lhs:e} is positive while the right side vanishes"
        )));
    };
    Ok(WeightedEstimate { lhs, rhs, ratio })
}
