use crate::analysis::series::perturbation;
use crate::error::{Error, Result};
use crate::model::State;
use crate::solver::{ProblemKind, RunResult};
use crate::stencil::{dx1_slice, dx2_slice, l2_slice, trapezoid};

/// `λK > μ²` (with `λ, K > 0`), i.e. `λw²/2 + Kz²/2 - μwz` is positive
/// definite.
pub fn is_positive_definite(lambda: f64, mu: f64, k: f64) -> bool {
    lambda > 0.0 && k > 0.0 && lambda * k > mu * mu
}

/// `2μ²/λ + 1`.
pub fn default_k(lambda: f64, mu: f64) -> f64 {
    2.0 * mu * mu / lambda + 1.0
}

/// `λw²/2 + Kz²/2 - μwz`.
#[inline]
pub fn energy_density(lambda: f64, mu: f64, k: f64, w: f64, z: f64) -> f64 {
    0.5 * lambda * w * w + 0.5 * k * z * z - mu * w * z
}

/// Dissipation integrands at one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DissipationRow {
    pub w_x2: f64,
    pub z_x2: f64,
    /// `∫ (λw - μz)²`.
    pub good2: f64,
    pub w_xx2: f64,
    pub z_xx2: f64,
    /// `∫ (λw_x - μz_x)²`.
    pub good_x2: f64,
    /// Diffusive boundary flux of the quadratic form at `x = 0`
    /// (`-(λb w w_x + Ka z z_x - μ(a w z_x + b z w_x))`), zero on the line.
    pub boundary: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    pub k: f64,
    pub times: Vec<f64>,
    /// `∫ (λw²/2 + Kz²/2 - μwz) dx`.
    pub quadratic: Vec<f64>,
    /// Same form in `(w_x, z_x)`.
    pub quadratic_x: Vec<f64>,
    pub dissipation: Vec<DissipationRow>,
}

pub fn energy_ledger(run: &RunResult, kind: &ProblemKind, k: f64) -> Result<EnergyLedger> {
    let p = &run.params;
    if !is_positive_definite(p.lambda, p.mu, k) {
        return Err(Error::InvalidParams(format!(
            "K = {k} gives lambda*K = {} <= mu^2 = {}",
            p.lambda * k,
            p.mu * p.mu
        )));
    }
    let dx = run.grid.dx();
    let (lam, mu) = (p.lambda, p.mu);
    let form = |w: &[f64], z: &[f64]| -> f64 {
        let v: Vec<f64> = w
            .iter()
            .zip(z)
            .map(|(w, z)| energy_density(lam, mu, k, *w, *z))
            .collect();
        trapezoid(&v, dx)
    };
    let combo = |w: &[f64], z: &[f64]| -> Vec<f64> {
        w.iter().zip(z).map(|(w, z)| lam * w - mu * z).collect()
    };
    let mut ledger = EnergyLedger {
        k,
        times: Vec::with_capacity(run.snapshots.len()),
        quadratic: Vec::with_capacity(run.snapshots.len()),
        quadratic_x: Vec::with_capacity(run.snapshots.len()),
        dissipation: Vec::with_capacity(run.snapshots.len()),
    };
    for s in &run.snapshots {
        let st = State::new(run.grid, s.u.clone(), s.rho.clone(), s.t)?;
        let (w, z) = perturbation(&st, p, kind)?;
        let (w, z) = (w.values(), z.values());
        let (w_x, z_x) = (dx1_slice(w, dx), dx1_slice(z, dx));
        let (w_xx, z_xx) = (dx2_slice(w, dx), dx2_slice(z, dx));
        let sq = |v: &[f64]| l2_slice(v, dx).powi(2);
        let boundary = if kind.is_half_line() {
            -(lam * p.b * w[0] * w_x[0] + k * p.a * z[0] * z_x[0]
                - mu * (p.a * w[0] * z_x[0] + p.b * z[0] * w_x[0]))
        } else {
            0.0
        };
        ledger.times.push(s.t);
        ledger.quadratic.push(form(w, z));
        ledger.quadratic_x.push(form(&w_x, &z_x));
        ledger.dissipation.push(DissipationRow {
            w_x2: sq(&w_x),
            z_x2: sq(&z_x),
            good2: sq(&combo(w, z)),
            w_xx2: sq(&w_xx),
            z_xx2: sq(&z_xx),
            good_x2: sq(&combo(&w_x, &z_x)),
            boundary,
        });
    }
    Ok(ledger)
}
