use crate::error::{Error, Result};
use crate::model::{Field, Grid, ModelParams};
use crate::profile::{Profile, ProfileDomain};
use crate::stats::fit_line;
use crate::stencil::{lp_slice, NormKind};

/// The wave `(ū, ρ̄)(x,t) = (φ(ξ), (μ/λ) φ(ξ))`, `ξ = x/√(1+t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionWave {
    profile: Profile,
    params: ModelParams,
}

impl DiffusionWave {
    pub fn new(profile: Profile, params: ModelParams) -> Result<Self> {
        params.validate()?;
        if profile.params != params {
            return Err(Error::InvalidParams(
                "profile was built for different model parameters".into(),
            ));
        }
        Ok(Self { profile, params })
    }

    pub fn from_profile(profile: Profile) -> Self {
        let params = profile.params;
        Self { profile, params }
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn is_half_line(&self) -> bool {
        matches!(self.profile.domain, ProfileDomain::HalfLine { .. })
    }

    /// `[φ, φ', φ'', φ''', φ'''']` at `ξ`. `(φ, φ')` come from cubic Hermite
    /// interpolation of the samples; higher derivatives are obtained by
    /// differentiating the profile ODE. Outside the sampled range the end
    /// value is held and derivatives vanish.
    pub fn phi_derivatives(&self, xi: f64) -> [f64; 5] {
        let g = &self.profile.xi_grid;
        let phi = self.profile.phi.values();
        let dphi = self.profile.dphi.values();
        let n = g.n();
        let pos = (xi - g.x0()) / g.dx();
        if pos <= 0.0 {
            return self.clamped(0, xi);
        }
        if pos >= (n - 1) as f64 {
            return self.clamped(n - 1, xi);
        }
        let i = (pos.floor() as usize).min(n - 2);
        let s = pos - i as f64;
        let h = g.dx();
        let (x0, x1) = (g.node(i), g.node(i + 1));
        let dd0 = self.second(x0, phi[i], dphi[i]);
        let dd1 = self.second(x1, phi[i + 1], dphi[i + 1]);
        let p = hermite(s, h, phi[i], dphi[i], phi[i + 1], dphi[i + 1]);
        let d = hermite(s, h, dphi[i], dd0, dphi[i + 1], dd1);
        self.derivatives_from(xi, p, d)
    }

    fn clamped(&self, i: usize, xi: f64) -> [f64; 5] {
        let g = &self.profile.xi_grid;
        let p = self.profile.phi[i];
        if (xi - g.node(i)).abs() <= 1e-12 * g.dx() {
            return self.derivatives_from(xi, p, self.profile.dphi[i]);
        }
        [p, 0.0, 0.0, 0.0, 0.0]
    }

    fn second(&self, xi: f64, p: f64, d: f64) -> f64 {
        let c = self.params.chemo_coupling();
        (c * d * d - 0.5 * xi * d) / self.params.diffusivity(p)
    }

    fn derivatives_from(&self, xi: f64, p: f64, d1: f64) -> [f64; 5] {
        let c = self.params.chemo_coupling();
        let f = self.params.diffusivity(p);
        // f φ'' = c φ'² - (ξ/2) φ', differentiated twice with f' = -c φ'.
        let d2 = (c * d1 * d1 - 0.5 * xi * d1) / f;
        let d3 = (3.0 * c * d1 * d2 - 0.5 * d1 - 0.5 * xi * d2) / f;
        let d4 = (3.0 * c * d2 * d2 + 4.0 * c * d1 * d3 - d2 - 0.5 * xi * d3) / f;
        [p, d1, d2, d3, d4]
    }

    /// `∂_x^k ∂_t^j ū(x,t)` for the orders with `k + 2j ≤ 4`.
    pub fn wave_eval(&self, x: f64, t: f64, k: usize, j: usize) -> Result<f64> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidConfig(format!("time must be >= 0, got {t}")));
        }
        if k + 2 * j > 4 {
            return Err(Error::UnsupportedOrder { k, j });
        }
        let s = 1.0 + t;
        let r = s.sqrt();
        let xi = x / r;
        let d = self.phi_derivatives(xi);
        Ok(match (k, j) {
            (k, 0) => d[k] / r.powi(k as i32),
            (0, 1) => -xi * d[1] / (2.0 * s),
            (1, 1) => -(d[1] + xi * d[2]) / (2.0 * s * r),
            (2, 1) => -(xi * d[3] + 2.0 * d[2]) / (2.0 * s * s),
            (0, 2) => (xi * xi * d[2] + 3.0 * xi * d[1]) / (4.0 * s * s),
            _ => return Err(Error::UnsupportedOrder { k, j }),
        })
    }

    /// Same orders for `ρ̄ = (μ/λ) ū`.
    pub fn rho_bar_eval(&self, x: f64, t: f64, k: usize, j: usize) -> Result<f64> {
        Ok(self.params.darcy_ratio() * self.wave_eval(x, t, k, j)?)
    }

    pub fn u_bar(&self, x: f64, t: f64) -> f64 {
        self.phi_derivatives(x / (1.0 + t).sqrt())[0]
    }

    /// `(ū, ρ̄)` sampled on a grid at time `t`.
    pub fn sample(&self, grid: &Grid, t: f64) -> Result<(Field, Field)> {
        let ratio = self.params.darcy_ratio();
        let u: Vec<f64> = grid.nodes().map(|x| self.u_bar(x, t)).collect();
        let rho = u.iter().map(|v| ratio * v).collect();
        Ok((Field::new(u)?, Field::new(rho)?))
    }
}

#[inline]
fn hermite(s: f64, h: f64, y0: f64, m0: f64, y1: f64, m1: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * m0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * m1
}

/// Observed versus predicted power-law decay of `‖∂_x^k ∂_t^j ū(t)‖_{L^p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCheck {
    pub k: usize,
    pub j: usize,
    pub p: NormKind,
    /// `-k/2 - j + 1/(2p)`.
    pub predicted_exponent: f64,
    /// `None` when the norms vanish identically.
    pub observed_exponent: Option<f64>,
    pub r2: Option<f64>,
    pub norms: Vec<(f64, f64)>,
}

impl DecayCheck {
    pub fn is_degenerate(&self) -> bool {
        self.observed_exponent.is_none()
    }
}

/// Sample spacing in `ξ` for the decay table grids.
const DECAY_DXI: f64 = 0.02;

/// Evaluate the wave norms at `times` on grids of half-width
/// `10√(1+t_max)` whose nodes sit at the same `ξ` values for every time,
/// then fit a power law in `1+t`.
pub fn check_decay_table(
    wave: &DiffusionWave,
    times: &[f64],
    k: usize,
    j: usize,
    p: NormKind,
) -> Result<DecayCheck> {
    if k + j == 0 {
        return Err(Error::UnsupportedOrder { k, j });
    }
    if k + 2 * j > 4 {
        return Err(Error::UnsupportedOrder { k, j });
    }
    if times.len() < 2 || times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InsufficientData(
            "decay table needs at least two non-negative times".into(),
        ));
    }
    let t_min = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    if (1.0 + t_max) / (1.0 + t_min) < 10.0 {
        return Err(Error::InsufficientData(format!(
            "times must span a decade in 1+t, got [{t_min}, {t_max}]"
        )));
    }
    let half_width = 10.0 * (1.0 + t_max).sqrt();
    let mut norms = Vec::with_capacity(times.len());
    for &t in times {
        let dx = DECAY_DXI * (1.0 + t).sqrt();
        let m = (half_width / dx).ceil() as i64;
        let start = if wave.is_half_line() { 0 } else { -m };
        let vals: Vec<f64> = (start..=m)
            .map(|i| wave.wave_eval(i as f64 * dx, t, k, j))
            .collect::<Result<_>>()?;
        norms.push((t, lp_slice(&vals, dx, p)));
    }
    let predicted = -(k as f64) / 2.0 - j as f64 + p.reciprocal() / 2.0;
    if norms.iter().any(|(_, v)| !(*v > 0.0)) {
        return Ok(DecayCheck {
            k,
            j,
            p,
            predicted_exponent: predicted,
            observed_exponent: None,
            r2: None,
            norms,
        });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = norms.iter().map(|(t, v)| ((1.0 + t).ln(), v.ln())).unzip();
    let fit = fit_line(&x, &y).ok_or_else(|| Error::DegenerateFit("coincident times".into()))?;
    Ok(DecayCheck {
        k,
        j,
        p,
        predicted_exponent: predicted,
        observed_exponent: Some(fit.slope),
        r2: Some(fit.r2),
        norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{solve_profile_cauchy, solve_profile_halfline};
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn nonlinear() -> &'static DiffusionWave {
        static W: OnceLock<DiffusionWave> = OnceLock::new();
        W.get_or_init(|| {
            let p = ModelParams::new(1.0, 1.0, 1.0, 2.0, 1.5, -0.05, 0.08).unwrap();
            DiffusionWave::from_profile(solve_profile_cauchy(&p, 1e-8).unwrap())
        })
    }

    fn constant() -> DiffusionWave {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 1.0, 0.02, 0.02).unwrap();
        DiffusionWave::from_profile(solve_profile_cauchy(&p, 1e-8).unwrap())
    }

    #[test]
    fn constant_wave_values() {
        let w = constant();
        assert_eq!(w.wave_eval(3.0, 2.0, 0, 0).unwrap(), 0.02);
        assert_eq!(w.rho_bar_eval(-1.0, 0.0, 0, 0).unwrap(), 0.02);
        for (k, j) in [(1, 0), (2, 0), (0, 1), (1, 1), (0, 2), (4, 0)] {
            assert_eq!(w.rho_bar_eval(0.5, 1.0, k, j).unwrap(), 0.0);
        }
    }

    #[test]
    fn unit_ratio_rho_equals_u() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 1.0, -0.05, 0.05).unwrap();
        let w = DiffusionWave::from_profile(solve_profile_cauchy(&p, 1e-8).unwrap());
        for (k, j) in [(0, 0), (1, 0), (2, 1)] {
            assert_eq!(w.wave_eval(0.7, 1.5, k, j).unwrap(), w.rho_bar_eval(0.7, 1.5, k, j).unwrap());
        }
    }

    #[test]
    fn closed_forms_at_origin() {
        let w = nonlinear();
        let slope0 = w.profile().anchor().slope0;
        let ux = w.wave_eval(0.0, 3.0, 1, 0).unwrap();
        assert!((ux - slope0 / 2.0).abs() < 1e-14);
        assert_eq!(w.wave_eval(0.0, 7.0, 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn unsupported_orders_rejected() {
        let w = nonlinear();
        assert!(matches!(w.wave_eval(0.0, 1.0, 3, 1), Err(Error::UnsupportedOrder { .. })));
        assert!(matches!(w.wave_eval(0.0, 1.0, 1, 2), Err(Error::UnsupportedOrder { .. })));
        assert!(w.wave_eval(0.0, -0.5, 0, 0).is_err());
    }

    #[test]
    fn higher_derivatives_match_differences_of_lower() {
        // Each analytic derivative against a central difference of the one below.
        let w = nonlinear();
        let h = 1e-4;
        for xi in [-2.3, -0.7, 0.0, 0.4, 1.9] {
            let d = w.phi_derivatives(xi);
            let up = w.phi_derivatives(xi + h);
            let dn = w.phi_derivatives(xi - h);
            for order in 1..4 {
                let fd = (up[order] - dn[order]) / (2.0 * h);
                let scale = d[order + 1].abs().max(1e-3);
                assert!(
                    (fd - d[order + 1]).abs() < 1e-5 * scale.max(1.0),
                    "order {order} at xi {xi}: fd {fd}, analytic {}",
                    d[order + 1]
                );
            }
        }
    }

    #[test]
    fn space_and_time_derivatives_match_differences() {
        let w = nonlinear();
        let h = 1e-3;
        for &(x, t) in &[(0.8, 0.5), (-1.7, 2.0), (3.1, 4.5)] {
            let e = |xx: f64, tt: f64, k, j| w.wave_eval(xx, tt, k, j).unwrap();
            // x-derivatives
            for k in 0..4 {
                let fd = (e(x + h, t, k, 0) - e(x - h, t, k, 0)) / (2.0 * h);
                assert!((fd - e(x, t, k + 1, 0)).abs() < 1e-7, "k = {k}");
            }
            // t-derivatives
            let fd_t = (e(x, t + h, 0, 0) - e(x, t - h, 0, 0)) / (2.0 * h);
            assert!((fd_t - e(x, t, 0, 1)).abs() < 1e-8);
            let fd_xt = (e(x, t + h, 1, 0) - e(x, t - h, 1, 0)) / (2.0 * h);
            assert!((fd_xt - e(x, t, 1, 1)).abs() < 1e-8);
            let fd_xxt = (e(x, t + h, 2, 0) - e(x, t - h, 2, 0)) / (2.0 * h);
            assert!((fd_xxt - e(x, t, 2, 1)).abs() < 1e-8);
            let fd_tt = (e(x, t + h, 0, 1) - e(x, t - h, 0, 1)) / (2.0 * h);
            assert!((fd_tt - e(x, t, 0, 2)).abs() < 1e-8);
        }
    }

    #[test]
    fn range_bounds_hold() {
        let w = nonlinear();
        for i in -200..=200 {
            let v = w.u_bar(i as f64 * 0.1, 2.0);
            assert!((-0.05..=0.08).contains(&v));
        }
    }

    #[test]
    fn halfline_wave_pins_boundary() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 1.0, 0.01, 0.06).unwrap();
        let w = DiffusionWave::from_profile(solve_profile_halfline(&p, 0.03, 1e-8).unwrap());
        for t in [0.0, 1.0, 100.0] {
            assert_eq!(w.wave_eval(0.0, t, 0, 0).unwrap(), 0.03);
        }
        assert!(w.is_half_line());
    }

    #[test]
    fn params_mismatch_rejected() {
        let w = nonlinear();
        let mut other = *w.params();
        other.kappa = 0.5;
        assert!(DiffusionWave::new(w.profile().clone(), other).is_err());
        assert!(DiffusionWave::new(w.profile().clone(), *w.params()).is_ok());
    }

    #[test]
    fn decay_table_predictions() {
        let w = nonlinear();
        let times: Vec<f64> = (0..12).map(|i| 10.0 * 10f64.powf(i as f64 / 11.0 * 2.0)).collect();
        let c = check_decay_table(w, &times, 1, 0, NormKind::L2).unwrap();
        assert_eq!(c.predicted_exponent, -0.25);
        assert!((c.observed_exponent.unwrap() + 0.25).abs() < 1e-3);
        let c = check_decay_table(w, &times, 1, 0, NormKind::Inf).unwrap();
        assert_eq!(c.predicted_exponent, -0.5);
        assert!((c.observed_exponent.unwrap() + 0.5).abs() < 1e-3);
        let c = check_decay_table(w, &times, 1, 1, NormKind::L1).unwrap();
        assert_eq!(c.predicted_exponent, -1.0);
    }

    #[test]
    fn decay_table_constant_wave_is_degenerate() {
        let c = check_decay_table(&constant(), &[1.0, 50.0], 1, 0, NormKind::L2).unwrap();
        assert!(c.is_degenerate());
        assert!(c.norms.iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn decay_table_rejects_bad_requests() {
        let w = nonlinear();
        assert!(check_decay_table(w, &[1.0, 100.0], 0, 0, NormKind::L2).is_err());
        assert!(check_decay_table(w, &[1.0, 2.0], 1, 0, NormKind::L2).is_err());
    }

    proptest! {
        #[test]
        fn depends_only_on_similarity_variable(x in -30.0f64..30.0, t in 0.0f64..200.0, s in 0.0f64..200.0) {
            let w = nonlinear();
            let xs = x / (1.0 + t).sqrt() * (1.0 + s).sqrt();
            let a = w.wave_eval(x, t, 0, 0).unwrap();
            let b = w.wave_eval(xs, s, 0, 0).unwrap();
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }
}
