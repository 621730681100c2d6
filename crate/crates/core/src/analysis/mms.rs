use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_grid, ModelParams};
use crate::solver::{Closure, Scheme};

/// Closed-form target `(u*, ρ*)` for the manufactured-solution check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case", deny_unknown_fields)]
pub enum MmsTarget {
    Constant { u: f64, rho: f64 },
    /// `u* = ρ* = e^{-t} cos x`.
    DecayingCosine,
}

/// Value and first two space derivatives plus the time derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Jet {
    v: f64,
    x: f64,
    xx: f64,
    t: f64,
}

impl MmsTarget {
    fn jets(&self, x: f64, t: f64) -> (Jet, Jet) {
        match *self {
            MmsTarget::Constant { u, rho } => (
                Jet { v: u, x: 0.0, xx: 0.0, t: 0.0 },
                Jet { v: rho, x: 0.0, xx: 0.0, t: 0.0 },
            ),
            MmsTarget::DecayingCosine => {
                let e = (-t).exp();
                let j = Jet {
                    v: e * x.cos(),
                    x: -e * x.sin(),
                    xx: -e * x.cos(),
                    t: -e * x.cos(),
                };
                (j, j)
            }
        }
    }

    /// `(u*, ρ*)` at `(x, t)`.
    pub fn eval(&self, x: f64, t: f64) -> (f64, f64) {
        let (u, r) = self.jets(x, t);
        (u.v, r.v)
    }

    /// `(u*_x, ρ*_x)` at `(x, t)`.
    pub fn slope(&self, x: f64, t: f64) -> (f64, f64) {
        let (u, r) = self.jets(x, t);
        (u.x, r.x)
    }

    /// Source terms making the target an exact solution of the forced system.
    pub fn forcing(&self, p: &ModelParams, x: f64, t: f64) -> (f64, f64) {
        let (u, r) = self.jets(x, t);
        let su = u.t - p.a * u.xx + p.kappa * (u.x * r.x + u.v * r.xx);
        let sr = r.t - p.b * r.xx + p.lambda * r.v - p.mu * u.v;
        (su, sr)
    }
}

/// Left-end treatment of the manufactured problem. The right end is always
/// clamped to the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmsLeft {
    #[default]
    Clamp,
    ZeroSlope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmsConfig {
    pub params: ModelParams,
    pub x0: f64,
    pub length: f64,
    /// Coarsest spacing of the spatial ladder.
    pub dx: f64,
    /// Coarsest step of the spatial ladder; each level maps
    /// `(dx, dt) → (dx/2, dt/4)`.
    pub dt: f64,
    /// Coarsest step of the temporal ladder, run at the finest spatial `dx`.
    pub temporal_dt: f64,
    pub t_final: f64,
    pub levels: usize,
    pub target: MmsTarget,
    pub left: MmsLeft,
}

impl Default for MmsConfig {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
            x0: 0.0,
            length: std::f64::consts::PI,
            dx: std::f64::consts::PI / 20.0,
            dt: 0.02,
            temporal_dt: 0.1,
            t_final: 1.0,
            levels: 3,
            target: MmsTarget::DecayingCosine,
            left: MmsLeft::Clamp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmsLevel {
    pub dx: f64,
    pub dt: f64,
    pub err_u: f64,
    pub err_rho: f64,
}

impl MmsLevel {
    pub fn err(&self) -> f64 {
        self.err_u.max(self.err_rho)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmsReport {
    pub spatial: Vec<MmsLevel>,
    pub temporal: Vec<MmsLevel>,
    /// `log2(e_l / e_{l+1})` along the spatial ladder.
    pub spatial_orders: Vec<f64>,
    /// Error ratios `e_l / e_{l+1}` along the temporal ladder.
    pub temporal_ratios: Vec<f64>,
    pub temporal_orders: Vec<f64>,
}

impl MmsReport {
    pub fn min_spatial_order(&self) -> Option<f64> {
        self.spatial_orders.iter().copied().reduce(f64::min)
    }
}

/// Max error of the forced scheme against the target at `t_final`.
pub fn mms_error(cfg: &MmsConfig, dx: f64, dt: f64) -> Result<MmsLevel> {
    let cells = cfg.length / dx;
    if !(cells.is_finite() && cells >= 2.0) || (cells - cells.round()).abs() > 1e-6 * cells {
        return Err(Error::InvalidConfig(format!(
            "length {} is not a whole multiple of dx = {dx}",
            cfg.length
        )));
    }
    let steps_f = cfg.t_final / dt;
    if !(steps_f.is_finite() && steps_f >= 1.0) || (steps_f - steps_f.round()).abs() > 1e-6 * steps_f {
        return Err(Error::InvalidConfig(format!(
            "t_final {} is not a whole multiple of dt = {dt}",
            cfg.t_final
        )));
    }
    let grid = build_grid(cfg.x0, cfg.length, cells.round() as usize + 1)?;
    let steps = steps_f.round() as usize;
    let target = cfg.target;
    if cfg.left == MmsLeft::ZeroSlope {
        let (su, sr) = target.slope(cfg.x0, 0.0);
        let (su1, sr1) = target.slope(cfg.x0, cfg.t_final);
        if su.abs().max(sr.abs()).max(su1.abs()).max(sr1.abs()) > 1e-12 {
            return Err(Error::Compatibility(
                "zero-slope left end needs a target with vanishing slope there".into(),
            ));
        }
    }
    let xs: Vec<f64> = grid.nodes().collect();
    let scheme = Scheme {
        params: cfg.params,
        dx: grid.dx(),
        dt,
        upwind: false,
    };
    let (mut u, mut rho): (Vec<f64>, Vec<f64>) = xs.iter().map(|&x| target.eval(x, 0.0)).unzip();
    for n in 1..=steps {
        let t = n as f64 * dt;
        let (su, sr): (Vec<f64>, Vec<f64>) = xs.iter().map(|&x| target.forcing(&cfg.params, x, t)).unzip();
        let clamp = |x: f64| {
            let (u, rho) = target.eval(x, t);
            Closure::Clamp { u, rho }
        };
        let left = match cfg.left {
            MmsLeft::Clamp => clamp(grid.x0()),
            MmsLeft::ZeroSlope => Closure::ZeroSlope,
        };
        (u, rho) = scheme.advance(&u, &rho, left, clamp(grid.last()), Some((&su, &sr)))?;
    }
    let t = steps as f64 * dt;
    let mut level = MmsLevel {
        dx: grid.dx(),
        dt,
        err_u: 0.0,
        err_rho: 0.0,
    };
    for (i, &x) in xs.iter().enumerate() {
        let (ue, re) = target.eval(x, t);
        level.err_u = level.err_u.max((u[i] - ue).abs());
        level.err_rho = level.err_rho.max((rho[i] - re).abs());
    }
    if !(level.err().is_finite()) {
        return Err(Error::BlowUp {
            t,
            reason: "manufactured run produced non-finite values".into(),
        });
    }
    Ok(level)
}

fn ratio_order(a: f64, b: f64) -> (f64, f64) {
    let r = a / b;
    (r, r.log2())
}

/// Spatial ladder `(dx, dt) → (dx/2, dt/4)` and temporal ladder halving
/// `dt` at the finest `dx`, with observed orders.
pub fn manufactured_residual(cfg: &MmsConfig) -> Result<MmsReport> {
    cfg.params.validate()?;
    if cfg.levels < 2 {
        return Err(Error::InsufficientData(format!(
            "a ladder needs at least 2 levels, got {}",
            cfg.levels
        )));
    }
    let mut spatial = Vec::with_capacity(cfg.levels);
    for l in 0..cfg.levels {
        let s = 2f64.powi(l as i32);
        spatial.push(mms_error(cfg, cfg.dx / s, cfg.dt / (s * s))?);
    }
    let fine_dx = spatial[cfg.levels - 1].dx;
    let mut temporal = Vec::with_capacity(cfg.levels);
    for l in 0..cfg.levels {
        temporal.push(mms_error(cfg, fine_dx, cfg.temporal_dt / 2f64.powi(l as i32))?);
    }
    let spatial_orders = spatial.windows(2).map(|w| ratio_order(w[0].err(), w[1].err()).1).collect();
    let (temporal_ratios, temporal_orders) = temporal
        .windows(2)
        .map(|w| ratio_order(w[0].err(), w[1].err()))
        .unzip();
    Ok(MmsReport {
        spatial,
        temporal,
        spatial_orders,
        temporal_ratios,
        temporal_orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forcing_matches_finite_differences() {
        let p = ModelParams {
            kappa: 0.7,
            b: 1.3,
            ..ModelParams::default()
        };
        let t = MmsTarget::DecayingCosine;
        let h = 1e-4;
        let (x, s) = (0.8, 0.4);
        let u = |x: f64, s: f64| t.eval(x, s).0;
        let r = |x: f64, s: f64| t.eval(x, s).1;
        let d_t = |f: &dyn Fn(f64, f64) -> f64| (f(x, s + h) - f(x, s - h)) / (2.0 * h);
        let flux = |y: f64| u(y, s) * (r(y + h, s) - r(y - h, s)) / (2.0 * h);
        let flux_x = (flux(x + h) - flux(x - h)) / (2.0 * h);
        let lap = |f: &dyn Fn(f64, f64) -> f64| (f(x + h, s) - 2.0 * f(x, s) + f(x - h, s)) / (h * h);
        let su = d_t(&u) - p.a * lap(&u) + p.kappa * flux_x;
        let sr = d_t(&r) - p.b * lap(&r) + p.lambda * r(x, s) - p.mu * u(x, s);
        let (fu, fr) = t.forcing(&p, x, s);
        assert!((fu - su).abs() < 1e-6 && (fr - sr).abs() < 1e-6);
    }

    #[test]
    fn constant_target_is_exact() {
        let p = ModelParams::default();
        let cfg = MmsConfig {
            target: MmsTarget::Constant {
                u: 0.3,
                rho: p.mu / p.lambda * 0.3,
            },
            ..MmsConfig::default()
        };
        assert_eq!(cfg.target.forcing(&p, 1.0, 1.0), (0.0, 0.0));
        let l = mms_error(&cfg, cfg.dx, cfg.dt).unwrap();
        assert!(l.err() < 1e-14, "{}", l.err());
    }

    #[test]
    fn zero_slope_needs_flat_target() {
        let cfg = MmsConfig {
            x0: 0.5,
            left: MmsLeft::ZeroSlope,
            ..MmsConfig::default()
        };
        assert!(matches!(mms_error(&cfg, cfg.dx, cfg.dt), Err(Error::Compatibility(_))));
    }

    #[test]
    fn default_ladder_orders() {
        let rep = manufactured_residual(&MmsConfig::default()).unwrap();
        assert!(rep.min_spatial_order().unwrap() >= 1.8, "{rep:?}");
        for r in &rep.temporal_ratios {
            assert!((1.7..=2.3).contains(r), "{rep:?}");
        }
    }

    #[test]
    fn zero_slope_ladder_orders() {
        let cfg = MmsConfig {
            left: MmsLeft::ZeroSlope,
            ..MmsConfig::default()
        };
        let rep = manufactured_residual(&cfg).unwrap();
        assert!(rep.min_spatial_order().unwrap() >= 1.8, "{rep:?}");
    }
}
