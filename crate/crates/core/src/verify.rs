//! Self-checks of the numerical building blocks against closed-form or
//! brute-force oracles, bundled into one pass/fail report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    heat_oracle, is_positive_definite, manufactured_residual, weight_identity_check, KernelDomain, MmsConfig,
    WeightKernel, DEFAULT_ALPHA,
};
use crate::error::{Error, Result};
use crate::model::{build_grid, Grid, ModelParams};
use crate::profile::solve_profile_cauchy;
use crate::solver::{run, InitialData, InitialShape, ProblemKind, RunSetup};
use crate::stencil::{dx1_slice, dx2_slice};
use crate::tridiag::{tridiag_apply, tridiag_solve};
use crate::DiffusionWave;

/// Finest spacing a ladder must reach for its order estimate to count.
pub const MAX_FINEST_DX: f64 = 0.25;
/// Fewest levels a ladder must have for its order estimate to count.
pub const MIN_LADDER_LEVELS: usize = 3;

/// Heat-equation ladder: a `κ = 0` Cauchy run with a Gaussian bacteria
/// perturbation, `dt = dx²`, refined by `(dx, dt) → (dx/2, dt/4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatLadderConfig {
    pub a: f64,
    pub amp: f64,
    pub sigma: f64,
    pub half_width: f64,
    pub dx: f64,
    pub t_final: f64,
    pub levels: usize,
}

impl Default for HeatLadderConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            amp: 0.01,
            sigma: 1.0,
            half_width: 40.0,
            dx: 0.2,
            t_final: 10.0,
            levels: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatLevel {
    pub dx: f64,
    pub dt: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatLadder {
    pub levels: Vec<HeatLevel>,
    /// `e_l / e_{l+1}`.
    pub ratios: Vec<f64>,
}

/// Max error of the bacteria density against [`heat_oracle`] at `t_final`
/// on each level of the ladder.
pub fn heat_oracle_ladder(cfg: &HeatLadderConfig) -> Result<HeatLadder> {
    let params = ModelParams {
        a: cfg.a,
        kappa: 0.0,
        u_minus: 0.0,
        u_plus: 0.0,
        ..ModelParams::default()
    };
    let wave = DiffusionWave::new(solve_profile_cauchy(&params, crate::profile::DEFAULT_TOL)?, params)?;
    let kind = ProblemKind::Cauchy {
        wave,
        half_width: cfg.half_width,
    };
    let initial = InitialData {
        w0: InitialShape::Zero,
        z0: InitialShape::GaussianBump {
            amp: cfg.amp,
            center: 0.0,
            sigma: cfg.sigma,
        },
    };
    let mut levels = Vec::with_capacity(cfg.levels);
    for l in 0..cfg.levels {
        let dx = cfg.dx / 2f64.powi(l as i32);
        let dt = dx * dx;
        let config = RunSetup::new(params, kind.clone(), dx, dt, cfg.t_final)
            .with_initial(initial.clone())
            .build()?;
        let res = run(&config)?;
        let last = res
            .last()
            .ok_or_else(|| Error::InsufficientData("run produced no snapshot".into()))?;
        let max_error = res
            .grid
            .nodes()
            .zip(last.u.values())
            .map(|(x, u)| (u - heat_oracle(cfg.a, cfg.amp, cfg.sigma, x, last.t)).abs())
            .fold(0.0, f64::max);
        levels.push(HeatLevel { dx, dt, max_error });
    }
    let ratios = levels.windows(2).map(|w| w[0].max_error / w[1].max_error).collect();
    Ok(HeatLadder { levels, ratios })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    InsufficientRefinement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    /// Named numbers behind the verdict.
    pub values: Vec<(String, f64)>,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, values: Vec<(&str, f64)>, detail: String) -> Self {
        Self {
            name: name.into(),
            status: if passed { CheckStatus::Pass } else { CheckStatus::Fail },
            values: values.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            detail,
        }
    }

    fn errored(name: &str, e: &Error) -> Self {
        Self::new(name, false, Vec::new(), format!("error: {e}"))
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub heat: HeatLadderConfig,
    pub mms: MmsConfig,
    /// Accepted band for the heat-ladder error ratios.
    pub heat_ratio: (f64, f64),
    pub mms_min_spatial_order: f64,
    /// Accepted band for the temporal-ladder error ratios.
    pub mms_temporal_ratio: (f64, f64),
    pub alpha: f64,
    pub pd_samples: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            heat: HeatLadderConfig::default(),
            mms: MmsConfig::default(),
            heat_ratio: (3.4, 4.6),
            mms_min_spatial_order: 1.8,
            mms_temporal_ratio: (1.7, 2.3),
            alpha: DEFAULT_ALPHA,
            pd_samples: 1000,
            seed: 0,
        }
    }
}

/// Test hooks that deliberately break a component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FaultHooks {
    /// Scale the second-difference stencil by `1 + 1e-3`.
    pub broken_stencil: bool,
}

fn ladder_guard(levels: usize, finest_dx: f64) -> Option<String> {
    if levels < MIN_LADDER_LEVELS {
        Some(format!("{levels} levels, need {MIN_LADDER_LEVELS}"))
    } else if finest_dx > MAX_FINEST_DX {
        Some(format!("finest dx = {finest_dx} exceeds {MAX_FINEST_DX}"))
    } else {
        None
    }
}

fn insufficient(mut c: CheckResult, why: String) -> CheckResult {
    c.status = CheckStatus::InsufficientRefinement;
    c.detail = format!("insufficient refinement: {why}");
    c
}

fn check_stencils(hooks: FaultHooks) -> CheckResult {
    let g = match build_grid(0.0, 1.0, 11) {
        Ok(g) => g,
        Err(e) => return CheckResult::errored("stencil_exactness", &e),
    };
    let quad: Vec<f64> = g.nodes().map(|x| x * x).collect();
    let mut d2 = dx2_slice(&quad, g.dx());
    if hooks.broken_stencil {
        for v in &mut d2 {
            *v *= 1.0 + 1e-3;
        }
    }
    let d1 = dx1_slice(&quad, g.dx());
    let e2 = d2.iter().map(|v| (v - 2.0).abs()).fold(0.0, f64::max);
    let e1 = g
        .nodes()
        .zip(&d1)
        .map(|(x, v)| (v - 2.0 * x).abs())
        .fold(0.0, f64::max);
    CheckResult::new(
        "stencil_exactness",
        e1 <= 1e-12 && e2 <= 1e-10,
        vec![("dx1_error", e1), ("dx2_error", e2)],
        "first and second differences of x² on [0, 1], n = 11".into(),
    )
}

/// Dense Gaussian elimination with partial pivoting.
fn dense_solve(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Vec<f64> {
    let n = r.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap_or(c);
        m.swap(c, p);
        r.swap(c, p);
        for i in c + 1..n {
            let f = m[i][c] / m[c][c];
            for j in c..n {
                m[i][j] -= f * m[c][j];
            }
            r[i] -= f * r[c];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    x
}

fn check_tridiag(seed: u64) -> CheckResult {
    let n = 50;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let upper: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let diag: Vec<f64> = (0..n)
        .map(|i| lower[i].abs() + upper[i].abs() + rng.gen_range(0.5..2.0))
        .collect();
    let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut dense = vec![vec![0.0; n]; n];
    for i in 0..n {
        dense[i][i] = diag[i];
        if i > 0 {
            dense[i][i - 1] = lower[i];
        }
        if i + 1 < n {
            dense[i][i + 1] = upper[i];
        }
    }
    let oracle = dense_solve(dense, rhs.clone());
    match tridiag_solve(&lower, &diag, &upper, &rhs) {
        Ok(x) => {
            let err = x.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let back = tridiag_apply(&lower, &diag, &upper, &x)
                .iter()
                .zip(&rhs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            CheckResult::new(
                "tridiagonal_vs_dense",
                err <= 1e-10,
                vec![("max_difference", err), ("residual", back)],
                "random diagonally dominant system, n = 50".into(),
            )
        }
        Err(e) => CheckResult::errored("tridiagonal_vs_dense", &e),
    }
}

fn check_heat(cfg: &VerifyConfig) -> CheckResult {
    let name = "heat_oracle_ladder";
    let h = &cfg.heat;
    let finest = h.dx / 2f64.powi(h.levels.saturating_sub(1) as i32);
    if let Some(why) = ladder_guard(h.levels, finest) {
        return insufficient(CheckResult::new(name, false, Vec::new(), String::new()), why);
    }
    let ladder = match heat_oracle_ladder(&cfg.heat) {
        Ok(l) => l,
        Err(e) => return CheckResult::errored(name, &e),
    };
    let (lo, hi) = cfg.heat_ratio;
    let ok = !ladder.ratios.is_empty() && ladder.ratios.iter().all(|r| (lo..=hi).contains(r));
    let mut values: Vec<(&str, f64)> = Vec::new();
    let keys = ["error_0", "error_1", "error_2", "error_3", "error_4"];
    for (k, l) in keys.iter().zip(&ladder.levels) {
        values.push((k, l.max_error));
    }
    let rkeys = ["ratio_0", "ratio_1", "ratio_2", "ratio_3"];
    for (k, r) in rkeys.iter().zip(&ladder.ratios) {
        values.push((k, *r));
    }
    CheckResult::new(
        name,
        ok,
        values,
        format!("error ratios {:?}, accepted band [{lo}, {hi}]", ladder.ratios),
    )
}

fn check_mms(cfg: &VerifyConfig) -> CheckResult {
    let name = "manufactured_solution_ladder";
    let m = &cfg.mms;
    let finest = m.dx / 2f64.powi(m.levels.saturating_sub(1) as i32);
    if let Some(why) = ladder_guard(m.levels, finest) {
        return insufficient(CheckResult::new(name, false, Vec::new(), String::new()), why);
    }
    let rep = match manufactured_residual(&cfg.mms) {
        Ok(r) => r,
        Err(e) => return CheckResult::errored(name, &e),
    };
    let order = rep.min_spatial_order().unwrap_or(f64::NAN);
    let (lo, hi) = cfg.mms_temporal_ratio;
    let ok = order >= cfg.mms_min_spatial_order && rep.temporal_ratios.iter().all(|r| (lo..=hi).contains(r));
    let worst_ratio = rep
        .temporal_ratios
        .iter()
        .copied()
        .max_by(|a, b| (a - 2.0).abs().total_cmp(&(b - 2.0).abs()))
        .unwrap_or(f64::NAN);
    CheckResult::new(
        name,
        ok,
        vec![("min_spatial_order", order), ("worst_temporal_ratio", worst_ratio)],
        format!(
            "spatial orders {:?}, temporal ratios {:?}",
            rep.spatial_orders, rep.temporal_ratios
        ),
    )
}

fn check_weight(cfg: &VerifyConfig) -> CheckResult {
    let name = "weight_identities";
    let run_check = || -> Result<(f64, f64, f64, f64)> {
        let full = WeightKernel::new(cfg.alpha, KernelDomain::FullLine)?;
        let half = WeightKernel::new(cfg.alpha, KernelDomain::HalfLine)?;
        let resid = |dx: f64| -> Result<f64> {
            let n = (40.0 / dx).round() as usize + 1;
            let g = Grid::with_spacing(-20.0, dx, n)?;
            Ok(weight_identity_check(&full, &g, 1.0)?.max())
        };
        let (a, b) = (resid(0.04)?, resid(0.02)?);
        let pi = std::f64::consts::PI;
        let e_full = (full.g(1e4, 2.0) - (pi / cfg.alpha).sqrt()).abs();
        let e_half = (half.g(1e4, 2.0) - 0.5 * (pi / cfg.alpha).sqrt()).abs();
        Ok(((a / b).log2(), b, e_full, e_half))
    };
    match run_check() {
        Ok((order, resid, e_full, e_half)) => CheckResult::new(
            name,
            (1.8..=2.2).contains(&order) && e_full <= 1e-10 && e_half <= 1e-10,
            vec![
                ("identity_order", order),
                ("identity_residual", resid),
                ("g_sup_full_error", e_full),
                ("g_sup_half_error", e_half),
            ],
            format!("alpha = {}", cfg.alpha),
        ),
        Err(e) => CheckResult::errored(name, &e),
    }
}

fn check_positive_definite(cfg: &VerifyConfig) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut mismatches = 0usize;
    for _ in 0..cfg.pd_samples {
        let (l, m, k): (f64, f64, f64) = (
            rng.gen_range(0.05..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(0.05..3.0),
        );
        // Minimum of the form on the unit circle is the smaller eigenvalue.
        let (p, q) = (0.5 * l, 0.5 * k);
        let min_eig = 0.5 * (p + q) - (0.25 * (p - q).powi(2) + 0.25 * m * m).sqrt();
        if is_positive_definite(l, m, k) != (min_eig > 0.0) {
            mismatches += 1;
        }
    }
    CheckResult::new(
        "positive_definiteness",
        mismatches == 0,
        vec![("mismatches", mismatches as f64), ("samples", cfg.pd_samples as f64)],
        "determinant test against the smallest eigenvalue".into(),
    )
}

/// Run every check; failures are report content, not errors.
pub fn run_verification(cfg: &VerifyConfig, hooks: FaultHooks) -> VerifyReport {
    let checks = vec![
        check_stencils(hooks),
        check_tridiag(cfg.seed),
        check_heat(cfg),
        check_mms(cfg),
        check_weight(cfg),
        check_positive_definite(cfg),
    ];
    for c in &checks {
        log::info!("verify {}: {:?} {}", c.name, c.status, c.detail);
    }
    VerifyReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solver_on_known_system() {
        let m = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = dense_solve(m, vec![3.0, 5.0]);
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
    }

    #[test]
    fn stencil_fault_is_detected() {
        assert!(check_stencils(FaultHooks::default()).passed());
        assert_eq!(
            check_stencils(FaultHooks { broken_stencil: true }).status,
            CheckStatus::Fail
        );
    }

    #[test]
    fn fast_checks_pass() {
        let cfg = VerifyConfig::default();
        for c in [check_tridiag(7), check_weight(&cfg), check_positive_definite(&cfg)] {
            assert!(c.passed(), "{c:?}");
        }
    }

    #[test]
    fn coarse_ladder_is_not_a_pass() {
        let cfg = VerifyConfig {
            heat: HeatLadderConfig {
                dx: 0.8,
                levels: 2,
                ..HeatLadderConfig::default()
            },
            mms: MmsConfig {
                dx: std::f64::consts::PI / 2.0,
                ..MmsConfig::default()
            },
            ..VerifyConfig::default()
        };
        let c = check_heat(&cfg);
        assert_eq!(c.status, CheckStatus::InsufficientRefinement);
        assert!(c.detail.contains("insufficient refinement"));
        assert_eq!(check_mms(&cfg).status, CheckStatus::InsufficientRefinement);
    }

    #[test]
    fn default_verification_passes() {
        let rep = run_verification(&VerifyConfig::default(), FaultHooks::default());
        let failed: Vec<_> = rep.failures().collect();
        assert!(failed.is_empty(), "{failed:?}");
    }
}
