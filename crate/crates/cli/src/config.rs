//! Experiment configuration. Every field has a default, so an empty file is
//! a valid config; unknown keys are rejected.

use std::path::{Path, PathBuf};

use diffwave::analysis::DEFAULT_ALPHA;
use diffwave::profile::DEFAULT_TOL;
use diffwave::solver::{InitialData, InitialShape};
use diffwave::verify::VerifyConfig;
use diffwave::ModelParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindName {
    #[default]
    Cauchy,
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: KindName,
    /// Cauchy half width. Defaults to the smallest whole number of cells
    /// covering `8√(1+t_final)` plus the support radius of the data.
    pub half_width: Option<f64>,
    /// Half-line width, same default rule as `half_width`.
    pub width: Option<f64>,
    /// Dirichlet boundary value, defaults to `(u_minus + u_plus)/2`.
    pub beta: Option<f64>,
    /// Profile written by `diffwave profile`. When absent the profile is
    /// solved before the run.
    pub profile_file: Option<PathBuf>,
    pub profile_tol: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            kind: KindName::Cauchy,
            half_width: None,
            width: None,
            beta: None,
            profile_file: None,
            profile_tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dx: f64,
    pub dt: f64,
    pub t_final: f64,
    pub upwind: bool,
    pub enforce_width_rule: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dx: 0.1,
            dt: 0.05,
            t_final: 10.0,
            upwind: false,
            enforce_width_rule: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotPolicy {
    None,
    #[default]
    Final,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Toml,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Toml => "toml",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Snapshots every `dt_early` up to `t_switch`, then geometric with
    /// `ratio`.
    pub t_switch: f64,
    pub dt_early: f64,
    pub ratio: f64,
    pub snapshots: SnapshotPolicy,
    pub report_format: ReportFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            t_switch: 10.0,
            dt_early: 0.25,
            ratio: 1.02,
            snapshots: SnapshotPolicy::Final,
            report_format: ReportFormat::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub alpha: f64,
    /// Energy weight `K`, defaults to `2μ²/λ + 1`.
    pub k: Option<f64>,
    /// Rate-fit window, defaults to `[t_final/10, t_final]`.
    pub fit_window: Option<[f64; 2]>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            k: None,
            fit_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// One of `amp`, `a`, `b`, `lambda`, `mu`, `kappa`, `u_minus`,
    /// `u_plus`, `beta`, `dx`, `dt`, `t_final`, `alpha`.
    pub axis: String,
    pub values: Vec<f64>,
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis: "amp".into(),
            values: Vec::new(),
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub problem: ProblemConfig,
    pub grid: GridConfig,
    pub output: OutputConfig,
    pub initial: InitialData,
    pub analysis: AnalysisConfig,
    pub verify: VerifyConfig,
    pub sweep: SweepConfig,
}

pub const SWEEP_AXES: [&str; 13] = [
    "amp", "a", "b", "lambda", "mu", "kappa", "u_minus", "u_plus", "beta", "dx", "dt", "t_final", "alpha",
];

fn scale_amp(shape: &mut InitialShape, v: f64) {
    match shape {
        InitialShape::Zero => {}
        InitialShape::GaussianBump { amp, .. }
        | InitialShape::SmoothedStep { amp, .. }
        | InitialShape::FilteredNoise { amp, .. } => *amp = v,
    }
}

impl ExperimentConfig {
    /// Parse TOML text. A run manifest is also accepted: its `[config]`
    /// table is the effective configuration of the run.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let value: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let table = match (value.get("config"), value.get("provenance")) {
            (Some(toml::Value::Table(c)), Some(_)) => c.clone(),
            _ => value,
        };
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Replace every random seed. Shapes of `w0` and `z0` get `seed` and
    /// `seed + 1` so the two perturbations stay independent.
    pub fn override_seed(&mut self, seed: u64) {
        for (shape, s) in [(&mut self.initial.w0, seed), (&mut self.initial.z0, seed.wrapping_add(1))] {
            if let InitialShape::FilteredNoise { seed, .. } = shape {
                *seed = s;
            }
        }
        self.verify.seed = seed;
    }

    /// Copy with one sweep axis set to `value`.
    pub fn with_axis(&self, axis: &str, value: f64) -> Result<Self, CliError> {
        let mut c = self.clone();
        match axis {
            "amp" => {
                scale_amp(&mut c.initial.w0, value);
                scale_amp(&mut c.initial.z0, value);
            }
            "a" => c.model.a = value,
            "b" => c.model.b = value,
            "lambda" => c.model.lambda = value,
            "mu" => c.model.mu = value,
            "kappa" => c.model.kappa = value,
            "u_minus" => c.model.u_minus = value,
            "u_plus" => c.model.u_plus = value,
            "beta" => c.problem.beta = Some(value),
            "dx" => c.grid.dx = value,
            "dt" => c.grid.dt = value,
            "t_final" => c.grid.t_final = value,
            "alpha" => c.analysis.alpha = value,
            other => {
                return Err(CliError::Config(format!(
                    "unknown sweep axis `{other}`, expected one of {}",
                    SWEEP_AXES.join(", ")
                )))
            }
        }
        Ok(c)
    }

    /// Checks that do not need the profile: parameters, shapes and the
    /// scalar knobs.
    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate()?;
        self.initial.w0.validate()?;
        self.initial.z0.validate()?;
        let positive = [
            ("grid.dx", self.grid.dx),
            ("grid.dt", self.grid.dt),
            ("output.dt_early", self.output.dt_early),
            ("analysis.alpha", self.analysis.alpha),
            ("problem.profile_tol", self.problem.profile_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.grid.t_final.is_finite() && self.grid.t_final >= 0.0) {
            return Err(CliError::Config(format!(
                "grid.t_final must be non-negative, got {}",
                self.grid.t_final
            )));
        }
        if !(self.output.ratio.is_finite() && self.output.ratio > 1.0) {
            return Err(CliError::Config(format!(
                "output.ratio must exceed 1, got {}",
                self.output.ratio
            )));
        }
        if let Some([lo, hi]) = self.analysis.fit_window {
            if !(lo < hi) {
                return Err(CliError::Config(format!("analysis.fit_window [{lo}, {hi}] is empty")));
            }
        }
        if let Some(k) = self.analysis.k {
            if !diffwave::analysis::is_positive_definite(self.model.lambda, self.model.mu, k) {
                return Err(CliError::Config(format!(
                    "analysis.k = {k} must satisfy lambda*k > mu^2"
                )));
            }
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.problem
            .beta
            .unwrap_or(0.5 * (self.model.u_minus + self.model.u_plus))
    }

    /// Domain extent for the configured kind, applying the width default.
    pub fn extent(&self) -> f64 {
        let explicit = match self.problem.kind {
            KindName::Cauchy => self.problem.half_width,
            _ => self.problem.width,
        };
        explicit.unwrap_or_else(|| {
            let need = 8.0 * (1.0 + self.grid.t_final).sqrt() + self.initial.support_radius();
            let cells = (need / self.grid.dx - 1e-9).ceil().max(4.0);
            cells * self.grid.dx
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_complete() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn partial_tables_keep_defaults() {
        let c = ExperimentConfig::from_toml("[model]\nkappa = 0.5\n").unwrap();
        assert_eq!(c.model.kappa, 0.5);
        assert_eq!(c.model.a, ModelParams::default().a);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in ["bogus = 1", "[model]\nkapa = 1.0", "[grid]\ndx = 0.1\nnodes = 3"] {
            assert!(matches!(ExperimentConfig::from_toml(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = ExperimentConfig::default();
        c.initial = InitialData::both(InitialShape::GaussianBump {
            amp: 0.01,
            center: 1.0,
            sigma: 2.0,
        });
        c.analysis.fit_window = Some([4.0, 40.0]);
        c.problem.beta = Some(0.01);
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn bound_violation_names_the_bound() {
        let c = ExperimentConfig::from_toml("[model]\nu_plus = 1.5\n").unwrap();
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("u_plus") && msg.contains("a·λ/(κ·μ)"), "{msg}");
    }

    #[test]
    fn sweep_axes_and_seed() {
        let mut c = ExperimentConfig::default();
        c.initial.z0 = InitialShape::FilteredNoise {
            seed: 1,
            cutoff: 1.0,
            amp: 0.1,
            center: 0.0,
            width: 1.0,
            modes: 4,
        };
        for axis in SWEEP_AXES {
            c.with_axis(axis, 0.02).unwrap();
        }
        assert!(c.with_axis("sigma", 1.0).is_err());
        assert_eq!(c.with_axis("amp", 0.3).unwrap().initial.amplitude(), 0.3);
        c.override_seed(42);
        assert!(matches!(c.initial.z0, InitialShape::FilteredNoise { seed: 43, .. }));
        assert_eq!(c.verify.seed, 42);
    }

    #[test]
    fn default_extent_is_whole_cells() {
        let c = ExperimentConfig::default();
        let e = c.extent();
        assert!(e >= 8.0 * 11f64.sqrt());
        assert!(((e / c.grid.dx) - (e / c.grid.dx).round()).abs() < 1e-9);
    }
}
