//! IMEX finite-difference integration of the Keller–Segel system on a
//! truncated line or a half line.
//!
//! Diffusion (and the `λρ` decay) is backward Euler; the chemotactic flux
//! `κ u ρ_x` is explicit and in conservative form at half nodes. The
//! chemical update uses the freshly advanced `u`.

mod initial;
mod io;
mod run;
mod scheme;

pub use initial::{CompiledShape, InitialData, InitialShape};
pub use io::{format_snapshot, parse_snapshot, write_snapshot, SnapshotDump};
pub use run::{run, run_partial, RunResult, Snapshot, SnapshotDiag};
pub use scheme::{apply_boundary, init_state, step, Closure, Scheme, BLOWUP_LIMIT};

use crate::error::{Error, Result};
use crate::model::{build_grid, Field, Grid, ModelParams};
use crate::profile::{DiffusionWave, ProfileDomain};
use crate::stencil::dx1;

/// Which initial(-boundary) value problem is integrated.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKind {
    /// `x ∈ [-half_width, half_width]`, ends clamped to the far fields.
    Cauchy {
        wave: DiffusionWave,
        half_width: f64,
    },
    /// `x ∈ [0, width]` with `(u, ρ)(0,t) = (β, μβ/λ)`.
    Dirichlet {
        beta: f64,
        wave: DiffusionWave,
        width: f64,
    },
    /// `x ∈ [0, width]` with `u_x = ρ_x = 0` at `x = 0`, perturbing the
    /// constant state `(u+, μu+/λ)`.
    Neumann { width: f64 },
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::Cauchy { .. } => "cauchy",
            ProblemKind::Dirichlet { .. } => "dirichlet",
            ProblemKind::Neumann { .. } => "neumann",
        }
    }

    pub fn is_half_line(&self) -> bool {
        !matches!(self, ProblemKind::Cauchy { .. })
    }

    pub fn wave(&self) -> Option<&DiffusionWave> {
        match self {
            ProblemKind::Cauchy { wave, .. } | ProblemKind::Dirichlet { wave, .. } => Some(wave),
            ProblemKind::Neumann { .. } => None,
        }
    }

    /// `(left end, length)` of the computational interval.
    pub fn span(&self) -> (f64, f64) {
        match *self {
            ProblemKind::Cauchy { half_width, .. } => (-half_width, 2.0 * half_width),
            ProblemKind::Dirichlet { width, .. } | ProblemKind::Neumann { width } => (0.0, width),
        }
    }

    /// Uniform grid of spacing `dx`; the span must be a whole number of cells.
    pub fn grid(&self, dx: f64) -> Result<Grid> {
        let (x0, length) = self.span();
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::InvalidConfig(format!("dx must be positive, got {dx}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidConfig(format!("domain length must be positive, got {length}")));
        }
        let cells = length / dx;
        let whole = cells.round();
        if (cells - whole).abs() > 1e-6 * cells.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "domain length {length} is not a whole multiple of dx = {dx}"
            )));
        }
        build_grid(x0, length, whole as usize + 1)
    }

    /// Reference state `(ū, ρ̄)(·, t)` that perturbations are measured against.
    pub fn reference(&self, params: &ModelParams, grid: &Grid, t: f64) -> Result<(Field, Field)> {
        match self.wave() {
            Some(w) => w.sample(grid, t),
            None => Ok((
                Field::constant(grid.n(), params.u_plus),
                Field::constant(grid.n(), params.rho_plus()),
            )),
        }
    }

    fn validate(&self, params: &ModelParams) -> Result<()> {
        if let Some(w) = self.wave() {
            if w.params() != params {
                return Err(Error::InvalidConfig(
                    "wave was built for different model parameters than the run".into(),
                ));
            }
        }
        match self {
            ProblemKind::Cauchy { wave, half_width } => {
                if wave.profile().domain() != ProfileDomain::Full {
                    return Err(Error::InvalidConfig(
                        "Cauchy runs need a full-line profile".into(),
                    ));
                }
                if !(half_width.is_finite() && *half_width > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "half_width must be positive, got {half_width}"
                    )));
                }
            }
            ProblemKind::Dirichlet { beta, wave, width } => {
                let (lo, hi) = (
                    params.u_minus.min(params.u_plus),
                    params.u_minus.max(params.u_plus),
                );
                if !(*beta >= lo && *beta <= hi) {
                    return Err(Error::InvalidConfig(format!(
                        "beta = {beta} must lie in [{lo}, {hi}]"
                    )));
                }
                match wave.profile().domain() {
                    ProfileDomain::HalfLine { beta: b } if b == *beta => {}
                    _ => {
                        return Err(Error::InvalidConfig(format!(
                            "Dirichlet runs need a half-line profile with phi(0) = {beta}"
                        )))
                    }
                }
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidConfig(format!("width must be positive, got {width}")));
                }
            }
            ProblemKind::Neumann { width } => {
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidConfig(format!("width must be positive, got {width}")));
                }
            }
        }
        Ok(())
    }
}

/// Unvalidated run description; [`RunSetup::build`] turns it into a
/// [`RunConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunSetup {
    pub params: ModelParams,
    pub kind: ProblemKind,
    pub dx: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Empty means `[0, t_final]`.
    pub output_times: Vec<f64>,
    pub initial: InitialData,
    /// First-order upwind chemotactic flux instead of the centred one.
    pub upwind: bool,
    /// Require `half_width ≥ 8√(1+t_final) + support radius` for Cauchy runs.
    pub enforce_width_rule: bool,
}

impl RunSetup {
    pub fn new(params: ModelParams, kind: ProblemKind, dx: f64, dt: f64, t_final: f64) -> Self {
        Self {
            params,
            kind,
            dx,
            dt,
            t_final,
            output_times: Vec::new(),
            initial: InitialData::zero(),
            upwind: false,
            enforce_width_rule: true,
        }
    }

    pub fn with_initial(mut self, initial: InitialData) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_output_times(mut self, times: Vec<f64>) -> Self {
        self.output_times = times;
        self
    }

    pub fn build(self) -> Result<RunConfig> {
        RunConfig::new(self)
    }
}

/// Validated run description. Construction checks every invariant so
/// that stepping never meets an invalid configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    params: ModelParams,
    kind: ProblemKind,
    grid: Grid,
    dt: f64,
    steps: usize,
    output_steps: Vec<usize>,
    initial: InitialData,
    upwind: bool,
}

impl RunConfig {
    pub fn new(s: RunSetup) -> Result<Self> {
        s.params.validate()?;
        s.kind.validate(&s.params)?;
        for shape in [&s.initial.w0, &s.initial.z0] {
            shape.validate()?;
        }
        let grid = s.kind.grid(s.dx)?;
        let dx = grid.dx();
        if !(s.dt.is_finite() && s.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", s.dt)));
        }
        if !(s.t_final.is_finite() && s.t_final >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "t_final must be non-negative, got {}",
                s.t_final
            )));
        }
        if s.dt > dx * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "dt = {} exceeds dx = {dx}",
                s.dt
            )));
        }
        if let ProblemKind::Cauchy { half_width, .. } = s.kind {
            let need = 8.0 * (1.0 + s.t_final).sqrt() + s.initial.support_radius();
            if s.enforce_width_rule && half_width < need {
                return Err(Error::InvalidConfig(format!(
                    "half_width = {half_width} is below 8·sqrt(1+t_final) + support radius = {need:.3}"
                )));
            }
        }
        let steps = (s.t_final / s.dt).round() as usize;
        let slack = 1e-9 * s.t_final.max(1.0);
        let mut output_steps = Vec::new();
        let times = if s.output_times.is_empty() {
            if s.t_final > 0.0 {
                vec![0.0, s.t_final]
            } else {
                vec![0.0]
            }
        } else {
            s.output_times.clone()
        };
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidConfig(
                    "output_times must be strictly increasing".into(),
                ));
            }
        }
        for &t in &times {
            if !(t >= -slack && t <= s.t_final + slack) {
                return Err(Error::InvalidConfig(format!(
                    "output time {t} lies outside [0, {}]",
                    s.t_final
                )));
            }
            let k = ((t / s.dt).round() as usize).min(steps);
            if output_steps.last() != Some(&k) {
                output_steps.push(k);
            }
        }

        let config = Self {
            params: s.params,
            kind: s.kind,
            grid,
            dt: s.dt,
            steps,
            output_steps,
            initial: s.initial,
            upwind: s.upwind,
        };
        // Compatibility and the advective bound depend on the initial state.
        let state = init_state(&config)?;
        let rho_x = dx1(&state.rho, &grid)?.max_abs();
        let bound = 0.5 * dx / (config.params.kappa * rho_x).max(1.0);
        if config.dt > bound * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "dt = {} violates the advective bound 0.5·dx/max(1, κ·max|ρ_x|) = {bound:e}",
                config.dt
            )));
        }
        Ok(config)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn kind(&self) -> &ProblemKind {
        &self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `steps·dt`, the time actually reached.
    pub fn t_final(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Step indices at which snapshots are captured.
    pub fn output_steps(&self) -> &[usize] {
        &self.output_steps
    }

    pub fn output_times(&self) -> Vec<f64> {
        self.output_steps.iter().map(|k| *k as f64 * self.dt).collect()
    }

    pub fn initial(&self) -> &InitialData {
        &self.initial
    }

    pub fn upwind(&self) -> bool {
        self.upwind
    }

    pub fn scheme(&self) -> Scheme {
        Scheme {
            params: self.params,
            dx: self.grid.dx(),
            dt: self.dt,
            upwind: self.upwind,
        }
    }

    /// Boundary closures for this problem kind.
    pub fn closures(&self) -> (Closure, Closure) {
        let p = &self.params;
        let right = Closure::Clamp {
            u: p.u_plus,
            rho: p.rho_plus(),
        };
        let left = match self.kind {
            ProblemKind::Cauchy { .. } => Closure::Clamp {
                u: p.u_minus,
                rho: p.rho_minus(),
            },
            ProblemKind::Dirichlet { beta, .. } => Closure::Clamp {
                u: beta,
                rho: p.darcy_ratio() * beta,
            },
            ProblemKind::Neumann { .. } => Closure::ZeroSlope,
        };
        (left, right)
    }
}

/// Geometric snapshot schedule: every `dt_early` up to `t_switch`, then
/// growing by `ratio` until `t_final`, which is always included.
pub fn output_schedule(t_switch: f64, dt_early: f64, ratio: f64, t_final: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = 0.0;
    let mut i = 0usize;
    while t < t_switch.min(t_final) - 1e-12 {
        out.push(t);
        i += 1;
        t = i as f64 * dt_early;
    }
    let mut t = t_switch.min(t_final);
    while t < t_final - 1e-9 {
        out.push(t);
        t *= ratio;
        if t <= 0.0 {
            break;
        }
    }
    out.push(t_final);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{solve_profile_cauchy, solve_profile_halfline};

    fn wave(p: &ModelParams) -> DiffusionWave {
        DiffusionWave::from_profile(solve_profile_cauchy(p, 1e-8).unwrap())
    }

    fn bump(amp: f64, center: f64) -> InitialData {
        InitialData::both(InitialShape::GaussianBump {
            amp,
            center,
            sigma: 1.0,
        })
    }

    #[test]
    fn width_rule_enforced_and_overridable() {
        let p = ModelParams::default();
        let kind = ProblemKind::Cauchy {
            wave: wave(&p),
            half_width: 20.0,
        };
        let mut s = RunSetup::new(p, kind, 0.1, 0.05, 100.0);
        assert!(s.clone().build().is_err());
        s.enforce_width_rule = false;
        assert!(s.build().is_ok());
    }

    #[test]
    fn dt_bounds_checked_at_construction() {
        let p = ModelParams::default();
        let kind = ProblemKind::Neumann { width: 10.0 };
        assert!(RunSetup::new(p, kind.clone(), 0.1, 0.2, 1.0).build().is_err());
        // A steep chemical perturbation tightens the advective bound.
        let steep = InitialData {
            w0: InitialShape::GaussianBump {
                amp: 5.0,
                center: 5.0,
                sigma: 0.2,
            },
            z0: InitialShape::Zero,
        };
        let s = RunSetup::new(p, kind.clone(), 0.1, 0.05, 1.0).with_initial(steep);
        assert!(matches!(s.build(), Err(Error::InvalidConfig(_))));
        assert!(RunSetup::new(p, kind, 0.1, 0.05, 1.0).build().is_ok());
    }

    #[test]
    fn dirichlet_needs_matching_halfline_profile() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 1.0, 0.01, 0.06).unwrap();
        let w = DiffusionWave::from_profile(solve_profile_halfline(&p, 0.03, 1e-8).unwrap());
        let ok = ProblemKind::Dirichlet {
            beta: 0.03,
            wave: w.clone(),
            width: 20.0,
        };
        assert!(RunSetup::new(p, ok, 0.1, 0.05, 1.0).build().is_ok());
        let wrong_beta = ProblemKind::Dirichlet {
            beta: 0.02,
            wave: w,
            width: 20.0,
        };
        assert!(RunSetup::new(p, wrong_beta, 0.1, 0.05, 1.0).build().is_err());
        let full = ProblemKind::Dirichlet {
            beta: 0.03,
            wave: wave(&p),
            width: 20.0,
        };
        assert!(RunSetup::new(p, full, 0.1, 0.05, 1.0).build().is_err());
    }

    #[test]
    fn compatibility_enforced() {
        let p = ModelParams::default();
        let kind = ProblemKind::Neumann { width: 40.0 };
        let off = RunSetup::new(p, kind.clone(), 0.1, 0.05, 1.0).with_initial(bump(0.01, 1.0));
        assert!(matches!(off.build(), Err(Error::Compatibility(_))));
        let far = RunSetup::new(p, kind.clone(), 0.1, 0.05, 1.0).with_initial(InitialData::both(
            InitialShape::GaussianBump {
                amp: 0.01,
                center: 20.0,
                sigma: 0.5,
            },
        ));
        assert!(far.build().is_ok());
        let centred = RunSetup::new(p, kind, 0.1, 0.05, 1.0).with_initial(bump(0.01, 0.0));
        assert!(centred.build().is_ok());
    }

    #[test]
    fn grid_must_divide_span() {
        let kind = ProblemKind::Neumann { width: 1.0 };
        assert!(kind.grid(0.3).is_err());
        assert_eq!(kind.grid(0.25).unwrap().n(), 5);
    }

    #[test]
    fn output_times_quantized() {
        let p = ModelParams::default();
        let c = RunSetup::new(p, ProblemKind::Neumann { width: 10.0 }, 0.1, 0.03, 1.0)
            .with_output_times(vec![0.0, 0.31, 0.32, 1.0])
            .build()
            .unwrap();
        assert_eq!(c.steps(), 33);
        assert_eq!(c.output_steps(), &[0, 10, 11, 33]);
        let bad = RunSetup::new(p, ProblemKind::Neumann { width: 10.0 }, 0.1, 0.05, 1.0)
            .with_output_times(vec![0.5, 0.2]);
        assert!(bad.build().is_err());
        let outside = RunSetup::new(p, ProblemKind::Neumann { width: 10.0 }, 0.1, 0.05, 1.0)
            .with_output_times(vec![0.5, 2.0]);
        assert!(outside.build().is_err());
    }

    #[test]
    fn schedule_shape() {
        let s = output_schedule(10.0, 0.25, 1.02, 400.0);
        assert_eq!(s[0], 0.0);
        assert_eq!(s[40], 10.0);
        assert_eq!(*s.last().unwrap(), 400.0);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(output_schedule(10.0, 0.25, 1.02, 0.0), vec![0.0]);
    }
}
