use std::path::Path;

use diffwave::analysis::{
    boundary_report, check_weighted_estimate, default_k, default_window, energy_ledger, fit_decay_rate, norm_series,
    tail_vanishing_check, BoundaryReport, PerturbSeries, WeightKernel,
};
use diffwave::profile::{
    check_decay_table, fit_envelope, read_profile, solve_profile_cauchy, solve_profile_halfline, write_profile,
    ProfileDomain,
};
use diffwave::solver::{output_schedule, run_partial, write_snapshot, RunConfig, RunSetup, Snapshot};
use diffwave::stencil::NormKind;
use diffwave::verify::{run_verification, FaultHooks, VerifyReport};
use diffwave::{DiffusionWave, Profile, ProblemKind, RunResult};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, KindName, SnapshotPolicy};
use crate::error::CliError;
use crate::manifest::{git_blob_sha256, Manifest, Provenance, SchemeInfo};
use crate::output::{boundary_columns, create_dir, energy_columns, write_report, write_text};

// ---------------------------------------------------------------------------
// Problem assembly

struct Prepared {
    kind: ProblemKind,
    provenance: Provenance,
}

fn solve_profile(cfg: &ExperimentConfig) -> Result<Profile, CliError> {
    let p = &cfg.model;
    let tol = cfg.problem.profile_tol;
    let profile = match cfg.problem.kind {
        KindName::Dirichlet => solve_profile_halfline(p, cfg.beta(), tol)?,
        _ => solve_profile_cauchy(p, tol)?,
    };
    Ok(profile)
}

fn load_wave(cfg: &ExperimentConfig, prov: &mut Provenance) -> Result<DiffusionWave, CliError> {
    let profile = match &cfg.problem.profile_file {
        Some(path) => {
            let bytes = std::fs::read(path)
                .map_err(|e| CliError::Config(format!("profile file {}: {e}", path.display())))?;
            let profile = read_profile(path)?;
            if profile.params() != &cfg.model {
                return Err(CliError::Config(format!(
                    "profile file {} was built for different model parameters",
                    path.display()
                )));
            }
            let want_half = cfg.problem.kind == KindName::Dirichlet;
            match profile.domain() {
                ProfileDomain::Full if !want_half => {}
                ProfileDomain::HalfLine { beta } if want_half && beta == cfg.beta() => {}
                d => {
                    return Err(CliError::Config(format!(
                        "profile file {} has domain {d:?}, which does not fit a {:?} run",
                        path.display(),
                        cfg.problem.kind
                    )))
                }
            }
            prov.profile_source = "file".into();
            prov.profile_file = Some(path.display().to_string());
            prov.profile_sha256 = Some(git_blob_sha256(&bytes));
            profile
        }
        None => {
            prov.profile_source = "solved".into();
            solve_profile(cfg)?
        }
    };
    Ok(DiffusionWave::new(profile, cfg.model)?)
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, CliError> {
    cfg.validate()?;
    let mut provenance = Provenance::new();
    let extent = cfg.extent();
    let kind = match cfg.problem.kind {
        KindName::Cauchy => ProblemKind::Cauchy {
            wave: load_wave(cfg, &mut provenance)?,
            half_width: extent,
        },
        KindName::Dirichlet => ProblemKind::Dirichlet {
            beta: cfg.beta(),
            wave: load_wave(cfg, &mut provenance)?,
            width: extent,
        },
        KindName::Neumann => ProblemKind::Neumann { width: extent },
    };
    Ok(Prepared { kind, provenance })
}

fn run_config(cfg: &ExperimentConfig, kind: ProblemKind) -> Result<RunConfig, CliError> {
    let o = &cfg.output;
    let g = &cfg.grid;
    let mut setup = RunSetup::new(cfg.model, kind, g.dx, g.dt, g.t_final)
        .with_initial(cfg.initial.clone())
        .with_output_times(output_schedule(o.t_switch, o.dt_early, o.ratio, g.t_final));
    setup.upwind = g.upwind;
    setup.enforce_width_rule = g.enforce_width_rule;
    Ok(setup.build()?)
}

fn scheme_info(rc: &RunConfig) -> SchemeInfo {
    let grid = rc.grid();
    SchemeInfo {
        kind: rc.kind().name().into(),
        x0: grid.x0(),
        length: grid.length(),
        nodes: grid.n(),
        dx: grid.dx(),
        dt: rc.dt(),
        steps: rc.steps(),
        flux: if rc.upwind() { "upwind" } else { "centred" }.into(),
        stepping: "implicit diffusion and decay, explicit chemotactic flux".into(),
    }
}

// ---------------------------------------------------------------------------
// profile

#[derive(Debug, Serialize)]
pub struct EnvelopeEntry {
    pub c_amp: f64,
    pub c0: f64,
    pub r2: f64,
}

#[derive(Debug, Serialize)]
pub struct DecayEntry {
    pub k: usize,
    pub j: usize,
    pub p: String,
    pub predicted: f64,
    pub observed: Option<f64>,
    pub r2: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ProfileReport {
    pub manifest_sha256: String,
    pub domain: String,
    pub constant: bool,
    pub xi0: f64,
    pub phi0: f64,
    pub slope0: f64,
    pub far_field_residual_left: f64,
    pub far_field_residual_right: f64,
    pub ode_residual: f64,
    pub envelope: Option<EnvelopeEntry>,
    pub envelope_note: Option<String>,
    pub decay_table: Vec<DecayEntry>,
}

pub const PROFILE_FILE: &str = "profile.dat";

pub fn cmd_profile(cfg: &ExperimentConfig, out: &Path) -> Result<ProfileReport, CliError> {
    cfg.validate()?;
    let profile = solve_profile(cfg)?;
    create_dir(out)?;
    let path = out.join(PROFILE_FILE);
    write_profile(&profile, &path)?;
    let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
    let mut provenance = Provenance::new();
    provenance.profile_source = "solved".into();
    provenance.profile_file = Some(PROFILE_FILE.into());
    provenance.profile_sha256 = Some(git_blob_sha256(&bytes));
    let hash = Manifest {
        command: "profile".into(),
        config: cfg.clone(),
        scheme: None,
        provenance,
    }
    .write(out)?;

    let constant = profile.is_constant();
    let (envelope, envelope_note) = if constant {
        (None, Some("constant profile, envelope skipped".to_string()))
    } else {
        match profile.envelope().map(Ok).unwrap_or_else(|| fit_envelope(&profile)) {
            Ok(e) => (
                Some(EnvelopeEntry {
                    c_amp: e.c_amp,
                    c0: e.c0,
                    r2: e.r2,
                }),
                None,
            ),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    let mut decay_table = Vec::new();
    if !constant {
        let wave = DiffusionWave::new(profile.clone(), cfg.model)?;
        let times: Vec<f64> = (0..30).map(|i| 10.0 * 100f64.powf(i as f64 / 29.0)).collect();
        for (k, j, p) in [(1, 0, NormKind::L2), (1, 0, NormKind::Inf), (2, 0, NormKind::L2), (0, 1, NormKind::Inf)] {
            let c = check_decay_table(&wave, &times, k, j, p)?;
            decay_table.push(DecayEntry {
                k,
                j,
                p: format!("{p:?}"),
                predicted: c.predicted_exponent,
                observed: c.observed_exponent,
                r2: c.r2,
            });
        }
    }
    let anchor = profile.anchor();
    let (left, right) = profile.far_field_residuals();
    let report = ProfileReport {
        manifest_sha256: hash,
        domain: match profile.domain() {
            ProfileDomain::Full => "full".into(),
            ProfileDomain::HalfLine { .. } => "half_line".into(),
        },
        constant,
        xi0: anchor.xi0,
        phi0: anchor.phi0,
        slope0: anchor.slope0,
        far_field_residual_left: left,
        far_field_residual_right: right,
        ode_residual: profile.ode_residual(),
        envelope,
        envelope_note,
        decay_table,
    };
    write_report(out, "profile_report", cfg.output.report_format, &report)?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Debug, Clone, Serialize)]
pub struct FitEntry {
    pub series: String,
    pub exponent: Option<f64>,
    pub r2: Option<f64>,
    pub samples: Option<usize>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightedEntry {
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailEntry {
    pub series: String,
    pub passed: bool,
    pub first_mean: f64,
    pub last_mean: f64,
    pub final_value: f64,
    pub max_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryEntry {
    pub max_boundary_value: f64,
    pub max_w_xx_scaled: Option<f64>,
    pub running_max_settled_in_final_half: Option<bool>,
    pub max_abs_w_xxx: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub manifest_sha256: String,
    pub kind: String,
    pub t_reached: f64,
    pub snapshots: usize,
    pub blow_up: Option<String>,
    pub fit_window: Option<[f64; 2]>,
    pub fits: Vec<FitEntry>,
    pub n_final: Option<f64>,
    pub dissipation_total: Option<f64>,
    /// Share of the total dissipation gained over the last quarter of the run.
    pub dissipation_final_quarter: Option<f64>,
    pub weighted_estimate: Option<WeightedEntry>,
    pub tail_checks: Vec<TailEntry>,
    pub boundary: Option<BoundaryEntry>,
    pub energy_k: Option<f64>,
    pub notes: Vec<String>,
}

fn write_snapshots(out: &Path, run: &RunResult, kind: &ProblemKind, which: &[&Snapshot]) -> Result<(), CliError> {
    if which.is_empty() {
        return Ok(());
    }
    let dir = out.join("snapshots");
    create_dir(&dir)?;
    for s in which {
        let (u_ref, rho_ref) = kind.reference(&run.params, &run.grid, s.t)?;
        let w = s.rho.minus(&rho_ref)?;
        let z = s.u.minus(&u_ref)?;
        let path = dir.join(format!("snap_{:07}.dat", s.step));
        write_snapshot(&path, &run.grid, s.t, &s.u, &s.rho, &w, &z)?;
    }
    Ok(())
}

fn fits(series: &PerturbSeries, window: (f64, f64)) -> Vec<FitEntry> {
    let cols: [(&str, Box<dyn Fn(&diffwave::analysis::NormRow) -> f64>); 6] = [
        ("w", Box::new(|r| r.w[0])),
        ("w_x", Box::new(|r| r.w[1])),
        ("w_xx", Box::new(|r| r.w[2])),
        ("z", Box::new(|r| r.z[0])),
        ("z_x", Box::new(|r| r.z[1])),
        ("z_xx", Box::new(|r| r.z[2])),
    ];
    cols.iter()
        .map(|(name, f)| match fit_decay_rate(&series.times, &series.column(f), window) {
            Ok(fit) => FitEntry {
                series: name.to_string(),
                exponent: Some(fit.exponent),
                r2: Some(fit.r2),
                samples: Some(fit.samples),
                note: None,
            },
            Err(e) => FitEntry {
                series: name.to_string(),
                exponent: None,
                r2: None,
                samples: None,
                note: Some(e.to_string()),
            },
        })
        .collect()
}

fn analyse(
    cfg: &ExperimentConfig,
    out: &Path,
    run: &RunResult,
    kind: &ProblemKind,
    report: &mut SimulateReport,
) -> Result<(), CliError> {
    let series = norm_series(run, kind)?;
    write_text(&out.join("series.dat"), &series.to_columns())?;
    let t_end = *series.times.last().unwrap_or(&0.0);
    let window = cfg
        .analysis
        .fit_window
        .map(|[a, b]| (a, b))
        .unwrap_or_else(|| default_window(t_end));
    report.fit_window = Some([window.0, window.1]);
    report.fits = fits(&series, window);
    report.n_final = Some(series.n_final());
    if let Some(last) = series.cumulative.last() {
        let total = last.dissipation();
        report.dissipation_total = Some(total);
        if total > 0.0 {
            let i = series.times.iter().position(|t| *t >= 0.75 * t_end - 1e-9).unwrap_or(0);
            report.dissipation_final_quarter = Some((total - series.cumulative[i].dissipation()) / total);
        }
    }

    let kernel = WeightKernel::for_kind(cfg.analysis.alpha, kind)?;
    match check_weighted_estimate(run, kind, &kernel) {
        Ok(e) => {
            report.weighted_estimate = Some(WeightedEntry {
                alpha: cfg.analysis.alpha,
                lhs: e.lhs,
                rhs: e.rhs,
                ratio: e.ratio,
            })
        }
        Err(e) => report.notes.push(format!("weighted estimate: {e}")),
    }

    let k = cfg.analysis.k.unwrap_or_else(|| default_k(cfg.model.lambda, cfg.model.mu));
    let ledger = energy_ledger(run, kind, k)?;
    write_text(&out.join("energy.dat"), &energy_columns(&ledger))?;
    report.energy_k = Some(k);

    if kind.is_half_line() {
        let b = boundary_report(run, kind)?;
        write_text(&out.join("boundary.dat"), &boundary_columns(&b))?;
        report.boundary = Some(BoundaryEntry {
            max_boundary_value: b.max_boundary_value(),
            max_w_xx_scaled: b.max_w_xx_scaled(),
            running_max_settled_in_final_half: b.running_max_settled_in_final_half(),
            max_abs_w_xxx: match &b {
                BoundaryReport::Neumann(rows) => Some(rows.iter().fold(0.0, |m, r| m.max(r.w_xxx.abs()))),
                BoundaryReport::Dirichlet(_) => None,
            },
        });
        if matches!(b, BoundaryReport::Dirichlet(_)) {
            for (name, k) in [("w_x^2", true), ("z_x^2", false)] {
                let col = series.column(|r| if k { r.w[1] * r.w[1] } else { r.z[1] * r.z[1] });
                match tail_vanishing_check(&series.times, &col) {
                    Ok(t) => report.tail_checks.push(TailEntry {
                        series: name.into(),
                        passed: t.passed,
                        first_mean: t.first_mean,
                        last_mean: t.last_mean,
                        final_value: t.final_value,
                        max_value: t.max_value,
                    }),
                    Err(e) => report.notes.push(format!("tail check {name}: {e}")),
                }
            }
        }
    }
    Ok(())
}

/// Run one configuration into `out`. On blow-up the artifacts up to the
/// last good snapshot are still written and the error is returned.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<SimulateReport, CliError> {
    let prepared = prepare(cfg)?;
    let rc = run_config(cfg, prepared.kind.clone())?;
    create_dir(out)?;
    let hash = Manifest {
        command: "simulate".into(),
        config: cfg.clone(),
        scheme: Some(scheme_info(&rc)),
        provenance: prepared.provenance,
    }
    .write(out)?;

    log::info!(
        "simulate: {} on {} nodes, {} steps of dt = {}",
        rc.kind().name(),
        rc.grid().n(),
        rc.steps(),
        rc.dt()
    );
    let (run, err) = run_partial(&rc);
    let kind = rc.kind();
    let mut report = SimulateReport {
        manifest_sha256: hash,
        kind: kind.name().into(),
        t_reached: run.last().map_or(0.0, |s| s.t),
        snapshots: run.snapshots.len(),
        blow_up: err.as_ref().map(|e| e.to_string()),
        fit_window: None,
        fits: Vec::new(),
        n_final: None,
        dissipation_total: None,
        dissipation_final_quarter: None,
        weighted_estimate: None,
        tail_checks: Vec::new(),
        boundary: None,
        energy_k: None,
        notes: Vec::new(),
    };

    let chosen: Vec<&Snapshot> = match (cfg.output.snapshots, &err) {
        (SnapshotPolicy::All, _) => run.snapshots.iter().collect(),
        (SnapshotPolicy::None, None) => Vec::new(),
        // The last good snapshot is kept whenever the run fails.
        _ => run.last().into_iter().collect(),
    };
    write_snapshots(out, &run, kind, &chosen)?;

    if run.snapshots.len() >= 2 {
        analyse(cfg, out, &run, kind, &mut report)?;
    } else {
        report.notes.push("fewer than two snapshots, analysis skipped".into());
    }
    write_report(out, "report", cfg.output.report_format, &report)?;
    match err {
        Some(e) => Err(e.into()),
        None => Ok(report),
    }
}

// ---------------------------------------------------------------------------
// verify

pub fn cmd_verify(cfg: &ExperimentConfig, out: &Path, hooks: FaultHooks) -> Result<VerifyReport, CliError> {
    create_dir(out)?;
    let hash = Manifest {
        command: "verify".into(),
        config: cfg.clone(),
        scheme: None,
        provenance: Provenance::new(),
    }
    .write(out)?;
    let report = run_verification(&cfg.verify, hooks);

    #[derive(Serialize)]
    struct Wrapped<'a> {
        manifest_sha256: String,
        passed: bool,
        #[serde(flatten)]
        report: &'a VerifyReport,
    }
    write_report(
        out,
        "verify_report",
        cfg.output.report_format,
        &Wrapped {
            manifest_sha256: hash,
            passed: report.passed(),
            report: &report,
        },
    )?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub row: usize,
    pub value: f64,
    pub status: String,
    pub exit_code: i32,
    pub slope_w_x: Option<f64>,
    pub slope_z_x: Option<f64>,
    pub slope_w_xx: Option<f64>,
    pub n_final: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}

fn slope(r: &SimulateReport, name: &str) -> Option<f64> {
    r.fits.iter().find(|f| f.series == name).and_then(|f| f.exponent)
}

pub fn sweep_table(report: &SweepReport) -> String {
    let opt = |v: Option<f64>| v.map_or("nan".to_string(), |v| format!("{v:.10e}"));
    let mut s = format!(
        "# row {} status exit_code slope_w_x slope_z_x slope_w_xx n_final\n# slopes are fitted exponents in (1+t); n_final is the running maximum N(t_final)\n",
        report.axis
    );
    for r in &report.rows {
        s.push_str(&format!(
            "{} {:.10e} {} {} {} {} {} {}\n",
            r.row,
            r.value,
            r.status,
            r.exit_code,
            opt(r.slope_w_x),
            opt(r.slope_z_x),
            opt(r.slope_w_xx),
            opt(r.n_final)
        ));
    }
    s
}

/// Run every axis value in its own `row_NNN` directory on `workers`
/// threads. Row failures are recorded, not propagated.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<SweepReport, CliError> {
    let axis = cfg.sweep.axis.clone();
    if cfg.sweep.values.is_empty() {
        return Err(CliError::Config("sweep.values is empty".into()));
    }
    // Reject an unknown axis before any work.
    cfg.with_axis(&axis, cfg.sweep.values[0])?;
    create_dir(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        cfg.sweep
            .values
            .par_iter()
            .enumerate()
            .map(|(i, &v)| {
                let dir = out.join(format!("row_{i:03}"));
                let result = cfg.with_axis(&axis, v).and_then(|c| cmd_simulate(&c, &dir));
                match result {
                    Ok(r) => SweepRow {
                        row: i,
                        value: v,
                        status: "ok".into(),
                        exit_code: 0,
                        slope_w_x: slope(&r, "w_x"),
                        slope_z_x: slope(&r, "z_x"),
                        slope_w_xx: slope(&r, "w_xx"),
                        n_final: r.n_final,
                        error: None,
                    },
                    Err(e) => {
                        log::warn!("sweep row {i} ({axis} = {v}) failed: {e}");
                        SweepRow {
                            row: i,
                            value: v,
                            status: "error".into(),
                            exit_code: e.exit_code(),
                            slope_w_x: None,
                            slope_z_x: None,
                            slope_w_xx: None,
                            n_final: None,
                            error: Some(e.to_string()),
                        }
                    }
                }
            })
            .collect()
    });
    let report = SweepReport { axis, rows };
    write_text(&out.join("sweep_table.dat"), &sweep_table(&report))?;
    write_report(out, "sweep_report", cfg.output.report_format, &report)?;
    Ok(report)
}
