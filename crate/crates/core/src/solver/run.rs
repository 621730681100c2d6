use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{Field, Grid, ModelParams, State};
use crate::solver::{init_state, step, RunConfig};
use crate::stencil::trapezoid;

/// Per-snapshot bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotDiag {
    pub max_abs_u: f64,
    pub max_abs_rho: f64,
    /// Trapezoidal `∫ u dx` over the grid.
    pub mass_u: f64,
    /// Seconds since the run started.
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub u: Field,
    pub rho: Field,
    pub diag: SnapshotDiag,
}

/// States captured at the configured output steps.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub grid: Grid,
    pub params: ModelParams,
    pub dt: f64,
    pub snapshots: Vec<Snapshot>,
}

impl RunResult {
    /// Assemble a result from externally produced `(t, u, ρ)` triples,
    /// e.g. synthetic fields or states read back from dumps.
    pub fn from_states(grid: Grid, params: ModelParams, states: Vec<(f64, Field, Field)>) -> Result<Self> {
        let mut snapshots = Vec::with_capacity(states.len());
        let mut last = f64::NEG_INFINITY;
        for (i, (t, u, rho)) in states.into_iter().enumerate() {
            if !(t > last) {
                return Err(Error::InvalidConfig(
                    "snapshot times must be strictly increasing".into(),
                ));
            }
            last = t;
            u.check_aligned(&grid)?;
            rho.check_aligned(&grid)?;
            let diag = diagnose(&grid, u.values(), rho.values(), 0.0);
            snapshots.push(Snapshot {
                step: i,
                t,
                u,
                rho,
                diag,
            });
        }
        let dt = match snapshots.len() {
            0 | 1 => 0.0,
            _ => snapshots[1].t - snapshots[0].t,
        };
        Ok(Self {
            grid,
            params,
            dt,
            snapshots,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

fn diagnose(grid: &Grid, u: &[f64], rho: &[f64], wall: f64) -> SnapshotDiag {
    SnapshotDiag {
        max_abs_u: u.iter().fold(0.0, |m, v| m.max(v.abs())),
        max_abs_rho: rho.iter().fold(0.0, |m, v| m.max(v.abs())),
        mass_u: trapezoid(u, grid.dx()),
        wall_seconds: wall,
    }
}

fn capture(state: &State, k: usize, start: &Instant) -> Snapshot {
    Snapshot {
        step: k,
        t: state.t,
        diag: diagnose(
            &state.grid,
            state.u.values(),
            state.rho.values(),
            start.elapsed().as_secs_f64(),
        ),
        u: state.u.clone(),
        rho: state.rho.clone(),
    }
}

/// Step from the initial state to `t_final`, capturing snapshots at the
/// output steps. Snapshot times are `step·dt` exactly.
pub fn run(config: &RunConfig) -> Result<RunResult> {
    match run_partial(config) {
        (result, None) => Ok(result),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`run`], but on failure also returns the snapshots captured so far.
pub fn run_partial(config: &RunConfig) -> (RunResult, Option<Error>) {
    let mut result = RunResult {
        grid: *config.grid(),
        params: *config.params(),
        dt: config.dt(),
        snapshots: Vec::with_capacity(config.output_steps().len()),
    };
    let start = Instant::now();
    let mut state = match init_state(config) {
        Ok(s) => s,
        Err(e) => return (result, Some(e)),
    };
    let dt = config.dt();
    let mut next = config.output_steps().iter().peekable();
    for k in 0..=config.steps() {
        if k > 0 {
            state = match step(&state, config) {
                Ok(mut s) => {
                    // Keep the clock on the step lattice rather than accumulating.
                    s.t = k as f64 * dt;
                    s
                }
                Err(e) => {
                    log::warn!("run stopped at step {k}: {e}");
                    return (result, Some(e));
                }
            };
        }
        if next.peek() == Some(&&k) {
            next.next();
            result.snapshots.push(capture(&state, k, &start));
            log::debug!("snapshot t = {:.4}", state.t);
        }
    }
    (result, None)
}
