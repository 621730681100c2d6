//! Numerical laboratory for nonlinear diffusion waves of the one-dimensional
//! Keller–Segel model
//!
//! ```text
//! u_t - a u_xx + κ (u ρ_x)_x = 0
//! ρ_t - b ρ_xx + λ ρ - μ u = 0
//! ```
//!
//! The crate builds the self-similar wave `ū(x,t) = φ(x/√(1+t))` by shooting,
//! integrates the full system on the line and on the half line (Dirichlet or
//! null-Neumann closure) with an IMEX finite-difference scheme, and measures
//! the perturbation `(w, z) = (ρ - ρ̄, u - ū)` through norm series, decay-rate
//! fits, heat-kernel weighted integrals, energy ledgers and boundary
//! diagnostics.

pub mod analysis;
pub mod error;
pub mod model;
pub mod profile;
pub mod solver;
pub mod stats;
pub mod stencil;
pub mod tridiag;
pub mod verify;

pub use error::{Error, Result};
pub use model::{build_grid, Field, Grid, ModelParams, State};
pub use profile::{DiffusionWave, Profile};
pub use solver::{ProblemKind, RunConfig, RunResult};
