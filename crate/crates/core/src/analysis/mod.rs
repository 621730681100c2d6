//! Perturbation diagnostics over finished runs: norm series, decay-rate
//! fits, heat-kernel weighted integrals, energy ledgers, boundary data and
//! the verification oracles.

mod boundary;
mod energy;
mod mms;
mod oracle;
mod rates;
mod series;
mod weight;

pub use boundary::{boundary_report, BoundaryReport, DirichletRow, NeumannRow};
pub use energy::{default_k, energy_density, energy_ledger, is_positive_definite, DissipationRow, EnergyLedger};
pub use mms::{manufactured_residual, mms_error, MmsConfig, MmsLeft, MmsLevel, MmsReport, MmsTarget};
pub use oracle::heat_oracle;
pub use rates::{default_window, fit_decay_rate, tail_vanishing_check, RateFit, TailCheck, MIN_FIT_SAMPLES};
pub use series::{norm_series, perturbation, Cumulative, NormRow, PerturbSeries};
pub use weight::{
    check_weighted_estimate, weight_eval, weight_identity_check, weighted_integral_of, weighted_spacetime_integral,
    Component, IdentityResiduals, KernelDomain, WeightKernel, WeightedEstimate, DEFAULT_ALPHA,
};
