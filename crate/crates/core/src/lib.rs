//! Regularized spatially homogeneous Landau-Coulomb equation on a bounded
//! velocity box: convolution coefficients, an explicit conservative solver,
//! the entropy/Fisher/weighted-norm diagnostics and a harness that checks the
//! a priori estimates against recorded trajectories.
//!
//! The regularized problem is
//! `d_t f = div(A_n[f] grad f - b_n[f] f) + (1/n) Lap f` with the kernel
//! `|z|^{-1}` capped inside radius `1/n`.

pub mod error;
pub mod fft;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod coefficients;
pub mod initial_data;
pub mod functionals;
pub mod config;
pub mod estimates;
pub mod io;
pub mod solver;

pub use coefficients::{
    coefficient_bounds_report, coercivity_estimate, compute_coefficients, direct_coefficients,
    CoefficientEngine, CoefficientField, CoercivityEstimate, FluxCoefficients,
};
pub use config::{RunConfig, Scheme};
pub use error::{LandauError, Result};
pub use estimates::{
    calibrate_Ck, check_dissipation_lower, check_entropy_identity, check_fisher_monotone,
    check_h3_inequality, check_interpolations, check_l2_window, compute_t1,
    fisher_envelope_stat, moment_propagation_check, ode_envelope, run_checks, select_t0,
    weak_residual, CheckReport, CheckStatus, HarnessOptions, OdeBoundParams, Provenance,
    TimeSeries,
};
pub use functionals::{
    conserved_quantities, dissipation_double, dissipation_single, entropy, fisher, h3_relative,
    Conserved, DiagnosticsRecord,
};
pub use grid::{ScalarField, VelocityGrid};
pub use initial_data::{mollify_and_floor, sample_datum, GaussianComponent, InitialDatumSpec};
pub use io::{read_snapshot, read_timeseries, write_snapshot, write_timeseries, Snapshot};
pub use kernel::KernelFieldSet;
pub use linalg::Sym3;
pub use solver::{advance, cfl_dt, rhs, run, RunAborted, RunOutput, SolverState, StepperConfig};
