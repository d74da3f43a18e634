//! Pseudo-spectral solver for the incompressible Navier-Stokes equations on a
//! periodic box with power damping `alpha |u|^{beta-1} u` or logarithmic
//! damping `alpha log(e + |u|^2) |u|^2 u`, together with diagnostics for the
//! associated energy inequalities.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod io;
pub mod nonlinear;
pub mod spectral;

pub use config::{parse_config, parse_config_with_overrides, IcKind, InitialCondition, SimConfig};
pub use diagnostics::{
    check_h1_inequality, check_l2_inequality, gronwall_envelope, stability_compare, BudgetRow,
    BudgetSeries, BudgetTerms, H1Report, L2Report,
};
pub use error::{Error, Result};
pub use rustfft::num_complex::Complex64;
pub use integrator::{run, run_from, RunObserver, RunOutcome, SolverState};
pub use nonlinear::{DampingKind, DampingSpec};
pub use spectral::{Grid, PhysicalField, SpectralField};
