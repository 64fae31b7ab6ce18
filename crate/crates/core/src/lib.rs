//! Pseudo-spectral solvers for the quasi-neutral limit of the
//! Euler-Poisson-MHD system on periodic domains.
//!
//! [`ep`] integrates the compressible system at Debye length `λ`, [`mhd`]
//! the incompressible limit, and [`limit`] measures how fast the former
//! approaches the latter as `λ → 0`.

pub mod checks;
pub mod ep;
pub mod error;
pub mod io;
pub mod limit;
pub mod mhd;
pub mod models;
pub mod spectral;
pub mod time;

pub use ep::{run_ep, RunStatus, Snapshot, SolveConfig, Trajectory};
pub use error::{Error, Result};
pub use limit::{sweep, ErrorSeries, InitMode, RateReport, SweepConfig, SweepOutcome};
pub use mhd::{run_mhd, MhdTrajectory};
pub use models::{MhdState, ModelParams, PlasmaState};
pub use spectral::{Grid, ScalarField, Shape, VectorField};
