//! Compressible Euler-Poisson-MHD integration in velocity form.
//!
//! The evolved unknowns are `(n, u, B)`; the potential is recovered from the
//! density at every stage through `λ²Δφ = n − 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{char_speed_bound, flux_terms, relative_divergence, ModelParams, PlasmaState};
use crate::spectral::{Grid, ScalarField, VectorField};
use crate::time::{step_rk4, RkState};

/// Time-integration and output settings shared by both solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub t_end: f64,
    pub cfl: f64,
    /// Caps the compressible time step at `dt_lambda_factor · λ`.
    pub dt_lambda_factor: f64,
    /// Spacing of the shared sample schedule; steps land exactly on it.
    pub sample_interval: f64,
    /// Keep full fields every `snapshot_stride` samples.
    pub snapshot_stride: usize,
    /// Admissible density range; leaving it stops the run.
    pub density_band: (f64, f64),
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            t_end: 0.5,
            cfl: 0.4,
            dt_lambda_factor: 0.5,
            sample_interval: 0.0125,
            snapshot_stride: 1,
            density_band: (0.5, 1.5),
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.dt_lambda_factor > 0.0) {
            return Err(Error::Config(format!(
                "dt_lambda_factor must be positive, got {}",
                self.dt_lambda_factor
            )));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval <= self.t_end) {
            return Err(Error::Config(format!(
                "sample_interval must lie in (0, t_end], got {}",
                self.sample_interval
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Config("snapshot_stride must be at least 1".into()));
        }
        let (lo, hi) = self.density_band;
        if !(lo > 0.0 && lo < 1.0 && hi > 1.0) {
            return Err(Error::Config(format!(
                "density band must satisfy 0 < lo < 1 < hi, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }

    /// Sample times `0, Δ, 2Δ, …, t_end`; the last interval may be shorter.
    pub fn sample_times(&self) -> Vec<f64> {
        let count = (self.t_end / self.sample_interval - 1e-9).ceil().max(1.0) as usize;
        (0..=count)
            .map(|j| (j as f64 * self.sample_interval).min(self.t_end))
            .collect()
    }
}

/// Poisson residual tolerance, relative to `‖n − 1‖`.
pub const POISSON_TOLERANCE: f64 = 1e-10;

/// Mean-density tolerance for the Poisson solve.
pub const MEAN_DENSITY_TOLERANCE: f64 = 1e-10;

/// `∇φ` from `λ²Δφ = n − 1` with mean-zero `φ`.
pub fn poisson_grad_phi(grid: &Grid, n: &ScalarField, lambda: f64) -> Result<VectorField> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    let spec = grid.forward(&n.map(|v| v - 1.0));
    let mean = spec.mean();
    if mean.abs() > MEAN_DENSITY_TOLERANCE {
        return Err(Error::Solvability {
            mean,
            tolerance: MEAN_DENSITY_TOLERANCE,
        });
    }
    Ok(grid.grad_inv_laplacian_unchecked(&spec).scale(1.0 / (lambda * lambda)))
}

/// `‖λ²Δφ − (n − 1)‖ / ‖n − 1‖` with `Δφ = div ∇φ`.
pub fn poisson_residual(grid: &Grid, n: &ScalarField, grad_phi: &VectorField, lambda: f64) -> f64 {
    let source = n.map(|v| v - 1.0);
    let source = source.map(|v| v - source.mean());
    let lhs = grid.divergence(grad_phi).scale(lambda * lambda);
    let num = grid.sobolev_norm(&lhs.sub(&source), 0);
    let den = grid.sobolev_norm(&source, 0);
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Tendency of `(n, u, B)`:
/// `(−div(n u), −(u·∇)u − ∇h(n) + ∇φ + (1/n) curl B × B, curl(u × B))`.
pub fn ep_rhs(grid: &Grid, state: &PlasmaState, params: &ModelParams) -> Result<PlasmaState> {
    let grad_phi = poisson_grad_phi(grid, &state.n, params.lambda)?;
    let flux = flux_terms(grid, state, params)?;
    let mut out = PlasmaState::zeros(grid);
    out.axpy(-1.0, &flux);
    out.u.axpy(1.0, &grad_phi);
    Ok(out)
}

/// `min(cfl · Δx / speed, dt_lambda_factor · λ)`.
pub fn stable_dt(state: &PlasmaState, params: &ModelParams, grid: &Grid, config: &SolveConfig) -> Result<f64> {
    let speed = char_speed_bound(state, params)?;
    let advective = config.cfl * grid.spacing() / speed;
    Ok(advective.min(config.dt_lambda_factor * params.lambda))
}

/// `∫ n|u|²/2 + n^γ/(γ(γ−1)) + |B|²/2 + (λ²/2)|∇φ|² dx`.
pub fn total_energy_ep(grid: &Grid, state: &PlasmaState, grad_phi: &VectorField, params: &ModelParams) -> f64 {
    let gamma = params.gamma;
    let l2 = params.lambda * params.lambda;
    let kinetic = state.u.dot(&state.u).mul(&state.n).scale(0.5);
    let internal = state.n.map(|n| n.powf(gamma) / (gamma * (gamma - 1.0)));
    let magnetic = state.b.dot(&state.b).scale(0.5);
    let electric = grad_phi.dot(grad_phi).scale(0.5 * l2);
    grid.integrate(&kinetic) + grid.integrate(&internal) + grid.integrate(&magnetic) + grid.integrate(&electric)
}

/// Per-sample diagnostics of a compressible run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    /// `‖div B‖ / ‖B‖`.
    pub div_b: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub u_max: f64,
    pub b_max: f64,
    pub poisson_residual: f64,
}

impl Diagnostics {
    pub fn measure(grid: &Grid, time: f64, state: &PlasmaState, grad_phi: &VectorField, params: &ModelParams) -> Self {
        Self {
            time,
            mass: grid.integrate(&state.n),
            energy: total_energy_ep(grid, state, grad_phi, params),
            div_b: relative_divergence(grid, &state.b),
            n_min: state.n.min(),
            n_max: state.n.max(),
            u_max: state.u.magnitude().max(),
            b_max: state.b.magnitude().max(),
            poisson_residual: poisson_residual(grid, &state.n, grad_phi, params.lambda),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub state: PlasmaState,
    pub grad_phi: VectorField,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// The density left the admissible band at `time`.
    BandExit { time: f64, n_min: f64, n_max: f64 },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

/// Stored output of a compressible run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    /// One record per sample time (plus the exit time on early stop).
    pub diagnostics: Vec<Diagnostics>,
    pub status: RunStatus,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory always holds the initial snapshot")
    }
}

fn in_band(n: &ScalarField, band: (f64, f64)) -> bool {
    n.min() >= band.0 && n.max() <= band.1
}

/// Integrates from `initial` to `config.t_end` on the shared sample schedule.
///
/// Leaving the density band ends the run early with
/// [`RunStatus::BandExit`]; the violating state is the last snapshot.
pub fn run_ep(grid: &Grid, initial: &PlasmaState, params: &ModelParams, config: &SolveConfig) -> Result<Trajectory> {
    params.validate()?;
    config.validate()?;
    if relative_divergence(grid, &initial.b) > 1e-10 {
        return Err(Error::Precondition("initial magnetic field is not solenoidal".into()));
    }
    initial.check_invariants(grid)?;

    let times = config.sample_times();
    let mut state = initial.clone();
    let mut traj = Trajectory {
        snapshots: Vec::new(),
        diagnostics: Vec::new(),
        status: RunStatus::Completed,
        steps: 0,
    };
    let record = |traj: &mut Trajectory, time: f64, state: &PlasmaState, keep: bool| -> Result<()> {
        let grad_phi = poisson_grad_phi(grid, &state.n, params.lambda)?;
        let diagnostics = Diagnostics::measure(grid, time, state, &grad_phi, params);
        traj.diagnostics.push(diagnostics);
        if keep {
            traj.snapshots.push(Snapshot {
                time,
                state: state.clone(),
                grad_phi,
                diagnostics,
            });
        }
        Ok(())
    };

    record(&mut traj, 0.0, &state, true)?;
    if !in_band(&state.n, config.density_band) {
        traj.status = RunStatus::BandExit {
            time: 0.0,
            n_min: state.n.min(),
            n_max: state.n.max(),
        };
        return Ok(traj);
    }

    let rhs = |s: &PlasmaState| ep_rhs(grid, s, params);
    for (j, window) in times.windows(2).enumerate() {
        let (t0, t1) = (window[0], window[1]);
        let dt_max = stable_dt(&state, params, grid, config)?;
        let substeps = ((t1 - t0) / dt_max - 1e-9).ceil().max(1.0) as usize;
        let dt = (t1 - t0) / substeps as f64;
        for k in 0..substeps {
            let t = t0 + k as f64 * dt;
            state = step_rk4(&state, t, dt, rhs)?;
            traj.steps += 1;
            if !in_band(&state.n, config.density_band) {
                let time = if k + 1 == substeps { t1 } else { t + dt };
                record(&mut traj, time, &state, true)?;
                traj.status = RunStatus::BandExit {
                    time,
                    n_min: state.n.min(),
                    n_max: state.n.max(),
                };
                return Ok(traj);
            }
        }
        let sample = j + 1;
        let keep = sample % config.snapshot_stride == 0 || sample + 1 == times.len();
        record(&mut traj, t1, &state, keep)?;
    }
    Ok(traj)
}

/// Advances `steps` RK4 steps of fixed size `dt`.
pub fn advance_fixed(grid: &Grid, initial: &PlasmaState, params: &ModelParams, dt: f64, steps: usize) -> Result<PlasmaState> {
    let mut state = initial.clone();
    for k in 0..steps {
        state = step_rk4(&state, k as f64 * dt, dt, |s| ep_rhs(grid, s, params))?;
    }
    Ok(state)
}
