//! Ideal incompressible MHD on the periodic grid.
//!
//! Velocity is kept solenoidal by projecting its tendency; the pressure is
//! recovered diagnostically at each sample.

use serde::{Deserialize, Serialize};

use crate::ep::SolveConfig;
use crate::error::{Error, Result};
use crate::models::{advect, induction_term, lorentz_force, relative_divergence, MhdState};
use crate::spectral::{Grid, ScalarField, VectorField};
use crate::time::{step_rk4, RkState};

#[derive(Debug, Clone, PartialEq)]
struct Fields {
    u: VectorField,
    b: VectorField,
}

impl RkState for Fields {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.u.axpy(a, &x.u);
        self.b.axpy(a, &x.b);
    }

    fn is_finite(&self) -> bool {
        self.u.is_finite() && self.b.is_finite()
    }
}

/// `(P[−(u·∇)u + curl B × B], curl(u × B))`.
pub fn mhd_rhs(grid: &Grid, u: &VectorField, b: &VectorField, dealias: bool) -> (VectorField, VectorField) {
    let mut force = lorentz_force(grid, b, dealias);
    force.axpy(-1.0, &advect(grid, u, u, dealias));
    (grid.leray_project(&force), induction_term(grid, u, b, dealias))
}

fn pressure_source(grid: &Grid, u: &VectorField, b: &VectorField, dealias: bool) -> ScalarField {
    let mut force = lorentz_force(grid, b, dealias);
    force.axpy(-1.0, &advect(grid, u, u, dealias));
    grid.divergence(&force)
}

/// Mean-zero `p` with `Δp = div(curl B × B − (u·∇)u)`.
pub fn pressure_recover(grid: &Grid, u: &VectorField, b: &VectorField, dealias: bool) -> ScalarField {
    // A spectral divergence has no zero mode, so the solve is always solvable.
    grid.inv_laplacian_unchecked(&grid.forward(&pressure_source(grid, u, b, dealias)))
}

/// `‖Δp − div(curl B × B − (u·∇)u)‖ / ‖div(…)‖`.
pub fn pressure_residual(grid: &Grid, state: &MhdState, dealias: bool) -> f64 {
    let source = pressure_source(grid, &state.u, &state.b, dealias);
    let num = grid.sobolev_norm(&grid.laplacian(&state.p).sub(&source), 0);
    let den = grid.sobolev_norm(&source, 0);
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// `cfl · Δx / max(|u| + |B|)`; unbounded for a static, field-free state.
pub fn mhd_stable_dt(grid: &Grid, u: &VectorField, b: &VectorField, cfl: f64) -> f64 {
    let speed = u.magnitude().max() + b.magnitude().max();
    if speed > 0.0 {
        cfl * grid.spacing() / speed
    } else {
        f64::INFINITY
    }
}

/// `∫ (|u|² + |B|²)/2 dx`.
pub fn mhd_energy(grid: &Grid, u: &VectorField, b: &VectorField) -> f64 {
    0.5 * (grid.integrate(&u.dot(u)) + grid.integrate(&b.dot(b)))
}

/// `∫ u·B dx`.
pub fn cross_helicity(grid: &Grid, u: &VectorField, b: &VectorField) -> f64 {
    grid.integrate(&u.dot(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MhdDiagnostics {
    pub time: f64,
    pub energy: f64,
    pub cross_helicity: f64,
    pub div_u: f64,
    pub div_b: f64,
    pub pressure_residual: f64,
}

impl MhdDiagnostics {
    pub fn measure(grid: &Grid, time: f64, state: &MhdState, dealias: bool) -> Self {
        Self {
            time,
            energy: mhd_energy(grid, &state.u, &state.b),
            cross_helicity: cross_helicity(grid, &state.u, &state.b),
            div_u: relative_divergence(grid, &state.u),
            div_b: relative_divergence(grid, &state.b),
            pressure_residual: pressure_residual(grid, state, dealias),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MhdSnapshot {
    pub time: f64,
    pub state: MhdState,
    pub diagnostics: MhdDiagnostics,
}

#[derive(Debug, Clone)]
pub struct MhdTrajectory {
    pub snapshots: Vec<MhdSnapshot>,
    pub diagnostics: Vec<MhdDiagnostics>,
    pub steps: usize,
}

impl MhdTrajectory {
    /// Snapshot stored at `time`, if any.
    pub fn at_time(&self, time: f64) -> Option<&MhdSnapshot> {
        self.snapshots.iter().find(|s| (s.time - time).abs() <= 1e-12)
    }
}

/// Builds the state with its recovered pressure.
pub fn mhd_state(grid: &Grid, u: VectorField, b: VectorField, dealias: bool) -> MhdState {
    let p = pressure_recover(grid, &u, &b, dealias);
    MhdState { u, b, p }
}

/// Integrates on the sample schedule of `config`; `density_band` and
/// `dt_lambda_factor` do not apply.
pub fn run_mhd(grid: &Grid, u0: &VectorField, b0: &VectorField, config: &SolveConfig, dealias: bool) -> Result<MhdTrajectory> {
    config.validate()?;
    for (name, f) in [("velocity", u0), ("magnetic field", b0)] {
        if relative_divergence(grid, f) > 1e-10 {
            return Err(Error::Precondition(format!("initial {name} is not solenoidal")));
        }
    }
    let times = config.sample_times();
    let mut fields = Fields {
        u: u0.clone(),
        b: b0.clone(),
    };
    let mut traj = MhdTrajectory {
        snapshots: Vec::new(),
        diagnostics: Vec::new(),
        steps: 0,
    };
    let record = |traj: &mut MhdTrajectory, time: f64, f: &Fields, keep: bool| {
        let state = mhd_state(grid, f.u.clone(), f.b.clone(), dealias);
        let diagnostics = MhdDiagnostics::measure(grid, time, &state, dealias);
        traj.diagnostics.push(diagnostics);
        if keep {
            traj.snapshots.push(MhdSnapshot {
                time,
                state,
                diagnostics,
            });
        }
    };
    record(&mut traj, 0.0, &fields, true);

    let rhs = |f: &Fields| {
        let (u, b) = mhd_rhs(grid, &f.u, &f.b, dealias);
        Ok(Fields { u, b })
    };
    for (j, window) in times.windows(2).enumerate() {
        let (t0, t1) = (window[0], window[1]);
        let dt_max = mhd_stable_dt(grid, &fields.u, &fields.b, config.cfl);
        let substeps = ((t1 - t0) / dt_max - 1e-9).ceil().max(1.0) as usize;
        let dt = (t1 - t0) / substeps as f64;
        for k in 0..substeps {
            fields = step_rk4(&fields, t0 + k as f64 * dt, dt, rhs)?;
            traj.steps += 1;
        }
        let sample = j + 1;
        let keep = sample % config.snapshot_stride == 0 || sample + 1 == times.len();
        record(&mut traj, t1, &fields, keep);
    }
    Ok(traj)
}
