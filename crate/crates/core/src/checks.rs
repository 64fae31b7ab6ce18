//! Structural self-checks: symmetrizer, quasilinear form and the elliptic
//! and projection identities.
//!
//! A [`Mutation`] injects a known fault so that the checks can be shown to
//! catch it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ep::{poisson_grad_phi, poisson_residual, POISSON_TOLERANCE};
use crate::error::Result;
use crate::models::{
    assemble_ai, assemble_ai_blocks, assemble_g, check_symmetrizability_with, flux_terms, matrix_flux_with,
    random_band_samples, relative_discrepancy, Matrix7, ModelParams, PlasmaState, Vector7, EIGENVALUE_TOLERANCE,
    SYMMETRY_TOLERANCE,
};
use crate::spectral::{Grid, VectorField};

/// Deliberate faults for mutation testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// Negates `G₂` in the momentum rows of `A₂`.
    FlipG2,
    /// Drops dealiasing from the direct right-hand side.
    SkipDealias,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

/// Quasilinear agreement required on smooth dealiased states.
pub const QUASILINEAR_TOLERANCE: f64 = 1e-8;
pub const PROJECTION_TOLERANCE: f64 = 1e-12;
pub const SYMMETRY_SAMPLES: usize = 1000;

fn assembly(mutation: Option<Mutation>) -> impl Fn(&Vector7, usize, &ModelParams) -> Result<Matrix7> {
    move |w, axis, params| match mutation {
        Some(Mutation::FlipG2) if axis == 1 => {
            let g = assemble_g([w[4], w[5], w[6]], axis);
            assemble_ai_blocks(w, axis, params, &(-g.transpose()), &g)
        }
        _ => assemble_ai(w, axis, params),
    }
}

fn residual(grid: &Grid, state: &PlasmaState, params: &ModelParams, mutation: Option<Mutation>) -> Result<f64> {
    let matrix = matrix_flux_with(grid, state, params, assembly(mutation))?;
    let direct_params = ModelParams {
        dealias: params.dealias && mutation != Some(Mutation::SkipDealias),
        ..*params
    };
    let direct = flux_terms(grid, state, &direct_params)?;
    Ok(relative_discrepancy(grid, &matrix, &direct))
}

/// Smooth low-mode state of amplitude `amp`.
pub fn smooth_state(grid: &Grid, amp: f64) -> PlasmaState {
    PlasmaState {
        n: grid.field_from_fn(|x| 1.0 + amp * (x[0] + 2.0 * x[1]).cos()),
        u: grid.vector_from_fn(|x| [amp * x[1].sin(), amp * (2.0 * x[0]).cos(), amp * (x[0] - x[1]).sin()]),
        b: grid.vector_from_fn(|x| [amp * x[1].cos(), amp * x[0].sin(), amp * (x[0] + x[1]).cos()]),
    }
}

/// State whose products reach past the Nyquist mode of `grid` (meant for 32²).
pub fn high_mode_state(grid: &Grid, amp: f64) -> PlasmaState {
    PlasmaState {
        n: grid.field_from_fn(|x| 1.0 + amp * (9.0 * x[0] + 8.0 * x[1]).cos()),
        u: grid.vector_from_fn(|x| [amp * (10.0 * x[1]).sin(), amp * (9.0 * x[0]).cos(), amp * (10.0 * x[0]).sin()]),
        b: grid.vector_from_fn(|x| [amp * x[1].cos(), amp * x[0].sin(), amp * (x[0] + x[1]).cos()]),
    }
}

fn random_vector_field(grid: &Grid, rng: &mut ChaCha8Rng) -> VectorField {
    let modes: Vec<([f64; 2], [f64; 3], [f64; 3])> = (0..6)
        .map(|_| {
            let k = [rng.gen_range(-4..=4) as f64, rng.gen_range(-4..=4) as f64];
            let a = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let ph = [rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0)];
            (k, a, ph)
        })
        .collect();
    grid.vector_from_fn(|x| {
        let mut v = [0.0; 3];
        for (k, a, ph) in &modes {
            let arg = k[0] * x[0] + k[1] * x[1];
            for c in 0..3 {
                v[c] += a[c] * (arg + ph[c]).cos();
            }
        }
        v
    })
}

/// Runs the full table; every entry passes on a correct build.
pub fn run_checks(mutation: Option<Mutation>, seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let samples = random_band_samples(SYMMETRY_SAMPLES, seed);
    for (label, gamma) in [("2", 2.0), ("5/3", 5.0 / 3.0)] {
        let params = ModelParams {
            gamma,
            ..ModelParams::default()
        };
        let report = check_symmetrizability_with(&samples, &params, assembly(mutation))?;
        out.push(CheckResult::at_most(
            &format!("symmetrizer symmetry (gamma={label})"),
            report.max_asymmetry,
            SYMMETRY_TOLERANCE,
        ));
        out.push(CheckResult::at_most(
            &format!("symmetrizer min eigenvalue (gamma={label})"),
            report.eigenvalue_mismatch,
            EIGENVALUE_TOLERANCE,
        ));
    }

    let g64 = Grid::new(2, 64)?;
    for (label, gamma) in [("2", 2.0), ("5/3", 5.0 / 3.0)] {
        let params = ModelParams {
            gamma,
            ..ModelParams::default()
        };
        let r = residual(&g64, &smooth_state(&g64, 0.1), &params, mutation)?;
        out.push(CheckResult::at_most(
            &format!("quasilinear form, smooth state (gamma={label})"),
            r,
            QUASILINEAR_TOLERANCE,
        ));
    }
    let g32 = Grid::new(2, 32)?;
    let r = residual(&g32, &high_mode_state(&g32, 0.3), &ModelParams::default(), mutation)?;
    out.push(CheckResult::at_most(
        "quasilinear form, high-amplitude state",
        r,
        QUASILINEAR_TOLERANCE,
    ));

    let lambda = 0.1;
    let n = g64.field_from_fn(|x| 1.0 + 0.01 * x[1].cos() + 0.02 * (x[0] - 2.0 * x[1]).sin());
    let grad_phi = poisson_grad_phi(&g64, &n, lambda)?;
    out.push(CheckResult::at_most(
        "poisson residual",
        poisson_residual(&g64, &n, &grad_phi, lambda),
        POISSON_TOLERANCE,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = random_vector_field(&g64, &mut rng);
    let pv = g64.leray_project(&v);
    let ppv = g64.leray_project(&pv);
    out.push(CheckResult::at_most(
        "leray idempotence",
        g64.sobolev_norm(&ppv.sub(&pv), 0) / g64.sobolev_norm(&pv, 0),
        PROJECTION_TOLERANCE,
    ));
    let f = random_vector_field(&g64, &mut rng).c[0].clone();
    let grad = g64.gradient(&f);
    out.push(CheckResult::at_most(
        "leray annihilates gradients",
        g64.sobolev_norm(&g64.leray_project(&grad), 0) / g64.sobolev_norm(&grad, 0),
        PROJECTION_TOLERANCE,
    ));
    out.push(CheckResult::at_most(
        "projected field is solenoidal",
        g64.sobolev_norm(&g64.divergence(&pv), 0) / g64.sobolev_norm(&pv, 0),
        PROJECTION_TOLERANCE,
    ));

    // ‖sin x‖ on the 2-torus is π√2 in L² and twice that in H².
    let s = g64.field_from_fn(|x| x[0].sin());
    let expected = std::f64::consts::PI * 2f64.sqrt();
    let err = (g64.sobolev_norm(&s, 0) - expected).abs() + (g64.sobolev_norm(&s, 2) - 2.0 * expected).abs();
    out.push(CheckResult::at_most("sobolev norm of a single mode", err / expected, PROJECTION_TOLERANCE));
    Ok(out)
}
