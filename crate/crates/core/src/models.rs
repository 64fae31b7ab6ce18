//! State types, γ-law constitutive relations and the quasilinear structure
//! of the Euler-Poisson-MHD system.
//!
//! The unknown is ordered `W = (n, u₁, u₂, u₃, B₁, B₂, B₃)`. In that ordering
//! the principal part reads `∂ₜW + Σᵢ Aᵢ(W) ∂ᵢW` with
//!
//! ```text
//!        ⎡ uᵢ        n eᵢᵀ     0        ⎤
//!   Aᵢ = ⎢ h'(n) eᵢ  uᵢ I      Gᵢᵀ / n  ⎥
//!        ⎣ 0         Gᵢ        uᵢ I     ⎦
//! ```
//!
//! and the symmetrizer `A₀ = diag(h'(n), n I, I)` makes every `A₀Aᵢ`
//! symmetric. The magnetic rows carry `Gᵢ` unscaled: `Σᵢ Gᵢ ∂ᵢu = B div u −
//! (B·∇)u`, which is exactly the induction equation once `div B = 0`.

use nalgebra::{Matrix3, SMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, ScalarField, VectorField};
use crate::time::RkState;

pub type Matrix7 = SMatrix<f64, 7, 7>;
pub type Vector7 = [f64; 7];

/// Physical and numerical parameters shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Scaled Debye length.
    pub lambda: f64,
    /// Adiabatic exponent.
    pub gamma: f64,
    /// Sobolev index used by error metrics.
    pub sobolev_index: u32,
    /// Apply the two-thirds rule after nonlinear products.
    pub dealias: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            gamma: 2.0,
            sobolev_index: 2,
            dealias: true,
        }
    }
}

impl ModelParams {
    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::Config(format!("lambda must lie in (0, 1], got {}", self.lambda)));
        }
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return Err(Error::Config(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        if self.sobolev_index > 6 {
            return Err(Error::Config(format!(
                "sobolev index must be at most 6, got {}",
                self.sobolev_index
            )));
        }
        Ok(())
    }
}

/// `(n, u, B)` of the compressible system. Also used for tendencies.
#[derive(Debug, Clone, PartialEq)]
pub struct PlasmaState {
    pub n: ScalarField,
    pub u: VectorField,
    pub b: VectorField,
}

impl PlasmaState {
    /// Uniform unit density at rest with field `b`.
    pub fn quiescent(grid: &Grid, b: [f64; 3]) -> Self {
        Self {
            n: ScalarField::constant(grid.shape(), 1.0),
            u: VectorField::zeros(grid.shape()),
            b: VectorField::constant(grid.shape(), b),
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            n: ScalarField::zeros(grid.shape()),
            u: VectorField::zeros(grid.shape()),
            b: VectorField::zeros(grid.shape()),
        }
    }

    /// The seven scalar components in `W` order.
    pub fn components(&self) -> [&ScalarField; 7] {
        [
            &self.n, &self.u.c[0], &self.u.c[1], &self.u.c[2], &self.b.c[0], &self.b.c[1], &self.b.c[2],
        ]
    }

    pub fn from_components(mut c: Vec<ScalarField>) -> Self {
        assert_eq!(c.len(), 7);
        let b = VectorField::new(c.remove(4), c.remove(4), c.remove(4));
        let u = VectorField::new(c.remove(1), c.remove(1), c.remove(1));
        Self { n: c.remove(0), u, b }
    }

    #[inline]
    pub fn at(&self, i: usize) -> Vector7 {
        let u = self.u.at(i);
        let b = self.b.at(i);
        [self.n[i], u[0], u[1], u[2], b[0], b[1], b[2]]
    }

    /// Checks positivity, unit mean density and solenoidal field.
    pub fn check_invariants(&self, grid: &Grid) -> Result<()> {
        let min = self.n.min();
        if !(min > 0.0) {
            return Err(Error::Vacuum { min_density: min });
        }
        let mean = self.n.mean() - 1.0;
        if mean.abs() > 1e-10 {
            return Err(Error::Solvability {
                mean,
                tolerance: 1e-10,
            });
        }
        let div = relative_divergence(grid, &self.b);
        if div > 1e-10 {
            return Err(Error::Precondition(format!(
                "magnetic field divergence {div:e} exceeds 1e-10"
            )));
        }
        Ok(())
    }
}

impl RkState for PlasmaState {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.n.axpy(a, &x.n);
        self.u.axpy(a, &x.u);
        self.b.axpy(a, &x.b);
    }

    fn is_finite(&self) -> bool {
        self.n.is_finite() && self.u.is_finite() && self.b.is_finite()
    }
}

/// Solution of the incompressible limit: velocity, field and recovered
/// mean-zero pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct MhdState {
    pub u: VectorField,
    pub b: VectorField,
    pub p: ScalarField,
}

/// `‖div v‖ / ‖v‖` in `L²`; absolute when `v` vanishes.
pub fn relative_divergence(grid: &Grid, v: &VectorField) -> f64 {
    let div = grid.sobolev_norm(&grid.divergence(v), 0);
    let norm = grid.sobolev_norm(v, 0);
    if norm > 0.0 {
        div / norm
    } else {
        div
    }
}

fn positive(n: f64) -> Result<()> {
    if n > 0.0 {
        Ok(())
    } else {
        Err(Error::Vacuum { min_density: n })
    }
}

/// `p(n) = n^γ / γ`.
pub fn pressure(n: f64, gamma: f64) -> Result<f64> {
    positive(n)?;
    Ok(n.powf(gamma) / gamma)
}

/// `p'(n) = n^{γ-1}`.
pub fn pressure_derivative(n: f64, gamma: f64) -> Result<f64> {
    positive(n)?;
    Ok(n.powf(gamma - 1.0))
}

/// Enthalpy `(n^{γ-1} - 1)/(γ - 1)`, normalised so that `h(1) = 0`.
pub fn enthalpy(n: f64, gamma: f64) -> Result<f64> {
    positive(n)?;
    Ok((n.powf(gamma - 1.0) - 1.0) / (gamma - 1.0))
}

/// `h'(n) = p'(n)/n = n^{γ-2}`.
pub fn enthalpy_derivative(n: f64, gamma: f64) -> Result<f64> {
    positive(n)?;
    Ok(n.powf(gamma - 2.0))
}

/// The 3×3 block `Gᵢ` built from `B`; `axis` is zero-based.
pub fn assemble_g(b: [f64; 3], axis: usize) -> Matrix3<f64> {
    let [b1, b2, b3] = b;
    match axis {
        0 => Matrix3::new(0.0, 0.0, 0.0, b2, -b1, 0.0, b3, 0.0, -b1),
        1 => Matrix3::new(-b2, b1, 0.0, 0.0, 0.0, 0.0, 0.0, b3, -b2),
        2 => Matrix3::new(-b3, 0.0, b1, 0.0, -b3, b2, 0.0, 0.0, 0.0),
        _ => panic!("axis {axis} out of range"),
    }
}

/// Symmetrizer `diag(h'(n), n, n, n, 1, 1, 1)`.
pub fn assemble_a0(n: f64, params: &ModelParams) -> Result<Matrix7> {
    let hp = enthalpy_derivative(n, params.gamma)?;
    let mut a0 = Matrix7::identity();
    a0[(0, 0)] = hp;
    for k in 1..4 {
        a0[(k, k)] = n;
    }
    Ok(a0)
}

/// Coefficient matrix of `∂ᵢW` for zero-based `axis`.
pub fn assemble_ai(w: &Vector7, axis: usize, params: &ModelParams) -> Result<Matrix7> {
    assemble_ai_from(w, axis, params, &assemble_g(bvec(w), axis))
}

fn bvec(w: &Vector7) -> [f64; 3] {
    [w[4], w[5], w[6]]
}

/// `Aᵢ` with an explicitly supplied `Gᵢ` block.
pub fn assemble_ai_from(w: &Vector7, axis: usize, params: &ModelParams, g: &Matrix3<f64>) -> Result<Matrix7> {
    assemble_ai_blocks(w, axis, params, &g.transpose(), g)
}

/// `Aᵢ` with independent momentum-row (`Gᵢᵀ`) and magnetic-row (`Gᵢ`) blocks.
pub fn assemble_ai_blocks(
    w: &Vector7,
    axis: usize,
    params: &ModelParams,
    momentum_block: &Matrix3<f64>,
    magnetic_block: &Matrix3<f64>,
) -> Result<Matrix7> {
    let n = w[0];
    let hp = enthalpy_derivative(n, params.gamma)?;
    let ui = w[1 + axis];
    let mut a = Matrix7::from_diagonal_element(ui);
    a[(0, 1 + axis)] = n;
    a[(1 + axis, 0)] = hp;
    for r in 0..3 {
        for c in 0..3 {
            a[(1 + r, 4 + c)] = momentum_block[(r, c)] / n;
            a[(4 + r, 1 + c)] = magnetic_block[(r, c)];
        }
    }
    Ok(a)
}

/// Result of probing `A₀Aᵢ` symmetry and `A₀` definiteness over samples.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetrizabilityReport {
    pub samples: usize,
    /// `maxᵢ ‖A₀Aᵢ − (A₀Aᵢ)ᵀ‖_F` over all samples.
    pub max_asymmetry: f64,
    /// Smallest eigenvalue of `A₀` seen over the samples.
    pub min_eigenvalue: f64,
    /// `min(h'(n), n)` at the sample attaining the smallest eigenvalue bound.
    pub eigenvalue_bound: f64,
    /// Largest per-sample deviation `|λ_min(A₀) − min(h'(n), n)|`.
    pub eigenvalue_mismatch: f64,
    pub passed: bool,
}

/// Asymmetry tolerance asserted by [`check_symmetrizability`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-13;
/// Eigenvalue slack asserted by [`check_symmetrizability`].
pub const EIGENVALUE_TOLERANCE: f64 = 1e-12;

pub fn check_symmetrizability(samples: &[Vector7], params: &ModelParams) -> Result<SymmetrizabilityReport> {
    check_symmetrizability_with(samples, params, assemble_ai)
}

/// As [`check_symmetrizability`] with a caller-supplied `Aᵢ` assembly.
pub fn check_symmetrizability_with<F>(
    samples: &[Vector7],
    params: &ModelParams,
    assemble: F,
) -> Result<SymmetrizabilityReport>
where
    F: Fn(&Vector7, usize, &ModelParams) -> Result<Matrix7>,
{
    let mut max_asymmetry: f64 = 0.0;
    let mut min_eigenvalue = f64::INFINITY;
    let mut eigenvalue_bound = f64::INFINITY;
    let mut eigenvalue_mismatch: f64 = 0.0;
    for w in samples {
        let a0 = assemble_a0(w[0], params)?;
        for axis in 0..3 {
            let sym = a0 * assemble(w, axis, params)?;
            max_asymmetry = max_asymmetry.max((sym - sym.transpose()).norm());
        }
        let lmin = SymmetricEigen::new(a0).eigenvalues.min();
        let bound = enthalpy_derivative(w[0], params.gamma)?.min(w[0]);
        min_eigenvalue = min_eigenvalue.min(lmin);
        eigenvalue_bound = eigenvalue_bound.min(bound);
        eigenvalue_mismatch = eigenvalue_mismatch.max((lmin - bound).abs());
    }
    let passed = max_asymmetry <= SYMMETRY_TOLERANCE && min_eigenvalue >= eigenvalue_bound - EIGENVALUE_TOLERANCE;
    Ok(SymmetrizabilityReport {
        samples: samples.len(),
        max_asymmetry,
        min_eigenvalue,
        eigenvalue_bound,
        eigenvalue_mismatch,
        passed,
    })
}

/// Uniform samples with `n ∈ [½, 3/2]` and `u, B ∈ [-1, 1]³`.
pub fn random_band_samples(count: usize, seed: u64) -> Vec<Vector7> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut w = [0.0; 7];
            w[0] = rng.gen_range(0.5..=1.5);
            for v in &mut w[1..] {
                *v = rng.gen_range(-1.0..=1.0);
            }
            w
        })
        .collect()
}

/// `curl B × B`, dealiased when requested.
pub fn lorentz_force(grid: &Grid, b: &VectorField, dealias: bool) -> VectorField {
    let f = grid.curl(b).cross(b);
    if dealias {
        grid.dealias_vector(&f)
    } else {
        f
    }
}

/// `curl(u × B)`; the cross product is dealiased before the curl.
pub fn induction_term(grid: &Grid, u: &VectorField, b: &VectorField, dealias: bool) -> VectorField {
    let e = u.cross(b);
    let e = if dealias { grid.dealias_vector(&e) } else { e };
    grid.curl(&e)
}

/// `(u·∇)v` assembled pointwise, dealiased when requested.
pub fn advect(grid: &Grid, u: &VectorField, v: &VectorField, dealias: bool) -> VectorField {
    let shape = grid.shape();
    let mut out = VectorField::zeros(shape);
    for k in 0..3 {
        let grad = grid.gradient(&v.c[k]);
        let mut acc = ScalarField::zeros(shape);
        for j in 0..grid.dim() {
            acc.axpy(1.0, &u.c[j].mul(&grad.c[j]));
        }
        out.c[k] = if dealias { grid.dealias(&acc) } else { acc };
    }
    out
}

/// Upper bound `max |u| + √p'(n) + |B|/√n` on the characteristic speeds.
pub fn char_speed_bound(state: &PlasmaState, params: &ModelParams) -> Result<f64> {
    let min = state.n.min();
    if !(min > 0.0) {
        return Err(Error::Vacuum { min_density: min });
    }
    let mut speed: f64 = 0.0;
    for i in 0..state.n.len() {
        let n = state.n[i];
        let u = state.u.at(i);
        let b = state.b.at(i);
        let umag = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        let bmag = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
        speed = speed.max(umag + pressure_derivative(n, params.gamma)?.sqrt() + bmag / n.sqrt());
    }
    Ok(speed)
}

/// Transport part of the compressible system in vector-calculus form:
/// `(div(n u), (u·∇)u + ∇h(n) − (1/n) curl B × B, −curl(u × B))`.
///
/// The evolution equations are `∂ₜW = −flux + (0, ∇φ, 0)`.
pub fn flux_terms(grid: &Grid, state: &PlasmaState, params: &ModelParams) -> Result<PlasmaState> {
    let min = state.n.min();
    if !(min > 0.0) {
        return Err(Error::Vacuum { min_density: min });
    }
    let dealias = params.dealias;
    let gamma = params.gamma;

    let mass_flux = VectorField {
        c: std::array::from_fn(|k| grid.product(&state.n, &state.u.c[k], dealias)),
    };
    let dn = grid.divergence(&mass_flux);

    let h = state.n.map(|v| (v.powf(gamma - 1.0) - 1.0) / (gamma - 1.0));
    let h = if dealias { grid.dealias(&h) } else { h };
    let inv_n = state.n.map(|v| 1.0 / v);
    let lorentz = lorentz_force(grid, &state.b, dealias);
    let mut du = advect(grid, &state.u, &state.u, dealias);
    du.axpy(1.0, &grid.gradient(&h));
    for k in 0..3 {
        let l = grid.product(&inv_n, &lorentz.c[k], dealias);
        du.c[k].axpy(-1.0, &l);
    }

    let db = induction_term(grid, &state.u, &state.b, dealias).scale(-1.0);
    Ok(PlasmaState { n: dn, u: du, b: db })
}

/// Matrix form `Σᵢ Aᵢ(W) ∂ᵢW` evaluated pointwise and projected onto the
/// resolved band.
pub fn matrix_flux(grid: &Grid, state: &PlasmaState, params: &ModelParams) -> Result<PlasmaState> {
    matrix_flux_with(grid, state, params, assemble_ai)
}

pub fn matrix_flux_with<F>(grid: &Grid, state: &PlasmaState, params: &ModelParams, assemble: F) -> Result<PlasmaState>
where
    F: Fn(&Vector7, usize, &ModelParams) -> Result<Matrix7>,
{
    let comps = state.components();
    let derivs: Vec<Vec<ScalarField>> = (0..grid.dim())
        .map(|axis| comps.iter().map(|f| grid.ddx(f, axis)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut out: Vec<ScalarField> = (0..7).map(|_| ScalarField::zeros(grid.shape())).collect();
    for i in 0..grid.len() {
        let w = state.at(i);
        let mut acc = nalgebra::SVector::<f64, 7>::zeros();
        for (axis, d) in derivs.iter().enumerate() {
            let dw = nalgebra::SVector::<f64, 7>::from_fn(|r, _| d[r][i]);
            acc += assemble(&w, axis, params)? * dw;
        }
        for r in 0..7 {
            out[r][i] = acc[r];
        }
    }
    let out = out.iter().map(|f| grid.dealias(f)).collect();
    Ok(PlasmaState::from_components(out))
}

fn l2_norm_sq(grid: &Grid, s: &PlasmaState) -> f64 {
    s.components().iter().map(|f| grid.integrate(&f.mul(f))).sum()
}

/// Relative `L²` discrepancy between [`matrix_flux`] and [`flux_terms`].
pub fn quasilinear_residual(grid: &Grid, state: &PlasmaState, params: &ModelParams) -> Result<f64> {
    let matrix = matrix_flux(grid, state, params)?;
    let direct = flux_terms(grid, state, params)?;
    Ok(relative_discrepancy(grid, &matrix, &direct))
}

pub(crate) fn relative_discrepancy(grid: &Grid, a: &PlasmaState, b: &PlasmaState) -> f64 {
    let mut diff = a.clone();
    diff.axpy(-1.0, b);
    let num = l2_norm_sq(grid, &diff).sqrt();
    let den = l2_norm_sq(grid, b).sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}
