//! Fourier calculus on the periodic box `[0, 2π)^dim`.
//!
//! Convention: `f(x) = Σ_k f̂_k e^{i k·x}`, so a forward transform is the raw
//! FFT divided by the number of points. Integral norms carry the `(2π)^dim`
//! volume factor. On 2D grids fields depend on `(x, y)` only and every vector
//! field still has three components (the third axis has zero wavenumber).
//!
//! Odd derivatives use a wavenumber table whose Nyquist entry is zero so that
//! derivatives of real fields stay real; the Laplacian uses the true `|k|²`.

mod field;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub use field::{ScalarField, Shape, VectorField};

use crate::error::{Error, Result};

/// Relative mean tolerance accepted by [`Grid::grad_inv_laplacian`].
pub const MEAN_ZERO_TOLERANCE: f64 = 1e-10;

/// Anything made of scalar components on the grid; used by the norms.
pub trait Components {
    fn components(&self) -> Vec<&ScalarField>;
}

impl Components for ScalarField {
    fn components(&self) -> Vec<&ScalarField> {
        vec![self]
    }
}

impl Components for VectorField {
    fn components(&self) -> Vec<&ScalarField> {
        self.c.iter().collect()
    }
}

impl<const K: usize> Components for [&ScalarField; K] {
    fn components(&self) -> Vec<&ScalarField> {
        self.to_vec()
    }
}

/// Normalised Fourier coefficients of a real field.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    shape: Shape,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// The `k = 0` coefficient, i.e. the spatial mean.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }
}

/// Periodic tensor grid with FFT plans, wavenumber tables and dealias mask.
#[derive(Clone)]
pub struct Grid {
    shape: Shape,
    wavenumbers: Vec<i64>,
    deriv_wavenumbers: Vec<f64>,
    dealias_mask: Vec<bool>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.shape.dim)
            .field("n", &self.shape.n)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape
    }
}

impl Grid {
    /// Builds a `dim`-dimensional grid with `n` points per axis.
    ///
    /// `n` must be even and within `8..=256`; `dim` must be 2 or 3.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::Config(format!("grid dimension must be 2 or 3, got {dim}")));
        }
        if n % 2 != 0 || !(8..=256).contains(&n) {
            return Err(Error::Config(format!(
                "points per axis must be even and in 8..=256, got {n}"
            )));
        }
        let half = n as i64 / 2;
        let wavenumbers: Vec<i64> = (0..n as i64)
            .map(|i| if i < half { i } else { i - n as i64 })
            .collect();
        let deriv_wavenumbers = wavenumbers
            .iter()
            .map(|&k| if k == -half { 0.0 } else { k as f64 })
            .collect();
        let keep: Vec<bool> = wavenumbers.iter().map(|&k| 3 * k.abs() <= n as i64).collect();
        let shape = Shape { dim, n };
        let dealias_mask = (0..shape.len())
            .map(|idx| {
                let ix = shape.unravel(idx);
                (0..dim).all(|a| keep[ix[a]])
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            shape,
            wavenumbers,
            deriv_wavenumbers,
            dealias_mask,
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
        })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim
    }

    pub fn n(&self) -> usize {
        self.shape.n
    }

    pub fn len(&self) -> usize {
        self.shape.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shape.is_empty()
    }

    /// Grid spacing `2π / n`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.shape.n as f64
    }

    /// Domain volume `(2π)^dim`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.shape.dim as i32)
    }

    /// Quadrature weight of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.len() as f64
    }

    /// Per-axis integer frequencies in FFT order `0, 1, …, n/2-1, -n/2, …, -1`.
    pub fn wavenumbers(&self) -> &[i64] {
        &self.wavenumbers
    }

    /// Flat mask over modes; `true` where the mode survives dealiasing.
    pub fn dealias_mask(&self) -> &[bool] {
        &self.dealias_mask
    }

    /// True and derivative wavenumber vectors of a flat mode index.
    #[inline]
    fn mode(&self, idx: usize) -> ([f64; 3], [f64; 3]) {
        let ix = self.shape.unravel(idx);
        let mut k = [0.0; 3];
        let mut kd = [0.0; 3];
        for a in 0..self.shape.dim {
            k[a] = self.wavenumbers[ix[a]] as f64;
            kd[a] = self.deriv_wavenumbers[ix[a]];
        }
        (k, kd)
    }

    fn check(&self, f: &ScalarField) -> Result<()> {
        if f.shape() != self.shape {
            return Err(Error::GridMismatch(format!(
                "field has shape {:?}, grid has {:?}",
                f.shape(),
                self.shape
            )));
        }
        Ok(())
    }

    /// Physical coordinates of grid point `idx` (`z = 0` on 2D grids).
    pub fn coordinates(&self, idx: usize) -> [f64; 3] {
        let ix = self.shape.unravel(idx);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.shape.dim {
            x[a] = ix[a] as f64 * h;
        }
        x
    }

    /// Samples `f(x, y, z)` at every grid point.
    pub fn field_from_fn(&self, f: impl Fn([f64; 3]) -> f64) -> ScalarField {
        let data = (0..self.len()).map(|i| f(self.coordinates(i))).collect();
        ScalarField::from_vec(self.shape, data)
    }

    pub fn vector_from_fn(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> VectorField {
        let mut out = VectorField::zeros(self.shape);
        for i in 0..self.len() {
            let v = f(self.coordinates(i));
            for k in 0..3 {
                out.c[k][i] = v[k];
            }
        }
        out
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.ifft } else { &self.fft };
        let n = self.shape.n;
        let dim = self.shape.dim;
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // Last axis is contiguous.
        plan.process_with_scratch(buf, &mut scratch);
        let mut line = vec![Complex64::default(); n];
        for axis in 0..dim - 1 {
            let stride = n.pow((dim - 1 - axis) as u32);
            let outer_count = n.pow(axis as u32);
            for outer in 0..outer_count {
                for inner in 0..stride {
                    let base = outer * n * stride + inner;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = buf[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        buf[base + j * stride] = *v;
                    }
                }
            }
        }
    }

    /// Forward transform; coefficients normalised so that `f = Σ f̂_k e^{ik·x}`.
    pub fn forward(&self, f: &ScalarField) -> Spectrum {
        debug_assert_eq!(f.shape(), self.shape);
        let mut buf: Vec<Complex64> = f.as_slice().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, false);
        let norm = 1.0 / self.len() as f64;
        for c in &mut buf {
            *c *= norm;
        }
        Spectrum {
            shape: self.shape,
            coeffs: buf,
        }
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse(&self, s: &Spectrum) -> ScalarField {
        debug_assert_eq!(s.shape, self.shape);
        let mut buf = s.coeffs.clone();
        self.transform(&mut buf, true);
        ScalarField::from_vec(self.shape, buf.into_iter().map(|c| c.re).collect())
    }

    /// Builds a new spectrum by applying `f(k, k_deriv, coeff)` mode-wise.
    fn map_spectrum(
        &self,
        s: &Spectrum,
        f: impl Fn([f64; 3], [f64; 3], Complex64) -> Complex64,
    ) -> Spectrum {
        let coeffs = s
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| {
                let (k, kd) = self.mode(idx);
                f(k, kd, c)
            })
            .collect();
        Spectrum {
            shape: self.shape,
            coeffs,
        }
    }

    /// Zeroes masked modes in place; retained coefficients are untouched.
    pub fn dealias_spectrum(&self, s: &mut Spectrum) {
        for (c, &keep) in s.coeffs.iter_mut().zip(&self.dealias_mask) {
            if !keep {
                *c = Complex64::default();
            }
        }
    }

    /// Two-thirds-rule filter.
    pub fn dealias(&self, f: &ScalarField) -> ScalarField {
        let mut s = self.forward(f);
        self.dealias_spectrum(&mut s);
        self.inverse(&s)
    }

    pub fn dealias_vector(&self, v: &VectorField) -> VectorField {
        VectorField {
            c: std::array::from_fn(|k| self.dealias(&v.c[k])),
        }
    }

    /// Spectral derivative along `axis`.
    pub fn ddx(&self, f: &ScalarField, axis: usize) -> Result<ScalarField> {
        self.check(f)?;
        if axis >= self.shape.dim {
            return Err(Error::Axis {
                axis,
                dim: self.shape.dim,
            });
        }
        let s = self.forward(f);
        Ok(self.inverse(&self.map_spectrum(&s, |_, kd, c| Complex64::new(0.0, kd[axis]) * c)))
    }

    fn grad_spectrum(&self, s: &Spectrum) -> VectorField {
        let mut out = VectorField::zeros(self.shape);
        for axis in 0..self.shape.dim {
            out.c[axis] = self.inverse(&self.map_spectrum(s, |_, kd, c| Complex64::new(0.0, kd[axis]) * c));
        }
        out
    }

    pub fn gradient(&self, f: &ScalarField) -> VectorField {
        self.grad_spectrum(&self.forward(f))
    }

    fn div_spectrum(&self, v: &VectorField) -> Spectrum {
        let specs: Vec<Spectrum> = (0..self.shape.dim).map(|a| self.forward(&v.c[a])).collect();
        let coeffs = (0..self.len())
            .map(|idx| {
                let (_, kd) = self.mode(idx);
                specs
                    .iter()
                    .enumerate()
                    .fold(Complex64::default(), |acc, (a, s)| acc + Complex64::new(0.0, kd[a]) * s.coeffs[idx])
            })
            .collect();
        Spectrum {
            shape: self.shape,
            coeffs,
        }
    }

    pub fn divergence(&self, v: &VectorField) -> ScalarField {
        self.inverse(&self.div_spectrum(v))
    }

    pub fn curl(&self, v: &VectorField) -> VectorField {
        let specs: [Spectrum; 3] = std::array::from_fn(|a| self.forward(&v.c[a]));
        let mut out: [Vec<Complex64>; 3] = std::array::from_fn(|_| Vec::with_capacity(self.len()));
        for idx in 0..self.len() {
            let (_, kd) = self.mode(idx);
            let ik = |a: usize| Complex64::new(0.0, kd[a]);
            let vh = |a: usize| specs[a].coeffs[idx];
            out[0].push(ik(1) * vh(2) - ik(2) * vh(1));
            out[1].push(ik(2) * vh(0) - ik(0) * vh(2));
            out[2].push(ik(0) * vh(1) - ik(1) * vh(0));
        }
        let [x, y, z] = out;
        VectorField::new(
            self.inverse(&Spectrum { shape: self.shape, coeffs: x }),
            self.inverse(&Spectrum { shape: self.shape, coeffs: y }),
            self.inverse(&Spectrum { shape: self.shape, coeffs: z }),
        )
    }

    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        let s = self.forward(f);
        self.inverse(&self.map_spectrum(&s, |k, _, c| c * -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2])))
    }

    fn inv_laplacian_spectrum(&self, s: &Spectrum) -> Spectrum {
        self.map_spectrum(s, |k, _, c| {
            let ksq = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if ksq == 0.0 {
                Complex64::default()
            } else {
                c / -ksq
            }
        })
    }

    fn check_mean_zero(&self, f: &ScalarField, s: &Spectrum) -> Result<()> {
        let tolerance = MEAN_ZERO_TOLERANCE * self.sobolev_norm(f, 0);
        let mean = s.mean();
        if mean.abs() > tolerance {
            return Err(Error::Solvability { mean, tolerance });
        }
        Ok(())
    }

    /// Mean-zero solution of `Δφ = f`; fails when `f` is not mean-zero.
    pub fn inv_laplacian(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check(f)?;
        let s = self.forward(f);
        self.check_mean_zero(f, &s)?;
        Ok(self.inverse(&self.inv_laplacian_spectrum(&s)))
    }

    /// `∇Δ⁻¹f` with the zero mode dropped.
    ///
    /// Requires `|mean(f)| ≤ 1e-10 ‖f‖_{L²}`.
    pub fn grad_inv_laplacian(&self, f: &ScalarField) -> Result<VectorField> {
        self.check(f)?;
        let s = self.forward(f);
        self.check_mean_zero(f, &s)?;
        Ok(self.grad_inv_laplacian_unchecked(&s))
    }

    /// `Δ⁻¹` without the solvability check; the zero mode is discarded.
    pub(crate) fn inv_laplacian_unchecked(&self, s: &Spectrum) -> ScalarField {
        self.inverse(&self.inv_laplacian_spectrum(s))
    }

    /// `∇Δ⁻¹` without the solvability check; the zero mode is discarded.
    pub(crate) fn grad_inv_laplacian_unchecked(&self, s: &Spectrum) -> VectorField {
        self.grad_spectrum(&self.inv_laplacian_spectrum(s))
    }

    /// Orthogonal projection onto divergence-free fields, `v − ∇Δ⁻¹ div v`.
    pub fn leray_project(&self, v: &VectorField) -> VectorField {
        let specs: [Spectrum; 3] = std::array::from_fn(|a| self.forward(&v.c[a]));
        let mut out: [Vec<Complex64>; 3] = std::array::from_fn(|_| Vec::with_capacity(self.len()));
        for idx in 0..self.len() {
            let (_, kd) = self.mode(idx);
            let kk = kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2];
            let vh = [specs[0].coeffs[idx], specs[1].coeffs[idx], specs[2].coeffs[idx]];
            if kk == 0.0 {
                for a in 0..3 {
                    out[a].push(vh[a]);
                }
                continue;
            }
            let kdotv = vh[0] * kd[0] + vh[1] * kd[1] + vh[2] * kd[2];
            for a in 0..3 {
                out[a].push(vh[a] - kdotv * (kd[a] / kk));
            }
        }
        let [x, y, z] = out;
        VectorField::new(
            self.inverse(&Spectrum { shape: self.shape, coeffs: x }),
            self.inverse(&Spectrum { shape: self.shape, coeffs: y }),
            self.inverse(&Spectrum { shape: self.shape, coeffs: z }),
        )
    }

    /// `H^s` norm `(Σ_k (1+|k|²)^s |f̂_k|² (2π)^dim)^{1/2}`, summed over components.
    pub fn sobolev_norm(&self, f: &impl Components, s: u32) -> f64 {
        let weights = self.sobolev_weights(s);
        let mut total = 0.0;
        for comp in f.components() {
            let spec = self.forward(comp);
            total += spec
                .coeffs
                .iter()
                .zip(&weights)
                .map(|(c, w)| w * c.norm_sqr())
                .sum::<f64>();
        }
        (total * self.volume()).sqrt()
    }

    fn sobolev_weights(&self, s: u32) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let (k, _) = self.mode(idx);
                (1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).powi(s as i32)
            })
            .collect()
    }

    /// `L²` integral by grid quadrature (exact for band-limited integrands).
    pub fn integrate(&self, f: &ScalarField) -> f64 {
        f.as_slice().iter().sum::<f64>() * self.cell_volume()
    }

    /// Dealiased pointwise product.
    pub fn product(&self, a: &ScalarField, b: &ScalarField, dealias: bool) -> ScalarField {
        let p = a.mul(b);
        if dealias {
            self.dealias(&p)
        } else {
            p
        }
    }

    /// Spectral derivative of order `alpha[a]` along each axis `a`.
    pub fn partial(&self, f: &ScalarField, alpha: [u32; 3]) -> ScalarField {
        let s = self.forward(f);
        self.inverse(&self.map_spectrum(&s, |k, kd, c| {
            let mut m = Complex64::new(1.0, 0.0);
            for a in 0..3 {
                // Odd orders use the Nyquist-free table so the result stays real.
                let ka = if alpha[a] % 2 == 1 { kd[a] } else { k[a] };
                m *= Complex64::new(0.0, ka).powu(alpha[a]);
            }
            m * c
        }))
    }
}
