//! Real-space field storage on the periodic grid.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

/// Grid shape shared by every field: spatial dimension and points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub dim: usize,
    pub n: usize,
}

impl Shape {
    /// Number of grid points (equivalently, of Fourier modes).
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-axis integer indices of a flat row-major index; unused axes are 0.
    #[inline]
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % self.n;
            idx /= self.n;
        }
        out
    }
}

/// Scalar field sampled on the grid, row-major with axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    shape: Shape,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(shape: Shape) -> Self {
        Self::constant(shape, 0.0)
    }

    pub fn constant(shape: Shape, value: f64) -> Self {
        Self {
            shape,
            data: vec![value; shape.len()],
        }
    }

    /// Wraps raw samples. Panics if the length does not match the shape.
    pub fn from_vec(shape: Shape, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), shape.len(), "sample count does not match grid shape");
        Self { shape, data }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.shape, other.shape);
        Self {
            shape: self.shape,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.shape, x.shape);
        for (s, &v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for ScalarField {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

/// Three-component vector field; always three components, even on 2D grids.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub c: [ScalarField; 3],
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField, z: ScalarField) -> Self {
        debug_assert!(x.shape() == y.shape() && y.shape() == z.shape());
        Self { c: [x, y, z] }
    }

    pub fn zeros(shape: Shape) -> Self {
        Self::constant(shape, [0.0; 3])
    }

    pub fn constant(shape: Shape, v: [f64; 3]) -> Self {
        Self::new(
            ScalarField::constant(shape, v[0]),
            ScalarField::constant(shape, v[1]),
            ScalarField::constant(shape, v[2]),
        )
    }

    pub fn shape(&self) -> Shape {
        self.c[0].shape()
    }

    #[inline]
    pub fn at(&self, i: usize) -> [f64; 3] {
        [self.c[0][i], self.c[1][i], self.c[2][i]]
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            c: std::array::from_fn(|k| self.c[k].add(&other.c[k])),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            c: std::array::from_fn(|k| self.c[k].sub(&other.c[k])),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            c: std::array::from_fn(|k| self.c[k].scale(a)),
        }
    }

    /// Multiplies every component by a scalar field.
    pub fn mul_scalar(&self, f: &ScalarField) -> Self {
        Self {
            c: std::array::from_fn(|k| self.c[k].mul(f)),
        }
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        for k in 0..3 {
            self.c[k].axpy(a, &x.c[k]);
        }
    }

    /// Pointwise dot product.
    pub fn dot(&self, other: &Self) -> ScalarField {
        let mut out = self.c[0].mul(&other.c[0]);
        for k in 1..3 {
            out.axpy(1.0, &self.c[k].mul(&other.c[k]));
        }
        out
    }

    /// Pointwise cross product `self × other`.
    pub fn cross(&self, other: &Self) -> Self {
        let shape = self.shape();
        let mut out = Self::zeros(shape);
        for i in 0..shape.len() {
            let a = self.at(i);
            let b = other.at(i);
            out.c[0][i] = a[1] * b[2] - a[2] * b[1];
            out.c[1][i] = a[2] * b[0] - a[0] * b[2];
            out.c[2][i] = a[0] * b[1] - a[1] * b[0];
        }
        out
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        self.dot(self).map(f64::sqrt)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, f| m.max(f.max_abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(ScalarField::is_finite)
    }
}
