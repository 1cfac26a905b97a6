//! Periodic Cartesian grid, scalar/vector fields, and the Helmholtz operators
//! defined on them.
//!
//! Field storage is row-major with `y` as the slow index: node `(i, j)` (x index
//! `i`, y index `j`) lives at `values[j * n + i]` and sits at
//! `origin + (i * dx, j * dx)`.

mod fft;
mod helmholtz;

pub use fft::Fft2;
pub use helmholtz::{divergence, helmholtz_apply, helmholtz_invert, HelmholtzOperator};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 4 points per dimension, got {0}")]
    TooFewPoints(usize),
    #[error("box length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("Helmholtz parameter k must be finite and non-negative, got {0}")]
    BadWavenumber(f64),
    #[error("k = 0 requires a zero-mean right-hand side (mean {mean:e}, tolerance {tol:e})")]
    NonZeroMeanForSingularOperator { mean: f64, tol: f64 },
    #[error("field does not match grid (expected {expected} values, got {got})")]
    ShapeMismatch { expected: usize, got: usize },
}

/// Spatial discretization used for the Laplacian and for divergences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discretization {
    FiniteDifference,
    FourierSpectral,
}

/// An `n x n` periodic grid covering a square box of side `length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    length: f64,
    n: usize,
    origin: [f64; 2],
}

impl GridSpec {
    pub fn new(length: f64, n: usize, origin: [f64; 2]) -> Result<Self, GridError> {
        if n < 4 {
            return Err(GridError::TooFewPoints(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(GridError::BadLength(length));
        }
        Ok(Self { length, n, origin })
    }

    /// Grid on the box `[lo, lo + length]^2`.
    pub fn square(lo: f64, length: f64, n: usize) -> Result<Self, GridError> {
        Self::new(length, n, [lo, lo])
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        let dx = self.dx();
        dx * dx
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    /// Flat index of a possibly out-of-range node, wrapped periodically.
    #[inline]
    pub fn wrapped_index(&self, i: i64, j: i64) -> usize {
        let n = self.n as i64;
        self.index(i.rem_euclid(n) as usize, j.rem_euclid(n) as usize)
    }

    #[inline]
    pub fn coords(&self, i: usize, j: usize) -> [f64; 2] {
        let dx = self.dx();
        [self.origin[0] + i as f64 * dx, self.origin[1] + j as f64 * dx]
    }

    /// Continuous grid coordinates of a physical point (node `(i, j)` maps to `(i, j)`).
    #[inline]
    pub fn to_grid(&self, p: [f64; 2]) -> [f64; 2] {
        let dx = self.dx();
        [(p[0] - self.origin[0]) / dx, (p[1] - self.origin[1]) / dx]
    }
}

/// Real values on every node of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.len()],
        }
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        Self {
            spec,
            values: vec![c; spec.len()],
        }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != spec.len() {
            return Err(GridError::ShapeMismatch {
                expected: spec.len(),
                got: values.len(),
            });
        }
        Ok(Self { spec, values })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        for j in 0..spec.n() {
            for i in 0..spec.n() {
                let [x, y] = spec.coords(i, j);
                values.push(f(x, y));
            }
        }
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Grid inner product `sum u v` (without the cell-area factor).
    pub fn dot(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        for (v, w) in self.values.iter_mut().zip(&other.values) {
            *v += a * w;
        }
    }
}

/// A pair of scalar fields on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self, GridError> {
        if x.spec() != y.spec() {
            return Err(GridError::ShapeMismatch {
                expected: x.spec().len(),
                got: y.spec().len(),
            });
        }
        Ok(Self { x, y })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            x: ScalarField::zeros(spec),
            y: ScalarField::zeros(spec),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        self.x.spec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_validates() {
        assert_eq!(GridSpec::new(1.0, 3, [0.0, 0.0]), Err(GridError::TooFewPoints(3)));
        assert!(matches!(
            GridSpec::new(-1.0, 8, [0.0, 0.0]),
            Err(GridError::BadLength(_))
        ));
        let g = GridSpec::square(-0.5, 1.0, 64).unwrap();
        assert_eq!(g.dx(), 1.0 / 64.0);
        assert_eq!(g.coords(32, 0), [0.0, -0.5]);
        assert_eq!(g.wrapped_index(-1, 64), g.index(63, 0));
    }

    #[test]
    fn from_fn_layout_is_row_major_in_y() {
        let g = GridSpec::square(0.0, 4.0, 4).unwrap();
        let f = ScalarField::from_fn(g, |x, y| x + 10.0 * y);
        assert_eq!(f.get(1, 2), 21.0);
        assert_eq!(f.values()[2 * 4 + 1], 21.0);
    }
}
