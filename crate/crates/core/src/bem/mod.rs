//! Free-space boundary element reference solver for `(Lap - k^2) u = 0`.
//!
//! Uniform straight elements, midpoint collocation and Gauss-Legendre
//! quadrature. The Green's function `G(x, y) = K_0(k |x - y|) / (2 pi)`
//! satisfies `(-Lap + k^2) G = delta`. Normals point out of the PDE domain, so
//! the domain-side limit of the double layer potential is `(K - I/2) gamma`.

pub mod analytic;
pub mod bessel;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{discretize_curve_with, ImmersedBoundary, Orientation, ParametricCurve};
use bessel::{bessel_k, BesselError};

pub use analytic::{
    analytic_gradient, analytic_solution, analytic_solution_with_k, forcing, ProblemId, UnknownProblem,
};
pub use bessel::{bessel_i, bessel_i_prime, bessel_k_prime};

/// Default Gauss-Legendre order per element.
pub const DEFAULT_QUADRATURE: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BemError {
    #[error("Green's function evaluated at its source point")]
    SingularEvaluation,
    #[error("boundary element system is singular")]
    SingularSystem,
    #[error("at least 16 elements required, got {0}")]
    TooFewElements(usize),
    #[error("wavenumber must be positive, got {0}")]
    BadWavenumber(f64),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Bessel(#[from] BesselError),
    #[error("could not build element mesh: {0}")]
    Mesh(String),
}

/// `G(x, x0) = K_0(k r) / (2 pi)`.
pub fn green_modified_helmholtz(x: [f64; 2], x0: [f64; 2], k: f64) -> Result<f64, BemError> {
    let r = (x[0] - x0[0]).hypot(x[1] - x0[1]);
    if r == 0.0 {
        return Err(BemError::SingularEvaluation);
    }
    Ok(bessel_k(0, k * r)? / (2.0 * PI))
}

/// `grad_x G(x, x0) = -(k / 2 pi) K_1(k r) (x - x0) / r`.
pub fn green_gradient(x: [f64; 2], x0: [f64; 2], k: f64) -> Result<[f64; 2], BemError> {
    let d = [x[0] - x0[0], x[1] - x0[1]];
    let r = d[0].hypot(d[1]);
    if r == 0.0 {
        return Err(BemError::SingularEvaluation);
    }
    let s = -k * bessel_k(1, k * r)? / (2.0 * PI * r);
    Ok([s * d[0], s * d[1]])
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights from the eigen-decomposition of the Jacobi matrix.
    pub fn new(q: usize) -> Self {
        assert!(q >= 1, "quadrature order must be positive");
        let jacobi = DMatrix::from_fn(q, q, |i, j| {
            if i + 1 == j || j + 1 == i {
                let m = i.max(j) as f64;
                m / (4.0 * m * m - 1.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..q)
            .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BemElement {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub midpoint: [f64; 2],
    pub length: f64,
    /// Unit normal out of the PDE domain.
    pub normal: [f64; 2],
}

impl BemElement {
    fn new(start: [f64; 2], end: [f64; 2], sign: f64) -> Self {
        let d = [end[0] - start[0], end[1] - start[1]];
        let length = d[0].hypot(d[1]);
        Self {
            start,
            end,
            midpoint: [0.5 * (start[0] + end[0]), 0.5 * (start[1] + end[1])],
            length,
            normal: [sign * d[1] / length, -sign * d[0] / length],
        }
    }

    fn at(&self, s: f64) -> [f64; 2] {
        [
            self.start[0] + s * (self.end[0] - self.start[0]),
            self.start[1] + s * (self.end[1] - self.start[1]),
        ]
    }
}

/// Closed polygon of straight elements, vertices counterclockwise.
#[derive(Debug, Clone)]
pub struct BemMesh {
    elements: Vec<BemElement>,
    orientation: Orientation,
}

impl BemMesh {
    pub fn from_vertices(vertices: &[[f64; 2]], orientation: Orientation) -> Result<Self, BemError> {
        let n = vertices.len();
        if n < 16 {
            return Err(BemError::TooFewElements(n));
        }
        let sign = orientation.sign();
        let elements = (0..n)
            .map(|i| BemElement::new(vertices[i], vertices[(i + 1) % n], sign))
            .collect();
        Ok(Self { elements, orientation })
    }

    pub fn from_boundary(ib: &ImmersedBoundary) -> Result<Self, BemError> {
        Self::from_vertices(ib.points(), ib.orientation())
    }

    /// `n_elem` elements of equal arclength along `curve`.
    pub fn from_curve(curve: &ParametricCurve, n_elem: usize, orientation: Orientation) -> Result<Self, BemError> {
        let length = curve.polyline_length(1 << 16);
        let ib = discretize_curve_with(curve, length / n_elem as f64, orientation, false)
            .map_err(|e| BemError::Mesh(e.to_string()))?;
        Self::from_boundary(&ib)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[BemElement] {
        &self.elements
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn midpoints(&self) -> Vec<[f64; 2]> {
        self.elements.iter().map(|e| e.midpoint).collect()
    }

    /// Linear interpolation of a per-element density between the two
    /// midpoints bracketing the projection of `p`.
    pub fn interpolate_density(&self, density: &[f64], p: [f64; 2]) -> f64 {
        let n = self.len();
        let d2 = |q: [f64; 2]| (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
        let j = (0..n)
            .min_by(|a, b| d2(self.elements[*a].midpoint).total_cmp(&d2(self.elements[*b].midpoint)))
            .expect("nonempty mesh");
        let prev = (j + n - 1) % n;
        let next = (j + 1) % n;
        let other = if d2(self.elements[prev].midpoint) < d2(self.elements[next].midpoint) {
            prev
        } else {
            next
        };
        let a = self.elements[j].midpoint;
        let b = self.elements[other].midpoint;
        let ab = [b[0] - a[0], b[1] - a[1]];
        let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1])).clamp(0.0, 1.0);
        (1.0 - t) * density[j] + t * density[other]
    }
}

/// Quadrature over one element of `f(y)` for a target `x`, refining into equal
/// panels when `x` is close relative to the element length.
fn integrate_element(
    e: &BemElement,
    x: [f64; 2],
    gl: &GaussLegendre,
    f: impl Fn([f64; 2]) -> Result<f64, BemError>,
) -> Result<f64, BemError> {
    let dist = (x[0] - e.midpoint[0]).hypot(x[1] - e.midpoint[1]);
    let panels = if dist >= e.length {
        1
    } else {
        let near = crate::geometry::point_segment_distance(x, e.start, e.end).max(1e-3 * e.length);
        ((2.0 * e.length / near).ceil() as usize).clamp(1, 4096)
    };
    let h = 1.0 / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        for (xi, w) in gl.nodes.iter().zip(&gl.weights) {
            let s = h * (p as f64 + 0.5 * (1.0 + xi));
            acc += w * f(e.at(s))?;
        }
    }
    Ok(acc * 0.5 * h * e.length)
}

/// `int (K_0(k t) + ln t) dt` over `[0, a]`, with the log-free remainder smooth.
fn self_single_layer(a: f64, k: f64, gl: &GaussLegendre) -> Result<f64, BemError> {
    let mut smooth = 0.0;
    for (xi, w) in gl.nodes.iter().zip(&gl.weights) {
        let t = 0.5 * a * (1.0 + xi);
        smooth += w * (bessel_k(0, k * t)? + t.ln());
    }
    smooth *= 0.5 * a;
    // int_{-a}^{a} -ln|t| dt = 2 a (1 - ln a)
    Ok((2.0 * smooth + 2.0 * a * (1.0 - a.ln())) / (2.0 * PI))
}

fn check_k(k: f64) -> Result<(), BemError> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(BemError::BadWavenumber(k));
    }
    Ok(())
}

/// Collocation matrix of the single layer operator.
pub fn assemble_single_layer(mesh: &BemMesh, k: f64, q: usize) -> Result<DMatrix<f64>, BemError> {
    check_k(k)?;
    let gl = GaussLegendre::new(q);
    let els = mesh.elements();
    let rows: Vec<Vec<f64>> = els
        .par_iter()
        .enumerate()
        .map(|(i, ei)| {
            els.iter()
                .enumerate()
                .map(|(j, ej)| {
                    if i == j {
                        self_single_layer(0.5 * ej.length, k, &gl)
                    } else {
                        integrate_element(ej, ei.midpoint, &gl, |y| green_modified_helmholtz(y, ei.midpoint, k))
                    }
                })
                .collect()
        })
        .collect::<Result<_, BemError>>()?;
    Ok(DMatrix::from_fn(els.len(), els.len(), |i, j| rows[i][j]))
}

/// Collocation matrix of `K - I/2` for the double layer operator; flat
/// elements contribute nothing to their own principal value.
pub fn assemble_double_layer(mesh: &BemMesh, k: f64, q: usize) -> Result<DMatrix<f64>, BemError> {
    check_k(k)?;
    let gl = GaussLegendre::new(q);
    let els = mesh.elements();
    let rows: Vec<Vec<f64>> = els
        .par_iter()
        .enumerate()
        .map(|(i, ei)| {
            els.iter()
                .enumerate()
                .map(|(j, ej)| {
                    if i == j {
                        Ok(-0.5)
                    } else {
                        integrate_element(ej, ei.midpoint, &gl, |y| {
                            let g = green_gradient(y, ei.midpoint, k)?;
                            Ok(g[0] * ej.normal[0] + g[1] * ej.normal[1])
                        })
                    }
                })
                .collect()
        })
        .collect::<Result<_, BemError>>()?;
    Ok(DMatrix::from_fn(els.len(), els.len(), |i, j| rows[i][j]))
}

fn dense_solve(m: DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>, BemError> {
    if rhs.len() != m.nrows() {
        return Err(BemError::LengthMismatch {
            expected: m.nrows(),
            got: rhs.len(),
        });
    }
    m.lu()
        .solve(&DVector::from_column_slice(rhs))
        .map(|v| v.as_slice().to_vec())
        .ok_or(BemError::SingularSystem)
}

/// Single layer density `sigma` with `int G sigma = U_b` at the midpoints.
pub fn bem_single_layer(mesh: &BemMesh, ub: &[f64], k: f64) -> Result<Vec<f64>, BemError> {
    dense_solve(assemble_single_layer(mesh, k, DEFAULT_QUADRATURE)?, ub)
}

/// Double layer density `gamma` with `(K - I/2) gamma = U_b` at the midpoints.
pub fn bem_double_layer(mesh: &BemMesh, ub: &[f64], k: f64) -> Result<Vec<f64>, BemError> {
    dense_solve(assemble_double_layer(mesh, k, DEFAULT_QUADRATURE)?, ub)
}

/// `int G(x, y) sigma(y) ds_y` at an off-boundary point.
pub fn single_layer_potential(mesh: &BemMesh, sigma: &[f64], k: f64, x: [f64; 2]) -> Result<f64, BemError> {
    let gl = GaussLegendre::new(DEFAULT_QUADRATURE);
    mesh.elements().iter().zip(sigma).try_fold(0.0, |acc, (e, s)| {
        Ok(acc + s * integrate_element(e, x, &gl, |y| green_modified_helmholtz(y, x, k))?)
    })
}

/// `int dG/dn_y (x, y) gamma(y) ds_y` at an off-boundary point.
pub fn double_layer_potential(mesh: &BemMesh, gamma: &[f64], k: f64, x: [f64; 2]) -> Result<f64, BemError> {
    let gl = GaussLegendre::new(DEFAULT_QUADRATURE);
    mesh.elements().iter().zip(gamma).try_fold(0.0, |acc, (e, g)| {
        Ok(acc
            + g * integrate_element(e, x, &gl, |y| {
                let d = green_gradient(y, x, k)?;
                Ok(d[0] * e.normal[0] + d[1] * e.normal[1])
            })?)
    })
}

/// Which boundary integral equation a reference density solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Single,
    Double,
}

/// Element doubling schedule for [`self_converged_density`]: start at
/// `start_elements` and double until the density, sampled at fixed points,
/// changes by less than `rel_tol` of its maximum, or `max_elements` is reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Doubling {
    pub start_elements: usize,
    pub max_elements: usize,
    pub rel_tol: f64,
}

impl Default for Doubling {
    fn default() -> Self {
        Self {
            start_elements: 64,
            max_elements: 1024,
            rel_tol: 1e-3,
        }
    }
}

/// Reference density from the last refinement of a [`Doubling`] schedule.
#[derive(Debug, Clone)]
pub struct SelfConverged {
    pub mesh: BemMesh,
    pub density: Vec<f64>,
    pub elements: usize,
    /// Relative change at the last doubling.
    pub change: f64,
}

pub fn self_converged_density(
    curve: &ParametricCurve,
    orientation: Orientation,
    layer: Layer,
    data: impl Fn([f64; 2]) -> f64,
    k: f64,
    schedule: Doubling,
) -> Result<SelfConverged, BemError> {
    let solve_at = |n: usize| -> Result<(BemMesh, Vec<f64>), BemError> {
        let mesh = BemMesh::from_curve(curve, n, orientation)?;
        let ub: Vec<f64> = mesh.midpoints().into_iter().map(&data).collect();
        let density = match layer {
            Layer::Single => bem_single_layer(&mesh, &ub, k)?,
            Layer::Double => bem_double_layer(&mesh, &ub, k)?,
        };
        Ok((mesh, density))
    };
    let samples: Vec<[f64; 2]> = (0..97).map(|i| curve.eval(i as f64 / 97.0)).collect();
    let sample =
        |mesh: &BemMesh, d: &[f64]| -> Vec<f64> { samples.iter().map(|p| mesh.interpolate_density(d, *p)).collect() };
    let mut n = schedule.start_elements;
    let (mut mesh, mut density) = solve_at(n)?;
    let mut prev = sample(&mesh, &density);
    let mut change = f64::INFINITY;
    while n * 2 <= schedule.max_elements {
        n *= 2;
        let (m, d) = solve_at(n)?;
        let cur = sample(&m, &d);
        let scale = cur.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        change = cur.iter().zip(&prev).fold(0.0f64, |a, (x, y)| a.max((x - y).abs())) / scale;
        mesh = m;
        density = d;
        prev = cur;
        if change < schedule.rel_tol {
            break;
        }
    }
    Ok(SelfConverged {
        elements: mesh.len(),
        mesh,
        density,
        change,
    })
}
