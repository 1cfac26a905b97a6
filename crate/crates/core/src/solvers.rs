//! Schur-complement solvers for the immersed boundary formulations.
//!
//! With `L = Lap - k^2`, spread `S`, interpolation `S*` and dipole spread
//! `D q = div(S (q n))`:
//!
//! * single layer (IBSL), Dirichlet: `-(S* L^-1 S) F = U_b - S* L^-1 g`, then
//!   `u = L^-1 (g - S F)`; solved with MINRES.
//! * double layer (IBDL), Dirichlet: `(-S* L^-1 D + I/2) Q = U_b - S* L^-1 g`,
//!   then `u = L^-1 (g - D Q)`; solved with GMRES.
//! * double layer, Neumann: `(-S* L^-1 D - I/2) U = S* L^-1 S V - S* L^-1 g`,
//!   then `u = L^-1 (g - D U - S V)`; solved with GMRES.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::coupling::{interpolate, spread, spread_dipole};
use crate::geometry::ImmersedBoundary;
use crate::grid::{Discretization, GridError, GridSpec, HelmholtzOperator, ScalarField};
use crate::krylov::{gmres, minres, KrylovConfig, KrylovResult, LinearOperator};
use crate::postprocess::InteriorMask;

/// Largest boundary for which dense Schur assembly is allowed.
pub const DENSE_ASSEMBLY_LIMIT: usize = 512;

/// Relative spacing deviation above which a solve warns that the `1/2` jump
/// term assumes an arclength parametrization.
const SPACING_WARN: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("Krylov solver did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("extended right-hand side has mean {mean:e}; the periodic Poisson problem is not solvable")]
    SolvabilityViolated { mean: f64 },
    #[error("interior mask covers the whole box; no complement to absorb the solvability correction")]
    EmptyComplement,
    #[error("dense assembly limited to {DENSE_ASSEMBLY_LIMIT} boundary points, got {0}")]
    TooLargeForDense(usize),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ibsl,
    Ibdl,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    /// Prescribed values `U_b` at the boundary points.
    Dirichlet(Vec<f64>),
    /// Prescribed outward normal derivative `V_b` at the boundary points.
    Neumann(Vec<f64>),
}

impl BoundaryCondition {
    pub fn values(&self) -> &[f64] {
        match self {
            BoundaryCondition::Dirichlet(v) | BoundaryCondition::Neumann(v) => v,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: GridSpec,
    pub boundary: ImmersedBoundary,
    pub k: f64,
    /// Right-hand side on the whole box, already extended outside the domain.
    pub rhs: ScalarField,
    pub bc: BoundaryCondition,
    pub discretization: Discretization,
    pub method: Method,
    pub krylov: KrylovConfig,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Grid solution before any near-boundary correction.
    pub solution: ScalarField,
    /// `F` (IBSL), `Q` (IBDL Dirichlet) or the recovered boundary values (Neumann).
    pub density: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub residual_history: Vec<f64>,
    pub wall_time: Duration,
    pub warnings: Vec<String>,
}

/// Which boundary operator a [`SchurOperator`] applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchurKind {
    /// `v -> -S* L^-1 S v`
    SingleLayer,
    /// `v -> -S* L^-1 D v + shift v`; `+1/2` for Dirichlet, `-1/2` for Neumann.
    DoubleLayer { shift: f64 },
}

/// Matrix-free boundary operator; each action is one spread, one periodic
/// solve and one interpolation.
pub struct SchurOperator<'a> {
    boundary: &'a ImmersedBoundary,
    op: &'a HelmholtzOperator,
    kind: SchurKind,
}

impl<'a> SchurOperator<'a> {
    pub fn new(boundary: &'a ImmersedBoundary, op: &'a HelmholtzOperator, kind: SchurKind) -> Self {
        Self { boundary, op, kind }
    }

    pub fn kind(&self) -> SchurKind {
        self.kind
    }
}

impl LinearOperator for SchurOperator<'_> {
    fn dim(&self) -> usize {
        self.boundary.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let forcing = match self.kind {
            SchurKind::SingleLayer => spread(self.boundary, x, self.op.spec()),
            SchurKind::DoubleLayer { .. } => spread_dipole(self.boundary, x, self.op),
        };
        let u = self.op.solve_pinned(&forcing);
        let shift = match self.kind {
            SchurKind::SingleLayer => 0.0,
            SchurKind::DoubleLayer { shift } => shift,
        };
        for ((yi, si), xi) in y.iter_mut().zip(interpolate(&u, self.boundary)).zip(x) {
            *yi = -si + shift * xi;
        }
    }
}

/// One application of the IBSL Schur complement `-S* L^-1 S`.
pub fn schur_action_ibsl(boundary: &ImmersedBoundary, op: &HelmholtzOperator, v: &[f64]) -> Vec<f64> {
    SchurOperator::new(boundary, op, SchurKind::SingleLayer).apply_vec(v)
}

/// One application of the IBDL Dirichlet operator `-S* L^-1 D + I/2`.
pub fn schur_action_ibdl(boundary: &ImmersedBoundary, op: &HelmholtzOperator, v: &[f64]) -> Vec<f64> {
    SchurOperator::new(boundary, op, SchurKind::DoubleLayer { shift: 0.5 }).apply_vec(v)
}

/// Materializes a boundary operator column by column.
pub fn assemble_dense(a: &dyn LinearOperator) -> Result<DMatrix<f64>, SolveError> {
    let n = a.dim();
    if n > DENSE_ASSEMBLY_LIMIT {
        return Err(SolveError::TooLargeForDense(n));
    }
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        a.apply(&e, &mut col);
        e[j] = 0.0;
        for (i, v) in col.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    Ok(m)
}

/// 2-norm condition number from the singular values.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// Extends `g` off the domain with the constant that makes its integral over
/// the box vanish: `g_e = g` on the domain, `-(int_domain g) / |complement|`
/// elsewhere.
pub fn extend_rhs_poisson(g: &ScalarField, mask: &InteriorMask) -> Result<ScalarField, SolveError> {
    let flags = mask.flags();
    let outside = flags.iter().filter(|f| !**f).count();
    if outside == 0 {
        return Err(SolveError::EmptyComplement);
    }
    let inside_sum: f64 = g.values().iter().zip(flags).filter(|(_, f)| **f).map(|(v, _)| v).sum();
    let fill = -inside_sum / outside as f64;
    let values = g
        .values()
        .iter()
        .zip(flags)
        .map(|(v, f)| if *f { *v } else { fill })
        .collect();
    Ok(ScalarField::from_values(*g.spec(), values)?)
}

/// Helmholtz extension: `g` on the domain, zero elsewhere.
pub fn extend_rhs_helmholtz(g: &ScalarField, mask: &InteriorMask) -> ScalarField {
    let values = g
        .values()
        .iter()
        .zip(mask.flags())
        .map(|(v, f)| if *f { *v } else { 0.0 })
        .collect();
    ScalarField::from_values(*g.spec(), values).expect("same grid")
}

fn check_common(p: &ProblemSpec) -> Result<Vec<String>, SolveError> {
    if p.rhs.spec() != &p.grid {
        return Err(SolveError::InvalidProblem("rhs grid differs from problem grid".into()));
    }
    if p.bc.values().len() != p.boundary.len() {
        return Err(SolveError::InvalidProblem(format!(
            "boundary data has {} values for {} boundary points",
            p.bc.values().len(),
            p.boundary.len()
        )));
    }
    let mut warnings = Vec::new();
    let spread_dev = p.boundary.spacing_spread();
    if p.method == Method::Ibdl && spread_dev > SPACING_WARN {
        warnings.push(format!(
            "boundary spacing varies by {:.2}%; the double layer jump term assumes equal arclength spacing",
            100.0 * spread_dev
        ));
    }
    Ok(warnings)
}

fn finish(
    kr: KrylovResult,
    solution: ScalarField,
    start: Instant,
    warnings: Vec<String>,
) -> Result<SolveReport, SolveError> {
    if !kr.converged {
        return Err(SolveError::NotConverged {
            iterations: kr.iterations,
            residual: kr.residual,
        });
    }
    Ok(SolveReport {
        solution,
        density: kr.solution,
        iterations: kr.iterations,
        residual: kr.residual,
        converged: kr.converged,
        residual_history: kr.history,
        wall_time: start.elapsed(),
        warnings,
    })
}

/// Classical constraint (single layer) method.
pub fn solve_ibsl_dirichlet(p: &ProblemSpec) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    let warnings = check_common(p)?;
    let BoundaryCondition::Dirichlet(ub) = &p.bc else {
        return Err(SolveError::InvalidProblem(
            "IBSL handles Dirichlet conditions only".into(),
        ));
    };
    if p.k <= 0.0 {
        return Err(SolveError::InvalidProblem("IBSL requires k > 0".into()));
    }
    let op = HelmholtzOperator::new(p.grid, p.k, p.discretization)?;
    let linv_g = op.invert(&p.rhs)?;
    let b: Vec<f64> = ub
        .iter()
        .zip(interpolate(&linv_g, &p.boundary))
        .map(|(u, s)| u - s)
        .collect();
    let schur = SchurOperator::new(&p.boundary, &op, SchurKind::SingleLayer);
    let kr = minres(&schur, &b, &p.krylov);

    let mut forcing = p.rhs.clone();
    forcing.axpy(-1.0, &spread(&p.boundary, &kr.solution, &p.grid));
    let u = op.solve_pinned(&forcing);
    finish(kr, u, start, warnings)
}

/// Double layer method for Dirichlet data. `k = 0` is allowed when the rhs has
/// been made mean-zero with [`extend_rhs_poisson`].
pub fn solve_ibdl_dirichlet(p: &ProblemSpec) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    let warnings = check_common(p)?;
    let BoundaryCondition::Dirichlet(ub) = &p.bc else {
        return Err(SolveError::InvalidProblem("expected Dirichlet data".into()));
    };
    let op = HelmholtzOperator::new(p.grid, p.k, p.discretization)?;
    let linv_g = op.invert(&p.rhs).map_err(|e| match e {
        GridError::NonZeroMeanForSingularOperator { mean, .. } => SolveError::SolvabilityViolated { mean },
        other => other.into(),
    })?;
    let b: Vec<f64> = ub
        .iter()
        .zip(interpolate(&linv_g, &p.boundary))
        .map(|(u, s)| u - s)
        .collect();
    let schur = SchurOperator::new(&p.boundary, &op, SchurKind::DoubleLayer { shift: 0.5 });
    let kr = gmres(&schur, &b, &p.krylov);

    let mut forcing = p.rhs.clone();
    forcing.axpy(-1.0, &spread_dipole(&p.boundary, &kr.solution, &op));
    let u = op.solve_pinned(&forcing);
    finish(kr, u, start, warnings)
}

/// Double layer method for Neumann data; the density returned is the
/// recovered boundary values `U_b`.
pub fn solve_ibdl_neumann(p: &ProblemSpec) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    let warnings = check_common(p)?;
    let BoundaryCondition::Neumann(vb) = &p.bc else {
        return Err(SolveError::InvalidProblem("expected Neumann data".into()));
    };
    if p.k <= 0.0 {
        return Err(SolveError::InvalidProblem("the Neumann solver requires k > 0".into()));
    }
    let op = HelmholtzOperator::new(p.grid, p.k, p.discretization)?;
    let sv = spread(&p.boundary, vb, &p.grid);
    let mut known = sv.clone();
    known.axpy(-1.0, &p.rhs);
    // S* L^-1 (S V - g)
    let b = interpolate(&op.solve_pinned(&known), &p.boundary);
    let schur = SchurOperator::new(&p.boundary, &op, SchurKind::DoubleLayer { shift: -0.5 });
    let kr = gmres(&schur, &b, &p.krylov);

    let mut forcing = p.rhs.clone();
    forcing.axpy(-1.0, &spread_dipole(&p.boundary, &kr.solution, &op));
    forcing.axpy(-1.0, &sv);
    let u = op.solve_pinned(&forcing);
    finish(kr, u, start, warnings)
}

/// Dispatches on method and boundary condition.
pub fn solve(p: &ProblemSpec) -> Result<SolveReport, SolveError> {
    match (p.method, &p.bc) {
        (Method::Ibsl, BoundaryCondition::Dirichlet(_)) => solve_ibsl_dirichlet(p),
        (Method::Ibdl, BoundaryCondition::Dirichlet(_)) => solve_ibdl_dirichlet(p),
        (Method::Ibdl, BoundaryCondition::Neumann(_)) => solve_ibdl_neumann(p),
        (Method::Ibsl, BoundaryCondition::Neumann(_)) => Err(SolveError::InvalidProblem(
            "the single layer method cannot impose Neumann conditions".into(),
        )),
    }
}
