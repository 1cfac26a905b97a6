//! Problem setup and the studies built on single solves: iteration sweeps,
//! refinement studies and density convergence against the boundary element
//! reference.

use serde::Serialize;
use thiserror::Error;

use crate::bem::analytic::CIRCLE_RADIUS;
use crate::bem::{
    analytic_gradient, analytic_solution_with_k, forcing, self_converged_density, BemError, Doubling, Layer, ProblemId,
};
use crate::geometry::{
    circle, discretize_curve_with, starfish, GeometryError, ImmersedBoundary, Orientation, ParametricCurve,
};
use crate::grid::{Discretization, GridError, GridSpec, ScalarField};
use crate::krylov::KrylovConfig;
use crate::postprocess::{
    error_norms, flag_band, flag_interior, interpolate_near_boundary, BandMask, ErrorNorms, InteriorMask,
    PostprocessError,
};
use crate::solvers::{
    extend_rhs_helmholtz, extend_rhs_poisson, solve, BoundaryCondition, Method, ProblemSpec, SolveError, SolveReport,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Postprocess(#[from] PostprocessError),
    #[error(transparent)]
    Bem(#[from] BemError),
    #[error("{0}")]
    Unsupported(String),
}

/// Band width rule for the near-boundary correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandWidth {
    Fixed(usize),
    /// `m1 = 2 (log2 N - 4)`, growing with resolution.
    Auto,
}

impl BandWidth {
    pub fn m1(self, n: usize) -> usize {
        match self {
            BandWidth::Fixed(m) => m,
            BandWidth::Auto => 2 * (n.trailing_zeros() as usize).saturating_sub(4),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalsMode {
    Exact,
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// Everything needed to run one problem at one resolution.
#[derive(Debug, Clone)]
pub struct CaseOptions {
    pub problem: ProblemId,
    pub method: Method,
    pub boundary: BoundaryKind,
    pub discretization: Discretization,
    pub n: usize,
    /// Target `ds / dx`.
    pub ratio: f64,
    pub k: f64,
    pub band: BandWidth,
    /// Defaults to 8 for a fixed band and `m1 + 2` for the automatic rule.
    pub m2: Option<usize>,
    pub krylov: KrylovConfig,
    pub normals: NormalsMode,
    pub interpolate: bool,
    /// Box `[-h, h]^2`; the problem's own box when `None`.
    pub box_half_width: Option<f64>,
}

impl CaseOptions {
    /// Defaults for `problem` at resolution `n`.
    pub fn new(problem: ProblemId, n: usize) -> Self {
        Self {
            problem,
            method: Method::Ibdl,
            boundary: default_boundary(problem),
            discretization: Discretization::FiniteDifference,
            n,
            ratio: 0.75,
            k: problem.k(),
            band: BandWidth::Fixed(6),
            m2: None,
            krylov: KrylovConfig::default(),
            normals: NormalsMode::Exact,
            interpolate: true,
            box_half_width: None,
        }
    }

    pub fn m1(&self) -> usize {
        self.band.m1(self.n)
    }

    pub fn m2(&self) -> usize {
        self.m2.unwrap_or(match self.band {
            BandWidth::Fixed(_) => 8,
            BandWidth::Auto => self.m1() + 2,
        })
    }
}

pub fn default_boundary(problem: ProblemId) -> BoundaryKind {
    match problem {
        ProblemId::NeumannCircle => BoundaryKind::Neumann,
        _ => BoundaryKind::Dirichlet,
    }
}

/// Curve, side of the curve holding the domain, and default box half-width.
pub fn problem_geometry(problem: ProblemId) -> (ParametricCurve, Orientation, f64) {
    match problem {
        ProblemId::PoissonStarfish => (starfish(), Orientation::ExteriorDomain, 2.0),
        _ => (circle([0.0, 0.0], CIRCLE_RADIUS), Orientation::InteriorDomain, 0.5),
    }
}

/// A discretized problem ready to solve.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub options: CaseOptions,
    pub grid: GridSpec,
    pub boundary: ImmersedBoundary,
    pub mask: InteriorMask,
    pub spec: ProblemSpec,
    /// Mean of the extended right-hand side.
    pub rhs_mean: f64,
}

pub fn prepare(options: &CaseOptions) -> Result<Prepared, ExperimentError> {
    let (curve, orientation, half) = problem_geometry(options.problem);
    let half = options.box_half_width.unwrap_or(half);
    let grid = GridSpec::square(-half, 2.0 * half, options.n)?;
    let exact_normals = options.normals == NormalsMode::Exact;
    let boundary = discretize_curve_with(&curve, options.ratio * grid.dx(), orientation, exact_normals)?;
    let mask = flag_interior(&boundary, &grid, options.discretization)?;

    let g = forcing(options.problem, options.k);
    let raw = ScalarField::from_fn(grid, g);
    let rhs = if options.k == 0.0 {
        extend_rhs_poisson(&raw, &mask)?
    } else {
        extend_rhs_helmholtz(&raw, &mask)
    };
    let rhs_mean = rhs.mean();

    let u = analytic_solution_with_k(options.problem, options.k);
    let bc = match options.boundary {
        BoundaryKind::Dirichlet => {
            BoundaryCondition::Dirichlet(boundary.points().iter().map(|p| u(p[0], p[1])).collect())
        }
        BoundaryKind::Neumann => {
            let grad = analytic_gradient(options.problem, options.k);
            BoundaryCondition::Neumann(
                boundary
                    .points()
                    .iter()
                    .zip(boundary.normals())
                    .map(|(p, n)| {
                        let d = grad(p[0], p[1]);
                        d[0] * n[0] + d[1] * n[1]
                    })
                    .collect(),
            )
        }
    };
    let spec = ProblemSpec {
        grid,
        boundary: boundary.clone(),
        k: options.k,
        rhs,
        bc,
        discretization: options.discretization,
        method: options.method,
        krylov: options.krylov,
    };
    Ok(Prepared {
        options: options.clone(),
        grid,
        boundary,
        mask,
        spec,
        rhs_mean,
    })
}

/// A solved problem; post-processing can be repeated with different bands.
#[derive(Debug, Clone)]
pub struct Solved {
    pub prepared: Prepared,
    pub report: SolveReport,
}

pub fn run(options: &CaseOptions) -> Result<Solved, ExperimentError> {
    let prepared = prepare(options)?;
    let report = solve(&prepared.spec)?;
    Ok(Solved { prepared, report })
}

/// Post-processed solution and its errors.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub field: ScalarField,
    pub band: BandMask,
    pub norms: ErrorNorms,
    /// Max error of the recovered boundary values (Neumann only).
    pub boundary_error: Option<f64>,
    pub fallbacks: usize,
}

impl Solved {
    /// Boundary values used by the near-boundary correction: the data for
    /// Dirichlet problems, the recovered values for Neumann problems.
    pub fn boundary_values(&self) -> &[f64] {
        match &self.prepared.spec.bc {
            BoundaryCondition::Dirichlet(ub) => ub,
            BoundaryCondition::Neumann(_) => &self.report.density,
        }
    }

    pub fn evaluate(&self, m1: usize, m2: usize, interpolate: bool) -> Result<Evaluation, ExperimentError> {
        let p = &self.prepared;
        let band = flag_band(&p.boundary, &p.mask, m1);
        let (field, fallbacks) = if interpolate {
            let c = interpolate_near_boundary(
                &self.report.solution,
                &p.boundary,
                self.boundary_values(),
                &band,
                &p.mask,
                m2,
            )?;
            (c.field, c.fallbacks)
        } else {
            (self.report.solution.clone(), 0)
        };
        let u = analytic_solution_with_k(p.options.problem, p.options.k);
        let norms = if interpolate {
            error_norms(&field, &u, p.mask.flags())?
        } else {
            error_norms(&field, &u, &p.mask.without(&band))?
        };
        let boundary_error = match p.spec.bc {
            BoundaryCondition::Neumann(_) => Some(
                self.report
                    .density
                    .iter()
                    .zip(p.boundary.points())
                    .map(|(v, x)| (v - u(x[0], x[1])).abs())
                    .fold(0.0, f64::max),
            ),
            BoundaryCondition::Dirichlet(_) => None,
        };
        Ok(Evaluation {
            field,
            band,
            norms,
            boundary_error,
            fallbacks,
        })
    }

    /// Evaluation with the options' own band settings.
    pub fn evaluate_default(&self) -> Result<Evaluation, ExperimentError> {
        let o = &self.prepared.options;
        self.evaluate(o.m1(), o.m2(), o.interpolate)
    }
}

/// Least-squares slope of `-log2(err)` against `log2(N)` over the last four
/// sizes (all of them when fewer).
pub fn fit_slope(ns: &[usize], errors: &[f64]) -> f64 {
    assert_eq!(ns.len(), errors.len(), "one error per grid size");
    let start = ns.len().saturating_sub(4);
    let xs: Vec<f64> = ns[start..].iter().map(|n| (*n as f64).log2()).collect();
    let ys: Vec<f64> = errors[start..].iter().map(|e| e.log2()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    -sxy / sxx
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementRow {
    pub n: usize,
    pub linf: f64,
    pub l2: f64,
    pub boundary_linf: Option<f64>,
    pub iterations: usize,
    pub runtime: f64,
    pub m1: usize,
    pub m2: usize,
    pub fallbacks: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Refinement {
    pub rows: Vec<RefinementRow>,
    pub linf_slope: f64,
    pub l2_slope: f64,
    pub boundary_slope: Option<f64>,
}

/// Runs `base` at each grid size and fits convergence slopes.
pub fn refinement_study(base: &CaseOptions, sizes: &[usize]) -> Result<Refinement, ExperimentError> {
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let opts = CaseOptions { n, ..base.clone() };
        let solved = run(&opts)?;
        let ev = solved.evaluate_default()?;
        rows.push(RefinementRow {
            n,
            linf: ev.norms.linf,
            l2: ev.norms.l2,
            boundary_linf: ev.boundary_error,
            iterations: solved.report.iterations,
            runtime: solved.report.wall_time.as_secs_f64(),
            m1: opts.m1(),
            m2: opts.m2(),
            fallbacks: ev.fallbacks,
        });
    }
    Ok(summarize(rows))
}

pub fn summarize(rows: Vec<RefinementRow>) -> Refinement {
    let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let linf: Vec<f64> = rows.iter().map(|r| r.linf).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.l2).collect();
    let boundary: Option<Vec<f64>> = rows.iter().map(|r| r.boundary_linf).collect();
    Refinement {
        linf_slope: fit_slope(&ns, &linf),
        l2_slope: fit_slope(&ns, &l2),
        boundary_slope: boundary.map(|b| fit_slope(&ns, &b)),
        rows,
    }
}

/// Iteration count of one sweep cell; `None` when the solver hit its limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationCell {
    pub n: usize,
    pub ratio: f64,
    pub iterations: Option<usize>,
}

pub fn iteration_sweep(
    base: &CaseOptions,
    sizes: &[usize],
    ratios: &[f64],
) -> Result<Vec<IterationCell>, ExperimentError> {
    let mut cells = Vec::new();
    for &n in sizes {
        for &ratio in ratios {
            let opts = CaseOptions {
                n,
                ratio,
                ..base.clone()
            };
            let iterations = match run(&opts) {
                Ok(s) => Some(s.report.iterations),
                Err(ExperimentError::Solve(SolveError::NotConverged { .. })) => None,
                Err(e) => return Err(e),
            };
            cells.push(IterationCell { n, ratio, iterations });
        }
    }
    Ok(cells)
}

/// Boundary density of one solve against the element reference.
#[derive(Debug, Clone, Serialize)]
pub struct StrengthRow {
    pub n: usize,
    pub theta: Vec<f64>,
    pub density: Vec<f64>,
    pub reference: Vec<f64>,
    /// `max |density - reference| / max |reference|`.
    pub normalized_error: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StrengthStudy {
    pub rows: Vec<StrengthRow>,
    pub reference_elements: usize,
    pub reference_change: f64,
    pub slope: f64,
    pub runtime: f64,
}

/// Compares the single layer density `F` (IBSL) or the double layer density
/// `Q = -gamma` (IBDL) with a self-converged element solution.
pub fn strength_study(base: &CaseOptions, sizes: &[usize]) -> Result<StrengthStudy, ExperimentError> {
    if base.boundary != BoundaryKind::Dirichlet || base.k <= 0.0 {
        return Err(ExperimentError::Unsupported(
            "the density study needs Dirichlet data and k > 0".into(),
        ));
    }
    let start = std::time::Instant::now();
    let (curve, orientation, _) = problem_geometry(base.problem);
    let u = analytic_solution_with_k(base.problem, base.k);
    let layer = match base.method {
        Method::Ibsl => Layer::Single,
        Method::Ibdl => Layer::Double,
    };
    let reference = self_converged_density(
        &curve,
        orientation,
        layer,
        |p| u(p[0], p[1]),
        base.k,
        Doubling::default(),
    )?;
    let sign = match base.method {
        Method::Ibsl => 1.0,
        Method::Ibdl => -1.0,
    };

    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let opts = CaseOptions { n, ..base.clone() };
        let solved = run(&opts)?;
        let pts = solved.prepared.boundary.points();
        let reference_at: Vec<f64> = pts
            .iter()
            .map(|p| sign * reference.mesh.interpolate_density(&reference.density, *p))
            .collect();
        let scale = reference_at.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let err = solved
            .report
            .density
            .iter()
            .zip(&reference_at)
            .fold(0.0f64, |a, (d, r)| a.max((d - r).abs()));
        rows.push(StrengthRow {
            n,
            theta: pts.iter().map(|p| p[1].atan2(p[0])).collect(),
            density: solved.report.density.clone(),
            reference: reference_at,
            normalized_error: err / scale,
            iterations: solved.report.iterations,
        });
    }
    let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.normalized_error).collect();
    Ok(StrengthStudy {
        slope: fit_slope(&ns, &errs),
        rows,
        reference_elements: reference.elements,
        reference_change: reference.change,
        runtime: start.elapsed().as_secs_f64(),
    })
}
