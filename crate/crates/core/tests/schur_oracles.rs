//! Boundary operators against matrices built entry by entry, and Krylov
//! densities against direct dense solves.

use ibdl::bem::ProblemId;
use ibdl::coupling::phi4;
use ibdl::experiments::{run, CaseOptions};
use ibdl::geometry::{circle, discretize_curve, ImmersedBoundary, Orientation};
use ibdl::grid::{Discretization, GridSpec, HelmholtzOperator};
use ibdl::krylov::LinearOperator;
use ibdl::solvers::{assemble_dense, Method, SchurKind, SchurOperator};
use nalgebra::{DMatrix, DVector};

/// Grid-by-boundary spreading matrix from the kernel definition.
fn spread_matrix(ib: &ImmersedBoundary, spec: &GridSpec) -> DMatrix<f64> {
    let n = spec.n();
    let h = spec.dx();
    let o = spec.origin();
    DMatrix::from_fn(n * n, ib.len(), |row, col| {
        let (i, j) = (row % n, row / n);
        let p = ib.points()[col];
        // nearest periodic image of the offset
        let wrap = |d: f64| d - spec.length() * (d / spec.length()).round();
        let dx = wrap(o[0] + i as f64 * h - p[0]) / h;
        let dy = wrap(o[1] + j as f64 * h - p[1]) / h;
        phi4(dx) * phi4(dy) * ib.spacing()[col] / (h * h)
    })
}

/// Periodic five-point `Lap - k^2`.
fn helmholtz_matrix(spec: &GridSpec, k: f64) -> DMatrix<f64> {
    let n = spec.n();
    let h2 = spec.dx() * spec.dx();
    let mut m = DMatrix::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let r = j * n + i;
            m[(r, r)] = -4.0 / h2 - k * k;
            for (a, b) in [
                ((i + 1) % n, j),
                ((i + n - 1) % n, j),
                (i, (j + 1) % n),
                (i, (j + n - 1) % n),
            ] {
                m[(r, b * n + a)] += 1.0 / h2;
            }
        }
    }
    m
}

/// Centered differences in x and y.
fn difference_matrices(spec: &GridSpec) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = spec.n();
    let c = 0.5 / spec.dx();
    let mut dx = DMatrix::zeros(n * n, n * n);
    let mut dy = DMatrix::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let r = j * n + i;
            dx[(r, j * n + (i + 1) % n)] += c;
            dx[(r, j * n + (i + n - 1) % n)] -= c;
            dy[(r, ((j + 1) % n) * n + i)] += c;
            dy[(r, ((j + n - 1) % n) * n + i)] -= c;
        }
    }
    (dx, dy)
}

#[test]
fn double_layer_operator_matches_explicit_matrices() {
    let spec = GridSpec::square(-0.5, 1.0, 32).unwrap();
    let c = circle([0.0, 0.0], 0.25);
    let ib = discretize_curve(
        &c,
        2.0 * std::f64::consts::PI * 0.25 / 24.0,
        Orientation::InteriorDomain,
    )
    .unwrap();
    assert_eq!(ib.len(), 24);
    let k = 1.0;

    let s = spread_matrix(&ib, &spec);
    let (dx, dy) = difference_matrices(&spec);
    let nx = DMatrix::from_diagonal(&DVector::from_iterator(24, ib.normals().iter().map(|n| n[0])));
    let ny = DMatrix::from_diagonal(&DVector::from_iterator(24, ib.normals().iter().map(|n| n[1])));
    let dipole = &dx * &s * nx + &dy * &s * ny;
    // interpolation is the weighted transpose: S* = diag(1/ds) S^T dx^2
    let interp = DMatrix::from_diagonal(&DVector::from_iterator(24, ib.spacing().iter().map(|d| 1.0 / d)))
        * s.transpose()
        * spec.cell_area();
    let linv_dipole = helmholtz_matrix(&spec, k).lu().solve(&dipole).unwrap();
    let oracle = DMatrix::identity(24, 24) * 0.5 - &interp * linv_dipole;

    let op = HelmholtzOperator::new(spec, k, Discretization::FiniteDifference).unwrap();
    let assembled = assemble_dense(&SchurOperator::new(&ib, &op, SchurKind::DoubleLayer { shift: 0.5 })).unwrap();
    let diff = (&assembled - &oracle).amax();
    assert!(diff < 1e-10 * oracle.amax(), "max entry difference {diff:e}");

    // a constant density gives a nearly constant response; the residual
    // variation comes from the points' placement relative to the grid
    let ones = SchurOperator::new(&ib, &op, SchurKind::DoubleLayer { shift: 0.5 }).apply_vec(&[1.0; 24]);
    let mean = ones.iter().sum::<f64>() / 24.0;
    let spread_of_values = ones.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    assert!(
        mean > 0.5 && spread_of_values < 0.02 * mean,
        "mean {mean}, spread {spread_of_values}"
    );
}

#[test]
fn krylov_density_matches_dense_solve() {
    for method in [Method::Ibdl, Method::Ibsl] {
        let opts = CaseOptions {
            method,
            ratio: 1.0,
            ..CaseOptions::new(ProblemId::HelmholtzCircleSin2theta, 64)
        };
        let solved = run(&opts).unwrap();
        let p = &solved.prepared;
        let op = HelmholtzOperator::new(p.grid, p.spec.k, p.spec.discretization).unwrap();
        let kind = match method {
            Method::Ibdl => SchurKind::DoubleLayer { shift: 0.5 },
            Method::Ibsl => SchurKind::SingleLayer,
        };
        let m = assemble_dense(&SchurOperator::new(&p.boundary, &op, kind)).unwrap();
        // g = 0 for this problem, so the right-hand side is the boundary data
        let b = DVector::from_column_slice(p.spec.bc.values());
        let direct = m.lu().solve(&b).unwrap();
        let scale = direct.amax();
        let diff = direct
            .iter()
            .zip(&solved.report.density)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let tol = match method {
            Method::Ibdl => 1e-6,
            // the single layer system is ill conditioned; the Krylov residual
            // tolerance bounds the error only up to the condition number
            Method::Ibsl => 1e-3,
        };
        assert!(diff < tol * scale, "{method:?}: {diff:e} relative to {scale:e}");
    }
}
