//! Randomized invariants of the coupling, the periodic solver, the Schur
//! operators and the masks.

use ibdl::coupling::{interpolate, phi4, spread};
use ibdl::geometry::{circle, discretize_curve, Orientation};
use ibdl::grid::{Discretization, GridSpec, HelmholtzOperator, ScalarField};
use ibdl::krylov::LinearOperator;
use ibdl::postprocess::{flag_band, flag_interior};
use ibdl::solvers::{SchurKind, SchurOperator};
use proptest::prelude::*;

fn disc() -> impl Strategy<Value = Discretization> {
    prop_oneof![
        Just(Discretization::FiniteDifference),
        Just(Discretization::FourierSpectral)
    ]
}

fn field(spec: GridSpec, vals: &[f64]) -> ScalarField {
    ScalarField::from_values(spec, vals.to_vec()).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spread_and_interpolate_are_adjoint(
        cx in -0.1..0.1f64,
        cy in -0.1..0.1f64,
        radius in 0.15..0.3f64,
        seed in prop::collection::vec(-1.0..1.0f64, 64 * 64),
        q in prop::collection::vec(-1.0..1.0f64, 200),
    ) {
        let spec = GridSpec::square(-0.5, 1.0, 64).unwrap();
        let ib = discretize_curve(&circle([cx, cy], radius), 0.02, Orientation::InteriorDomain).unwrap();
        let q = &q[..ib.len().min(q.len())];
        prop_assume!(q.len() == ib.len());
        let u = field(spec, &seed);
        let lhs = spread(&ib, q, &spec).dot(&u) * spec.cell_area();
        let su = interpolate(&u, &ib);
        let rhs: f64 = q.iter().zip(&su).zip(ib.spacing()).map(|((a, b), ds)| a * b * ds).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn kernel_partition_of_unity(x in -3.0..3.0f64, y in -3.0..3.0f64) {
        let sx: f64 = (-4..=4).map(|i| phi4(x - (x.floor() + i as f64))).sum();
        prop_assert!((sx - 1.0).abs() < 1e-12);
        let even: f64 = (-4..=4).filter(|i| i % 2 == 0).map(|i| phi4(y - (y.floor() + i as f64))).sum();
        prop_assert!((even - 0.5).abs() < 1e-12);
    }

    #[test]
    fn spread_is_linear(
        a in -2.0..2.0f64,
        b in -2.0..2.0f64,
        q1 in prop::collection::vec(-1.0..1.0f64, 50),
        q2 in prop::collection::vec(-1.0..1.0f64, 50),
    ) {
        let spec = GridSpec::square(-0.5, 1.0, 32).unwrap();
        let ib = discretize_curve(&circle([0.0, 0.0], 0.25), std::f64::consts::FRAC_PI_2 / 50.0, Orientation::InteriorDomain).unwrap();
        prop_assume!(ib.len() == 50);
        let combo: Vec<f64> = q1.iter().zip(&q2).map(|(x, y)| a * x + b * y).collect();
        let lhs = spread(&ib, &combo, &spec);
        let (s1, s2) = (spread(&ib, &q1, &spec), spread(&ib, &q2, &spec));
        for ((l, x), y) in lhs.values().iter().zip(s1.values()).zip(s2.values()) {
            prop_assert!((l - (a * x + b * y)).abs() < 1e-10);
        }
    }

    #[test]
    fn helmholtz_round_trip_and_symmetry(
        k in 0.5..3.0f64,
        d in disc(),
        v in prop::collection::vec(-1.0..1.0f64, 32 * 32),
        w in prop::collection::vec(-1.0..1.0f64, 32 * 32),
    ) {
        let spec = GridSpec::square(0.0, 1.0, 32).unwrap();
        let op = HelmholtzOperator::new(spec, k, d).unwrap();
        let f = field(spec, &v);
        let u = op.invert(&f).unwrap();
        let back = op.apply(&u);
        let scale = f.max_abs();
        for (x, y) in back.values().iter().zip(f.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
        let g = field(spec, &w);
        let lhs = op.solve_pinned(&f).dot(&g);
        let rhs = f.dot(&op.solve_pinned(&g));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn single_layer_schur_is_symmetric(
        v in prop::collection::vec(-1.0..1.0f64, 101),
        w in prop::collection::vec(-1.0..1.0f64, 101),
        d in disc(),
    ) {
        let spec = GridSpec::square(-0.5, 1.0, 64).unwrap();
        let ib = discretize_curve(&circle([0.0, 0.0], 0.25), spec.dx(), Orientation::InteriorDomain).unwrap();
        prop_assume!(ib.len() == v.len());
        let op = HelmholtzOperator::new(spec, 1.0, d).unwrap();
        let a = SchurOperator::new(&ib, &op, SchurKind::SingleLayer);
        // equal weights make the matrix symmetric in the plain inner product
        let lhs = dot(&a.apply_vec(&v), &w);
        let rhs = dot(&v, &a.apply_vec(&w));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn mask_does_not_depend_on_point_numbering(shift in 0usize..200) {
        let spec = GridSpec::square(-0.5, 1.0, 64).unwrap();
        let ib = discretize_curve(&circle([0.03, -0.02], 0.27), 0.75 * spec.dx(), Orientation::InteriorDomain).unwrap();
        let rotated = ib.rotated(shift % ib.len());
        let a = flag_interior(&ib, &spec, Discretization::FiniteDifference).unwrap();
        let b = flag_interior(&rotated, &spec, Discretization::FiniteDifference).unwrap();
        prop_assert_eq!(a.flags(), b.flags());
    }

    #[test]
    fn band_grows_with_width(m in 0usize..8) {
        let spec = GridSpec::square(-0.5, 1.0, 64).unwrap();
        let ib = discretize_curve(&circle([0.0, 0.0], 0.3), 0.75 * spec.dx(), Orientation::InteriorDomain).unwrap();
        let mask = flag_interior(&ib, &spec, Discretization::FiniteDifference).unwrap();
        let narrow = flag_band(&ib, &mask, m);
        let wide = flag_band(&ib, &mask, m + 1);
        for (n, w) in narrow.flags().iter().zip(wide.flags()) {
            prop_assert!(!n || *w);
        }
        prop_assert!(wide.count() > narrow.count());
    }
}
