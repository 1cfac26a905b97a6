//! Eulerian-Lagrangian coupling through the Peskin four-point regularized delta.
//!
//! `spread` maps a boundary density to the grid, `sum_i q_i delta_h(x - X_i) ds_i`;
//! `interpolate` samples a grid field at the boundary points,
//! `sum_x u(x) delta_h(x - X_i) dx^2`. They are adjoint:
//! `<S q, u> dx^2 == sum_i q_i (S* u)_i ds_i`.

use crate::geometry::ImmersedBoundary;
use crate::grid::{GridSpec, HelmholtzOperator, ScalarField, VectorField};

/// Peskin four-point kernel `phi(r)`, supported on `|r| < 2`.
pub fn phi4(r: f64) -> f64 {
    let r = r.abs();
    if r <= 1.0 {
        (3.0 - 2.0 * r + (1.0 + 4.0 * r - 4.0 * r * r).max(0.0).sqrt()) / 8.0
    } else if r < 2.0 {
        (5.0 - 2.0 * r - (-7.0 + 12.0 * r - 4.0 * r * r).max(0.0).sqrt()) / 8.0
    } else {
        0.0
    }
}

/// First node index and the four kernel weights along one axis for a point at
/// continuous grid coordinate `g`.
#[inline]
fn axis_stencil(g: f64) -> (i64, [f64; 4]) {
    let base = g.floor() as i64 - 1;
    let mut w = [0.0; 4];
    for (k, wk) in w.iter_mut().enumerate() {
        *wk = phi4(g - (base + k as i64) as f64);
    }
    (base, w)
}

/// Visits the (up to) 16 grid nodes under the kernel centred at `p`, passing the
/// flat index and the tensor weight `phi(x/h) phi(y/h)`.
#[inline]
fn for_each_support(spec: &GridSpec, p: [f64; 2], mut f: impl FnMut(usize, f64)) {
    let [gx, gy] = spec.to_grid(p);
    let (ix, wx) = axis_stencil(gx);
    let (iy, wy) = axis_stencil(gy);
    for (b, &wyb) in wy.iter().enumerate() {
        if wyb == 0.0 {
            continue;
        }
        for (a, &wxa) in wx.iter().enumerate() {
            if wxa == 0.0 {
                continue;
            }
            f(spec.wrapped_index(ix + a as i64, iy + b as i64), wxa * wyb);
        }
    }
}

/// `(S q)(x) = sum_i q_i delta_h(x - X_i) ds_i` with `h = dx`.
pub fn spread(ib: &ImmersedBoundary, q: &[f64], spec: &GridSpec) -> ScalarField {
    assert_eq!(q.len(), ib.len(), "density length must match boundary");
    let mut out = ScalarField::zeros(*spec);
    let inv_h2 = 1.0 / spec.cell_area();
    let vals = out.values_mut();
    for ((p, &qi), &ds) in ib.points().iter().zip(q).zip(ib.spacing()) {
        let amp = qi * ds * inv_h2;
        if amp == 0.0 {
            continue;
        }
        for_each_support(spec, *p, |idx, w| vals[idx] += amp * w);
    }
    out
}

/// `(S* u)_i = sum_x u(x) delta_h(x - X_i) dx^2`.
pub fn interpolate(u: &ScalarField, ib: &ImmersedBoundary) -> Vec<f64> {
    let spec = u.spec();
    let vals = u.values();
    ib.points()
        .iter()
        .map(|p| {
            let mut acc = 0.0;
            for_each_support(spec, *p, |idx, w| acc += vals[idx] * w);
            acc
        })
        .collect()
}

/// Spreads `q n` as a vector field (before the divergence).
pub fn spread_normal(ib: &ImmersedBoundary, q: &[f64], spec: &GridSpec) -> VectorField {
    let qx: Vec<f64> = q.iter().zip(ib.normals()).map(|(v, n)| v * n[0]).collect();
    let qy: Vec<f64> = q.iter().zip(ib.normals()).map(|(v, n)| v * n[1]).collect();
    VectorField {
        x: spread(ib, &qx, spec),
        y: spread(ib, &qy, spec),
    }
}

/// Dipole spread `div(S (q n))`, with the divergence taken in the same
/// discretization as `op`.
pub fn spread_dipole(ib: &ImmersedBoundary, q: &[f64], op: &HelmholtzOperator) -> ScalarField {
    op.divergence(&spread_normal(ib, q, op.spec()))
}
