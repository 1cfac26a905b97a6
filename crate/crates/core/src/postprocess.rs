//! Interior flagging, near-boundary band detection, the near-boundary
//! interpolation that repairs the discontinuous double layer solution, and
//! error norms.

use rayon::prelude::*;
use thiserror::Error;

use crate::coupling::spread;
use crate::geometry::{dist, point_segment_distance, ImmersedBoundary};
use crate::grid::{Discretization, GridSpec, HelmholtzOperator, ScalarField, VectorField};

/// Below this distance a band point is treated as lying on the boundary.
const ON_BOUNDARY: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum PostprocessError {
    #[error("reference corner lies {distance:e} from the boundary (< 4 dx); choose a box with a clear corner")]
    AmbiguousCorner { distance: f64 },
    #[error("indicator threshold produced a mask with no inside or no outside cells")]
    DegenerateMask,
    #[error("boundary points {0} and {1} coincide")]
    DegenerateSegment(usize, usize),
    #[error("error norm region is empty")]
    EmptyRegion,
}

/// Grid points on the PDE-domain side of the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorMask {
    spec: GridSpec,
    flags: Vec<bool>,
}

impl InteriorMask {
    pub fn new(spec: GridSpec, flags: Vec<bool>) -> Self {
        assert_eq!(flags.len(), spec.len(), "mask size must match grid");
        Self { spec, flags }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.flags[self.spec.index(i, j)]
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }

    /// Mask cells not in `band`.
    pub fn without(&self, band: &BandMask) -> Vec<bool> {
        self.flags.iter().zip(&band.flags).map(|(a, b)| *a && !*b).collect()
    }

    pub fn to_field(&self) -> ScalarField {
        let values = self.flags.iter().map(|f| if *f { 1.0 } else { 0.0 }).collect();
        ScalarField::from_values(self.spec, values).expect("same grid")
    }
}

/// Domain-side grid points within `m1` meshwidths of the boundary polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMask {
    spec: GridSpec,
    flags: Vec<bool>,
    m1: usize,
}

impl BandMask {
    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.flags[self.spec.index(i, j)]
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }
}

/// Indicator of the region enclosed by the boundary, from the periodic
/// Poisson problem `Lap chi + div(S(1 n)) = 0` with `n` pointing out of the
/// enclosed region, shifted so the grid corner is 0 and thresholded at 1/2.
///
/// The returned mask is the enclosed region for an interior domain and its
/// complement for an exterior domain.
pub fn flag_interior(
    ib: &ImmersedBoundary,
    spec: &GridSpec,
    d: Discretization,
) -> Result<InteriorMask, PostprocessError> {
    let corner = spec.coords(0, 0);
    let distance = ib.distance_to_polyline(corner);
    if distance < 4.0 * spec.dx() {
        return Err(PostprocessError::AmbiguousCorner { distance });
    }
    let chi = indicator(ib, spec, d);
    let base = chi.get(0, 0);
    let sign_inside = ib.orientation().sign() > 0.0;
    let flags: Vec<bool> = chi.values().iter().map(|v| (v - base > 0.5) == sign_inside).collect();
    let inside = flags.iter().filter(|f| **f).count();
    if inside == 0 || inside == flags.len() {
        return Err(PostprocessError::DegenerateMask);
    }
    Ok(InteriorMask::new(*spec, flags))
}

/// Smooth indicator before thresholding; 1 inside the closed curve and 0
/// outside, up to a constant and a smeared transition at the curve.
pub fn indicator(ib: &ImmersedBoundary, spec: &GridSpec, d: Discretization) -> ScalarField {
    let op = HelmholtzOperator::new(*spec, 0.0, d).expect("valid grid");
    let s = ib.orientation().sign();
    let nx: Vec<f64> = ib.normals().iter().map(|n| s * n[0]).collect();
    let ny: Vec<f64> = ib.normals().iter().map(|n| s * n[1]).collect();
    let mut rhs = op.divergence(&VectorField {
        x: spread(ib, &nx, spec),
        y: spread(ib, &ny, spec),
    });
    rhs.scale(-1.0);
    op.solve_pinned(&rhs)
}

/// Marks mask points whose distance to the boundary polyline is at most
/// `m1 dx`. `m1 = 0` gives an empty band.
pub fn flag_band(ib: &ImmersedBoundary, mask: &InteriorMask, m1: usize) -> BandMask {
    let spec = *mask.spec();
    let mut flags = vec![false; spec.len()];
    if m1 > 0 {
        let dx = spec.dx();
        let reach = m1 as f64 * dx;
        let origin = spec.origin();
        let mut nearest = vec![f64::INFINITY; spec.len()];
        let pts = ib.points();
        let n = pts.len();
        for s in 0..n {
            let a = pts[s];
            let b = pts[(s + 1) % n];
            let lo = |c: usize| ((a[c].min(b[c]) - reach - origin[c]) / dx).floor() as i64;
            let hi = |c: usize| ((a[c].max(b[c]) + reach - origin[c]) / dx).ceil() as i64;
            for j in lo(1)..=hi(1) {
                for i in lo(0)..=hi(0) {
                    let p = [origin[0] + i as f64 * dx, origin[1] + j as f64 * dx];
                    let idx = spec.wrapped_index(i, j);
                    let dseg = point_segment_distance(p, a, b);
                    if dseg < nearest[idx] {
                        nearest[idx] = dseg;
                    }
                }
            }
        }
        for ((f, near), inside) in flags.iter_mut().zip(&nearest).zip(mask.flags()) {
            *f = *inside && *near <= reach;
        }
    }
    BandMask { spec, flags, m1 }
}

/// Output of [`interpolate_near_boundary`].
#[derive(Debug, Clone)]
pub struct Corrected {
    pub field: ScalarField,
    /// Band points whose interior sample point fell outside the domain and
    /// which took the boundary value instead.
    pub fallbacks: usize,
}

/// Projection of `p` onto the segment through boundary points `a` (weight
/// `t`) and `b`, as `(t, x_A)`.
fn project(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> (f64, [f64; 2]) {
    let d = [a[0] - b[0], a[1] - b[1]];
    let t = ((p[0] - b[0]) * d[0] + (p[1] - b[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1]);
    (t, [b[0] + t * d[0], b[1] + t * d[1]])
}

/// Indices of the three nearest boundary points, ties to the lower index.
fn three_nearest(pts: &[[f64; 2]], p: [f64; 2]) -> [usize; 3] {
    let mut best = [(f64::INFINITY, usize::MAX); 3];
    for (i, q) in pts.iter().enumerate() {
        let d = dist(p, *q);
        if d < best[2].0 {
            best[2] = (d, i);
            if best[2].0 < best[1].0 {
                best.swap(1, 2);
                if best[1].0 < best[0].0 {
                    best.swap(0, 1);
                }
            }
        }
    }
    [best[0].1, best[1].1, best[2].1]
}

/// Replaces band values by a linear blend of the boundary value at the
/// projection `x_A` of each point onto the boundary and a bilinear sample of
/// `u` at `x_B = x_A + m2 dx (x_p - x_A)/|x_p - x_A|`. Off-band values are
/// returned unchanged.
pub fn interpolate_near_boundary(
    u: &ScalarField,
    ib: &ImmersedBoundary,
    boundary_values: &[f64],
    band: &BandMask,
    mask: &InteriorMask,
    m2: usize,
) -> Result<Corrected, PostprocessError> {
    assert_eq!(boundary_values.len(), ib.len(), "boundary values must match boundary");
    let spec = *u.spec();
    let dx = spec.dx();
    let reach = m2 as f64 * dx;
    let pts = ib.points();
    let n = spec.n();
    let targets: Vec<usize> = band
        .flags()
        .iter()
        .enumerate()
        .filter(|(_, f)| **f)
        .map(|(i, _)| i)
        .collect();

    let replaced: Vec<Result<(f64, bool), PostprocessError>> = targets
        .par_iter()
        .map(|&idx| {
            let p = spec.coords(idx % n, idx / n);
            let near = three_nearest(pts, p);
            let (mut i1, mut i2) = (near[0], near[1]);
            if dist(pts[i1], pts[i2]) < ON_BOUNDARY {
                return Err(PostprocessError::DegenerateSegment(i1.min(i2), i1.max(i2)));
            }
            let (mut t, mut xa) = project(p, pts[i1], pts[i2]);
            if !(0.0..=1.0).contains(&t) {
                let pairs = [(near[0], near[1]), (near[0], near[2]), (near[1], near[2])];
                let (a, b) = pairs.iter().copied().fold((near[0], near[1]), |acc, pr| {
                    if dist(pts[pr.0], pts[pr.1]) > dist(pts[acc.0], pts[acc.1]) {
                        pr
                    } else {
                        acc
                    }
                });
                i1 = a;
                i2 = b;
                let (t2, _) = project(p, pts[i1], pts[i2]);
                t = t2.clamp(0.0, 1.0);
                let (x1, x2) = (pts[i1], pts[i2]);
                xa = [x2[0] + t * (x1[0] - x2[0]), x2[1] + t * (x1[1] - x2[1])];
            }
            let ua = t * boundary_values[i1] + (1.0 - t) * boundary_values[i2];
            let dpa = dist(p, xa);
            if dpa < ON_BOUNDARY {
                return Ok((ua, false));
            }
            let xb = [
                xa[0] + reach * (p[0] - xa[0]) / dpa,
                xa[1] + reach * (p[1] - xa[1]) / dpa,
            ];
            match bilinear(u, mask, xb) {
                Some(ub) => Ok(((ua * dist(xb, p) + ub * dpa) / reach, false)),
                None => Ok((ua, true)),
            }
        })
        .collect();

    let mut field = u.clone();
    let mut fallbacks = 0;
    let vals = field.values_mut();
    for (&idx, r) in targets.iter().zip(replaced) {
        let (v, fell_back) = r?;
        vals[idx] = v;
        fallbacks += fell_back as usize;
    }
    Ok(Corrected { field, fallbacks })
}

/// Bilinear sample at `x`; `None` when a node with nonzero weight is outside
/// the mask. Points on grid lines drop the zero-weight nodes.
fn bilinear(u: &ScalarField, mask: &InteriorMask, x: [f64; 2]) -> Option<f64> {
    let spec = u.spec();
    let [gx, gy] = spec.to_grid(x);
    let (i0, j0) = (gx.floor(), gy.floor());
    let (fx, fy) = (gx - i0, gy - j0);
    let (i0, j0) = (i0 as i64, j0 as i64);
    let mut acc = 0.0;
    for (di, wx) in [(0, 1.0 - fx), (1, fx)] {
        for (dj, wy) in [(0, 1.0 - fy), (1, fy)] {
            let w = wx * wy;
            if w == 0.0 {
                continue;
            }
            let idx = spec.wrapped_index(i0 + di, j0 + dj);
            if !mask.flags()[idx] {
                return None;
            }
            acc += w * u.values()[idx];
        }
    }
    Some(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ErrorNorms {
    pub linf: f64,
    pub l2: f64,
}

/// Max and `dx`-weighted 2-norm of `u - exact` over `region`.
pub fn error_norms(
    u: &ScalarField,
    exact: impl Fn(f64, f64) -> f64,
    region: &[bool],
) -> Result<ErrorNorms, PostprocessError> {
    let spec = u.spec();
    let n = spec.n();
    let mut linf: f64 = 0.0;
    let mut sq = 0.0;
    let mut any = false;
    for (idx, (v, inside)) in u.values().iter().zip(region).enumerate() {
        if !inside {
            continue;
        }
        any = true;
        let [x, y] = spec.coords(idx % n, idx / n);
        let e = (v - exact(x, y)).abs();
        linf = linf.max(e);
        sq += e * e;
    }
    if !any {
        return Err(PostprocessError::EmptyRegion);
    }
    Ok(ErrorNorms {
        linf,
        l2: (sq * spec.cell_area()).sqrt(),
    })
}
