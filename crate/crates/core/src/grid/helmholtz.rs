use std::f64::consts::PI;

use num_complex::Complex64;

use super::fft::{signed_mode, Fft2};
use super::{Discretization, GridError, GridSpec, ScalarField, VectorField};

/// Relative size of the mean, compared to the largest entry, that still counts
/// as zero when inverting the singular (k = 0) operator.
const MEAN_TOLERANCE: f64 = 1e-10;

/// The operator `L = Lap_d - k^2` on a periodic grid, with its FFT-based inverse.
///
/// Both discretizations are diagonal in the discrete Fourier basis. The finite
/// difference inverse divides by the symbol of the five-point stencil, so
/// `invert` is an exact inverse of `apply` for either choice.
#[derive(Debug, Clone)]
pub struct HelmholtzOperator {
    spec: GridSpec,
    k: f64,
    disc: Discretization,
    fft: Fft2,
    /// Symbol of `L` per Fourier mode, same layout as the field.
    symbol: Vec<f64>,
    /// Spectral first-derivative multipliers along one axis (Nyquist zeroed).
    wavenumbers: Vec<f64>,
}

impl HelmholtzOperator {
    pub fn new(spec: GridSpec, k: f64, disc: Discretization) -> Result<Self, GridError> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(GridError::BadWavenumber(k));
        }
        let n = spec.n();
        let dx = spec.dx();
        let axis_symbol: Vec<f64> = (0..n)
            .map(|m| match disc {
                Discretization::FiniteDifference => (2.0 * (2.0 * PI * m as f64 / n as f64).cos() - 2.0) / (dx * dx),
                Discretization::FourierSpectral => {
                    let w = 2.0 * PI * signed_mode(m, n) as f64 / spec.length();
                    -w * w
                }
            })
            .collect();
        let mut symbol = Vec::with_capacity(n * n);
        for my in 0..n {
            for mx in 0..n {
                symbol.push(axis_symbol[mx] + axis_symbol[my] - k * k);
            }
        }
        let wavenumbers = (0..n)
            .map(|m| {
                if 2 * m == n {
                    0.0
                } else {
                    2.0 * PI * signed_mode(m, n) as f64 / spec.length()
                }
            })
            .collect();
        Ok(Self {
            spec,
            k,
            disc,
            fft: Fft2::new(n),
            symbol,
            wavenumbers,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn discretization(&self) -> Discretization {
        self.disc
    }

    pub fn apply(&self, u: &ScalarField) -> ScalarField {
        debug_assert_eq!(u.spec(), &self.spec);
        match self.disc {
            Discretization::FiniteDifference => self.apply_stencil(u),
            Discretization::FourierSpectral => {
                let mut spec = self.fft.forward_real(u.values());
                for (c, s) in spec.iter_mut().zip(&self.symbol) {
                    *c *= *s;
                }
                ScalarField::from_values(self.spec, self.fft.inverse_real(spec)).expect("grid shape preserved")
            }
        }
    }

    fn apply_stencil(&self, u: &ScalarField) -> ScalarField {
        let n = self.spec.n();
        let inv_dx2 = 1.0 / self.spec.cell_area();
        let k2 = self.k * self.k;
        let v = u.values();
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            let jm = (j + n - 1) % n;
            let jp = (j + 1) % n;
            for i in 0..n {
                let im = (i + n - 1) % n;
                let ip = (i + 1) % n;
                let c = v[j * n + i];
                let lap = v[j * n + im] + v[j * n + ip] + v[jm * n + i] + v[jp * n + i] - 4.0 * c;
                out[j * n + i] = lap * inv_dx2 - k2 * c;
            }
        }
        ScalarField::from_values(self.spec, out).expect("grid shape preserved")
    }

    /// Solves `L u = rhs`. For `k = 0` the right-hand side must have zero mean
    /// and the mean-zero solution is returned.
    pub fn invert(&self, rhs: &ScalarField) -> Result<ScalarField, GridError> {
        if self.k == 0.0 {
            let mean = rhs.mean();
            let tol = MEAN_TOLERANCE * rhs.max_abs() + f64::MIN_POSITIVE;
            if mean.abs() > tol {
                return Err(GridError::NonZeroMeanForSingularOperator { mean, tol });
            }
        }
        Ok(self.solve_pinned(rhs))
    }

    /// Solves `L u = rhs`, dropping the zero mode when `L` is singular.
    ///
    /// Callers must know the rhs is mean-zero when `k = 0` (e.g. a discrete
    /// divergence); no check is made.
    pub fn solve_pinned(&self, rhs: &ScalarField) -> ScalarField {
        debug_assert_eq!(rhs.spec(), &self.spec);
        let mut spec = self.fft.forward_real(rhs.values());
        self.divide_by_symbol(&mut spec);
        ScalarField::from_values(self.spec, self.fft.inverse_real(spec)).expect("grid shape preserved")
    }

    fn divide_by_symbol(&self, spec: &mut [Complex64]) {
        for (c, s) in spec.iter_mut().zip(&self.symbol) {
            if *s == 0.0 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c /= *s;
            }
        }
    }

    /// Discrete divergence matching this operator's discretization.
    pub fn divergence(&self, v: &VectorField) -> ScalarField {
        debug_assert_eq!(v.spec(), &self.spec);
        match self.disc {
            Discretization::FiniteDifference => centered_divergence(v),
            Discretization::FourierSpectral => {
                let n = self.spec.n();
                let sx = self.fft.forward_real(v.x.values());
                let sy = self.fft.forward_real(v.y.values());
                let mut out = vec![Complex64::new(0.0, 0.0); n * n];
                for my in 0..n {
                    for mx in 0..n {
                        let idx = my * n + mx;
                        let d = sx[idx] * self.wavenumbers[mx] + sy[idx] * self.wavenumbers[my];
                        out[idx] = Complex64::new(-d.im, d.re);
                    }
                }
                ScalarField::from_values(self.spec, self.fft.inverse_real(out)).expect("grid shape preserved")
            }
        }
    }
}

fn centered_divergence(v: &VectorField) -> ScalarField {
    let spec = *v.spec();
    let n = spec.n();
    let inv_2dx = 0.5 / spec.dx();
    let vx = v.x.values();
    let vy = v.y.values();
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        let jm = (j + n - 1) % n;
        let jp = (j + 1) % n;
        for i in 0..n {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            out[j * n + i] = (vx[j * n + ip] - vx[j * n + im] + vy[jp * n + i] - vy[jm * n + i]) * inv_2dx;
        }
    }
    ScalarField::from_values(spec, out).expect("grid shape preserved")
}

/// `(Lap_d - k^2) u`.
pub fn helmholtz_apply(u: &ScalarField, k: f64, d: Discretization) -> Result<ScalarField, GridError> {
    Ok(HelmholtzOperator::new(*u.spec(), k, d)?.apply(u))
}

/// Solves `(Lap_d - k^2) u = rhs`; mean-zero solution when `k = 0`.
pub fn helmholtz_invert(rhs: &ScalarField, k: f64, d: Discretization) -> Result<ScalarField, GridError> {
    HelmholtzOperator::new(*rhs.spec(), k, d)?.invert(rhs)
}

pub fn divergence(v: &VectorField, d: Discretization) -> ScalarField {
    match d {
        Discretization::FiniteDifference => centered_divergence(v),
        Discretization::FourierSpectral => HelmholtzOperator::new(*v.spec(), 0.0, d)
            .expect("k = 0 is valid")
            .divergence(v),
    }
}
