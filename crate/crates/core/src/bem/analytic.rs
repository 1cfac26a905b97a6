//! Closed-form solutions of the test problems and the exact layer densities
//! for a circle with `sin 2 theta` boundary data.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bessel::{bessel_i, bessel_i_prime, bessel_k, bessel_k_prime};

/// Radius of the circle used by the circle test problems.
pub const CIRCLE_RADIUS: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("unknown problem_id `{0}`")]
pub struct UnknownProblem(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemId {
    /// `(Lap - 1) u = 0` inside the circle, `u = sin 2 theta` on it.
    HelmholtzCircleSin2theta,
    /// `(Lap - 1) u = -(x + y)` inside the circle, solution `x + y`.
    HelmholtzLinear,
    /// `Lap u = g` outside the starfish, solution `sin(pi x/2) - cos(pi y/2)`.
    PoissonStarfish,
    /// `(Lap - 1) u = -(x^2 - y^2)` inside the circle with Neumann data.
    NeumannCircle,
}

impl ProblemId {
    pub const ALL: [ProblemId; 4] = [
        ProblemId::HelmholtzCircleSin2theta,
        ProblemId::HelmholtzLinear,
        ProblemId::PoissonStarfish,
        ProblemId::NeumannCircle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemId::HelmholtzCircleSin2theta => "helmholtz_circle_sin2theta",
            ProblemId::HelmholtzLinear => "helmholtz_linear",
            ProblemId::PoissonStarfish => "poisson_starfish",
            ProblemId::NeumannCircle => "neumann_circle",
        }
    }

    /// Wavenumber the closed form is written for.
    pub fn k(self) -> f64 {
        match self {
            ProblemId::PoissonStarfish => 0.0,
            _ => 1.0,
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemId {
    type Err = UnknownProblem;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProblemId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| UnknownProblem(s.to_string()))
    }
}

type Field = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Gradient = Box<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// Exact solution `u(x, y)` of a test problem at its own wavenumber.
pub fn analytic_solution(id: ProblemId) -> Field {
    analytic_solution_with_k(id, id.k())
}

/// Exact solution for wavenumber `k`. Only the circle problem depends on `k`;
/// the others are fixed functions whose forcing absorbs `k`.
pub fn analytic_solution_with_k(id: ProblemId, k: f64) -> Field {
    match id {
        ProblemId::HelmholtzCircleSin2theta => {
            let scale = 1.0 / radial(k, CIRCLE_RADIUS);
            Box::new(move |x, y| {
                let r = x.hypot(y);
                if r == 0.0 {
                    return 0.0;
                }
                // sin 2 theta = 2 x y / r^2
                scale * radial(k, r) * 2.0 * x * y / (r * r)
            })
        }
        ProblemId::HelmholtzLinear => Box::new(|x, y| x + y),
        ProblemId::PoissonStarfish => Box::new(|x, y| (FRAC_PI_2 * x).sin() - (FRAC_PI_2 * y).cos()),
        ProblemId::NeumannCircle => Box::new(|x, y| x * x - y * y),
    }
}

/// `g = Lap u - k^2 u` for the exact solution at wavenumber `k`.
pub fn forcing(id: ProblemId, k: f64) -> Field {
    let k2 = k * k;
    match id {
        ProblemId::HelmholtzCircleSin2theta => Box::new(|_, _| 0.0),
        ProblemId::HelmholtzLinear => Box::new(move |x, y| -k2 * (x + y)),
        ProblemId::PoissonStarfish => {
            let u = analytic_solution(id);
            Box::new(move |x, y| -(FRAC_PI_2 * FRAC_PI_2 + k2) * u(x, y))
        }
        ProblemId::NeumannCircle => Box::new(move |x, y| -k2 * (x * x - y * y)),
    }
}

/// Gradient of the exact solution at wavenumber `k`.
pub fn analytic_gradient(id: ProblemId, k: f64) -> Gradient {
    match id {
        ProblemId::HelmholtzCircleSin2theta => {
            let scale = 1.0 / radial(k, CIRCLE_RADIUS);
            Box::new(move |x, y| {
                let r2 = x * x + y * y;
                if r2 == 0.0 {
                    return [0.0, 0.0];
                }
                let r = r2.sqrt();
                let f = radial(k, r);
                let df = if k > 0.0 {
                    k * bessel_i_prime(2, k * r).expect("finite")
                } else {
                    2.0 * r
                };
                let s = 2.0 * x * y / r2;
                [
                    scale * (df * x / r * s + f * 2.0 * y * (y * y - x * x) / (r2 * r2)),
                    scale * (df * y / r * s + f * 2.0 * x * (x * x - y * y) / (r2 * r2)),
                ]
            })
        }
        ProblemId::HelmholtzLinear => Box::new(|_, _| [1.0, 1.0]),
        ProblemId::PoissonStarfish => {
            Box::new(|x, y| [FRAC_PI_2 * (FRAC_PI_2 * x).cos(), FRAC_PI_2 * (FRAC_PI_2 * y).sin()])
        }
        ProblemId::NeumannCircle => Box::new(|x, y| [2.0 * x, -2.0 * y]),
    }
}

/// Radial factor of the circle solution, `I_2(k r)` or `r^2` when `k = 0`.
fn radial(k: f64, r: f64) -> f64 {
    if k > 0.0 {
        bessel_i(2, k * r).expect("finite radius")
    } else {
        r * r
    }
}

/// Coefficient `c` of the single layer density `sigma = c sin 2 theta` whose
/// potential equals `sin 2 theta` on a circle of radius `r` for `Lap - k^2`.
pub fn circle_single_layer_coefficient(r: f64, k: f64) -> f64 {
    let kr = k * r;
    1.0 / (r * bessel_i(2, kr).expect("positive") * bessel_k(2, kr).expect("positive"))
}

/// Coefficient `c` of the double layer density `gamma = c sin 2 theta`, with
/// `gamma` the exterior minus interior limit, whose interior limit equals
/// `sin 2 theta` on a circle of radius `r`. The exterior field is the decaying
/// solution with the same normal derivative as the interior one.
pub fn circle_double_layer_coefficient(r: f64, k: f64) -> f64 {
    let kr = k * r;
    let i2 = bessel_i(2, kr).expect("positive");
    let ext = bessel_i_prime(2, kr).expect("positive") / (i2 * bessel_k_prime(2, kr).expect("positive"));
    ext * bessel_k(2, kr).expect("positive") - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solution_examples() {
        let u = analytic_solution(ProblemId::HelmholtzCircleSin2theta);
        assert_eq!(u(0.0, 0.0), 0.0);
        let s = CIRCLE_RADIUS / 2f64.sqrt();
        assert!((u(s, s) - 1.0).abs() < 1e-14);
        assert!(analytic_solution(ProblemId::PoissonStarfish)(1.0, 0.0).abs() < 1e-15);
        assert_eq!(analytic_solution(ProblemId::HelmholtzLinear)(0.25, 0.5), 0.75);
    }

    #[test]
    fn forcing_matches_five_point_laplacian() {
        let h = 1e-3;
        for id in ProblemId::ALL {
            for k in [0.0, 1.0, 2.5] {
                let u = analytic_solution_with_k(id, k);
                let g = forcing(id, k);
                let grad = analytic_gradient(id, k);
                for p in [[0.1, 0.07], [-0.2, 0.13], [0.31, -0.4]] {
                    let (x, y) = (p[0], p[1]);
                    let lap = (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - 4.0 * u(x, y)) / (h * h);
                    let want = lap - k * k * u(x, y);
                    assert!((g(x, y) - want).abs() < 1e-4 * (1.0 + want.abs()), "{id} k={k}");
                    let gx = (u(x + h, y) - u(x - h, y)) / (2.0 * h);
                    let gy = (u(x, y + h) - u(x, y - h)) / (2.0 * h);
                    let gr = grad(x, y);
                    assert!((gr[0] - gx).abs() < 1e-5 && (gr[1] - gy).abs() < 1e-5, "{id} k={k}");
                }
            }
        }
    }

    #[test]
    fn ids_round_trip() {
        for p in ProblemId::ALL {
            assert_eq!(p.as_str().parse::<ProblemId>().unwrap(), p);
        }
        assert_eq!("disk".parse::<ProblemId>(), Err(UnknownProblem("disk".into())));
    }

    #[test]
    fn densities_reproduce_jumps() {
        let (r, k) = (CIRCLE_RADIUS, 1.0);
        // single layer: jump in normal derivative between the two Bessel fields
        let i2 = bessel_i(2, r).unwrap();
        let k2 = bessel_k(2, r).unwrap();
        let jump = bessel_i_prime(2, r).unwrap() / i2 - bessel_k_prime(2, r).unwrap() / k2;
        assert!((circle_single_layer_coefficient(r, k) - jump).abs() < 1e-12 * jump.abs());
        // double layer: exterior field a K2(r) with matched slope
        let a = bessel_i_prime(2, r).unwrap() / i2 / bessel_k_prime(2, r).unwrap();
        assert!((circle_double_layer_coefficient(r, k) - (a * k2 - 1.0)).abs() < 1e-14);
        assert!(circle_double_layer_coefficient(r, k) < 0.0);
    }
}
