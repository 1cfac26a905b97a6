//! Modified Bessel functions `I_n` and `K_n` of integer order for real
//! positive arguments.
//!
//! `I_n` is summed from its power series. `K_0` and `K_1` use their
//! logarithmic series up to `x = 2` and the integral
//! `K_n(x) = int_0^inf exp(-x cosh t) cosh(n t) dt` by the trapezoid rule
//! beyond, which converges geometrically for this analytic integrand. Higher
//! orders follow from the upward recurrence, which is stable for `K`.

use thiserror::Error;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_SWITCH: f64 = 2.0;
const TRAPEZOID_STEP: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BesselError {
    #[error("argument {0} outside the domain of the function")]
    DomainError(f64),
}

/// `I_n(x)` for `x >= 0`.
pub fn bessel_i(n: u32, x: f64) -> Result<f64, BesselError> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(BesselError::DomainError(x));
    }
    if x == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let half = 0.5 * x;
    let q = half * half;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = 0.0;
    let mut m = 0u32;
    loop {
        sum += term;
        m += 1;
        term *= q / (m as f64 * (m + n) as f64);
        if term <= 1e-17 * sum {
            break;
        }
    }
    Ok(sum)
}

/// `K_n(x)` for `x > 0`.
pub fn bessel_k(n: u32, x: f64) -> Result<f64, BesselError> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(BesselError::DomainError(x));
    }
    let (k0, k1) = if x <= SERIES_SWITCH {
        (k0_series(x), k1_series(x))
    } else {
        (k_integral(0, x), k_integral(1, x))
    };
    if n == 0 {
        return Ok(k0);
    }
    let (mut prev, mut cur) = (k0, k1);
    for m in 1..n {
        let next = prev + 2.0 * m as f64 / x * cur;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `I_n'(x) = I_{n-1}(x) - (n/x) I_n(x)` (`I_0' = I_1`).
pub fn bessel_i_prime(n: u32, x: f64) -> Result<f64, BesselError> {
    if n == 0 {
        return bessel_i(1, x);
    }
    if x == 0.0 {
        return Ok(if n == 1 { 0.5 } else { 0.0 });
    }
    Ok(bessel_i(n - 1, x)? - n as f64 / x * bessel_i(n, x)?)
}

/// `K_n'(x) = -K_{n-1}(x) - (n/x) K_n(x)` (`K_0' = -K_1`).
pub fn bessel_k_prime(n: u32, x: f64) -> Result<f64, BesselError> {
    if n == 0 {
        return Ok(-bessel_k(1, x)?);
    }
    Ok(-bessel_k(n - 1, x)? - n as f64 / x * bessel_k(n, x)?)
}

fn k0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let lead = -((0.5 * x).ln() + EULER_GAMMA);
    // sum_k (x^2/4)^k / (k!)^2 * (lead + H_k)
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum = lead;
    for k in 1..60 {
        term *= q / (k as f64 * k as f64);
        harmonic += 1.0 / k as f64;
        let add = term * (lead + harmonic);
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn k1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let log_half = (0.5 * x).ln();
    let i1 = bessel_i(1, x).expect("positive argument");
    // psi(k+1) + psi(k+2) = 2 H_k + 1/(k+1) - 2 gamma
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum = 1.0 - 2.0 * EULER_GAMMA;
    for k in 1..60 {
        term *= q / (k as f64 * (k + 1) as f64);
        harmonic += 1.0 / k as f64;
        let add = term * (2.0 * harmonic + 1.0 / (k + 1) as f64 - 2.0 * EULER_GAMMA);
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    1.0 / x + log_half * i1 - 0.25 * x * sum
}

fn k_integral(n: u32, x: f64) -> f64 {
    let h = TRAPEZOID_STEP;
    let first = (-x).exp();
    let mut sum = 0.5 * first;
    let mut j = 1;
    loop {
        let t = j as f64 * h;
        let term = (-x * t.cosh()).exp() * (n as f64 * t).cosh();
        sum += term;
        if term < 1e-18 * first {
            break;
        }
        j += 1;
    }
    h * sum
}
