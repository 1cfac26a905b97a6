//! Matrix-free Krylov solvers: full (unrestarted) GMRES and MINRES.
//!
//! Both start from a zero initial guess and stop when the relative residual
//! `|b - A x| / |b|` (as tracked by the method's recurrence) drops to `tol`.

/// A linear map on `R^n`, applied without forming a matrix.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

/// Wraps a closure as a [`LinearOperator`].
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovConfig {
    pub tol: f64,
    /// Defaults to `20 * n` when `None`.
    pub max_iter: Option<usize>,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: None,
        }
    }
}

impl KrylovConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, max_iter: None }
    }

    fn limit(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(20 * n.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovResult {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual estimate.
    pub residual: f64,
    pub converged: bool,
    /// Relative residual after each iteration.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn trivial_result(n: usize) -> KrylovResult {
    KrylovResult {
        solution: vec![0.0; n],
        iterations: 0,
        residual: 0.0,
        converged: true,
        history: Vec::new(),
    }
}

/// Full GMRES with modified Gram-Schmidt Arnoldi and Givens rotations.
/// The iteration count is the number of Arnoldi steps taken.
pub fn gmres<A: LinearOperator + ?Sized>(a: &A, b: &[f64], cfg: &KrylovConfig) -> KrylovResult {
    let n = a.dim();
    assert_eq!(b.len(), n, "rhs length must match operator dimension");
    let beta = norm(b);
    if beta == 0.0 {
        return trivial_result(n);
    }
    let max_iter = cfg.limit(n);

    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|v| v / beta).collect()];
    // Upper-triangular factor, column by column.
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![beta];
    let mut history = Vec::new();
    let mut w = vec![0.0; n];
    let mut converged = false;

    for j in 0..max_iter {
        a.apply(&basis[j], &mut w);
        let mut h = vec![0.0; j + 2];
        for (i, v) in basis.iter().enumerate() {
            h[i] = dot(&w, v);
            for (wk, vk) in w.iter_mut().zip(v) {
                *wk -= h[i] * vk;
            }
        }
        let h_next = norm(&w);
        h[j + 1] = h_next;
        let column_norm = norm(&h);

        for i in 0..j {
            let t = cs[i] * h[i] + sn[i] * h[i + 1];
            h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
            h[i] = t;
        }
        let denom = h[j].hypot(h[j + 1]);
        let (c, s) = if denom == 0.0 {
            (1.0, 0.0)
        } else {
            (h[j] / denom, h[j + 1] / denom)
        };
        cs.push(c);
        sn.push(s);
        h[j] = denom;
        h.truncate(j + 1);
        r_cols.push(h);
        let gj = g[j];
        g[j] = c * gj;
        g.push(-s * gj);

        let rel = g[j + 1].abs() / beta;
        history.push(rel);
        let breakdown = h_next <= 1e-14 * column_norm;
        if rel <= cfg.tol || breakdown {
            converged = true;
            break;
        }
        basis.push(w.iter().map(|v| v / h_next).collect());
    }

    let k = r_cols.len();
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for (jj, yj) in y.iter().enumerate().skip(i + 1) {
            acc -= r_cols[jj][i] * yj;
        }
        y[i] = if r_cols[i][i] == 0.0 { 0.0 } else { acc / r_cols[i][i] };
    }
    let mut x = vec![0.0; n];
    for (yi, v) in y.iter().zip(&basis) {
        for (xk, vk) in x.iter_mut().zip(v) {
            *xk += yi * vk;
        }
    }
    let residual = *history.last().unwrap_or(&0.0);
    KrylovResult {
        solution: x,
        iterations: k,
        residual,
        converged: converged || residual <= cfg.tol,
        history,
    }
}

/// MINRES for symmetric (possibly indefinite) operators, following the
/// Paige-Saunders recurrences without preconditioning.
pub fn minres<A: LinearOperator + ?Sized>(a: &A, b: &[f64], cfg: &KrylovConfig) -> KrylovResult {
    let n = a.dim();
    assert_eq!(b.len(), n, "rhs length must match operator dimension");
    let beta1 = norm(b);
    if beta1 == 0.0 {
        return trivial_result(n);
    }
    let max_iter = cfg.limit(n);

    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let mut y = b.to_vec();
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];

    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for itn in 1..=max_iter {
        iterations = itn;
        let s = 1.0 / beta;
        for (vk, yk) in v.iter_mut().zip(&y) {
            *vk = s * yk;
        }
        a.apply(&v, &mut y);
        if itn >= 2 {
            let f = beta / oldb;
            for (yk, rk) in y.iter_mut().zip(&r1) {
                *yk -= f * rk;
            }
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        for (yk, rk) in y.iter_mut().zip(&r2) {
            *yk -= f * rk;
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        oldb = beta;
        beta = norm(&y);

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for k in 0..n {
            w[k] = (v[k] - oldeps * w1[k] - delta * w2[k]) / gamma;
            x[k] += phi * w[k];
        }

        let rel = phibar / beta1;
        history.push(rel);
        if rel <= cfg.tol || beta <= 1e-14 * beta1 {
            converged = true;
            break;
        }
    }
    let residual = *history.last().unwrap_or(&0.0);
    KrylovResult {
        solution: x,
        iterations,
        residual,
        converged,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: Vec<f64>) -> impl LinearOperator {
        FnOperator::new(d.len(), move |x: &[f64], y: &mut [f64]| {
            for ((yk, xk), dk) in y.iter_mut().zip(x).zip(&d) {
                *yk = dk * xk;
            }
        })
    }

    #[test]
    fn identity_one_iteration() {
        let b = vec![1.0, -2.0, 3.0, 0.5];
        let id = diag(vec![1.0; 4]);
        let r = gmres(&id, &b, &KrylovConfig::default());
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        for (x, bb) in r.solution.iter().zip(&b) {
            assert!((x - bb).abs() < 1e-14);
        }
        let two = diag(vec![2.0; 4]);
        let m = minres(&two, &b, &KrylovConfig::default());
        assert_eq!(m.iterations, 1);
        for (x, bb) in m.solution.iter().zip(&b) {
            assert!((x - bb / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs() {
        let op = diag(vec![3.0; 5]);
        for r in [
            gmres(&op, &[0.0; 5], &KrylovConfig::default()),
            minres(&op, &[0.0; 5], &KrylovConfig::default()),
        ] {
            assert_eq!(r.iterations, 0);
            assert!(r.converged);
            assert!(r.solution.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn three_eigenvalues_terminate_in_three() {
        let d: Vec<f64> = (0..12).map(|i| [1.0, -2.0, 5.0][i % 3]).collect();
        let b: Vec<f64> = (0..12).map(|i| 1.0 + i as f64).collect();
        let cfg = KrylovConfig::with_tol(1e-10);
        assert!(minres(&diag(d.clone()), &b, &cfg).iterations <= 3);
        assert!(gmres(&diag(d), &b, &cfg).iterations <= 3);
    }

    #[test]
    fn not_converged_reports_best_iterate() {
        let d: Vec<f64> = (1..=50).map(|i| i as f64).collect();
        let b = vec![1.0; 50];
        let cfg = KrylovConfig {
            tol: 1e-12,
            max_iter: Some(3),
        };
        let g = gmres(&diag(d.clone()), &b, &cfg);
        assert!(!g.converged);
        assert_eq!(g.iterations, 3);
        let m = minres(&diag(d), &b, &cfg);
        assert!(!m.converged);
        assert!(m.residual < 1.0);
    }
}
