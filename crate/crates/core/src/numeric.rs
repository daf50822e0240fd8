//! Levenberg–Marquardt least squares with a forward-difference Jacobian.
//!
//! Used wherever a group element or a control schedule has to be fitted to an
//! exact target: residual vectors are small and dense, so a plain normal
//! equation solve is adequate.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    /// Hard cap on residual evaluations, Jacobian columns included.
    pub max_evaluations: usize,
    /// Stop once the residual norm falls below this.
    pub tolerance: f64,
    pub fd_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_evaluations: 5_000, tolerance: 1e-12, fd_step: 1e-7 }
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub params: Vec<f64>,
    pub residual_norm: f64,
    pub evaluations: usize,
}

impl LmReport {
    pub fn converged(&self, tolerance: f64) -> bool {
        self.residual_norm <= tolerance
    }
}

/// Minimizes `‖f(x)‖²` from `x0`; returns the best point seen.
pub fn levenberg_marquardt<F>(mut f: F, x0: &[f64], opts: &LmOptions) -> LmReport
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = DVector::from_vec(f(&x));
    let mut evaluations = 1;
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let m = r.len();

    while evaluations + n < opts.max_evaluations && cost.sqrt() > opts.tolerance && n > 0 {
        let mut jac = DMatrix::<f64>::zeros(m, n);
        let mut probe = x.clone();
        for j in 0..n {
            let h = opts.fd_step * x[j].abs().max(1.0);
            probe[j] = x[j] + h;
            let rj = DVector::from_vec(f(&probe));
            evaluations += 1;
            jac.set_column(j, &((rj - &r) / h));
            probe[j] = x[j];
        }
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * &r;

        let mut improved = false;
        while evaluations < opts.max_evaluations {
            let mut damped = a.clone();
            for i in 0..n {
                damped[(i, i)] += lambda * a[(i, i)].max(1e-12);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 4.0;
                if lambda > 1e16 {
                    break;
                }
                continue;
            };
            let delta = chol.solve(&(-&g));
            let candidate: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
            let rc = DVector::from_vec(f(&candidate));
            evaluations += 1;
            let cc = rc.norm_squared();
            if cc.is_finite() && cc < cost {
                x = candidate;
                r = rc;
                cost = cc;
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    LmReport { params: x, residual_norm: cost.sqrt(), evaluations }
}
