//! Box-constrained Levenberg–Marquardt with a central-difference Jacobian.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when an accepted step lowers the cost by less than `ftol · cost`.
    pub ftol: f64,
    /// Stop when the step norm falls below this (parameter units).
    pub xtol: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { max_iter: 1000, ftol: 1e-10, xtol: 1e-8, fd_step: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Cost after every accepted step, starting with the initial cost.
    pub history: Vec<f64>,
}

fn sq_norm(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

fn jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], m: usize, rel: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = rel * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Minimises `‖f(x)‖²` subject to `lower ≤ x ≤ upper`.
pub fn minimize(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &LmOptions,
) -> LmOutcome {
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let mut r = f(&x);
    let m = r.len();
    let mut cost = sq_norm(&r);
    let mut history = vec![cost];
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        let jac = jacobian(f, &x, m, opts.fd_step);
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * rv;
        let diag: Vec<f64> = (0..n).map(|i| jtj[(i, i)].max(1e-12)).collect();
        // Coordinates pinned at a bound with the descent direction pointing outward stay fixed.
        let free: Vec<usize> =
            (0..n).filter(|&i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0))).collect();
        if free.is_empty() {
            converged = true;
            break;
        }
        let k = free.len();
        let jtj_f = DMatrix::from_fn(k, k, |a, b| jtj[(free[a], free[b])]);
        let g_f = DVector::from_fn(k, |a, _| g[free[a]]);

        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj_f.clone();
            for i in 0..k {
                a[(i, i)] += lambda * diag[free[i]];
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta_f = chol.solve(&(-&g_f));
            let mut x_new = x.clone();
            for (a, &i) in free.iter().enumerate() {
                x_new[i] += delta_f[a];
            }
            project(&mut x_new, lower, upper);
            let step = x_new.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if step < opts.xtol {
                converged = true;
                break;
            }
            let r_new = f(&x_new);
            let cost_new = sq_norm(&r_new);
            if cost_new < cost {
                let drop = cost - cost_new;
                x = x_new;
                r = r_new;
                cost = cost_new;
                history.push(cost);
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if drop <= opts.ftol * (cost + drop) {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if converged || !accepted {
            converged |= lambda >= 1e16 && g_f.amax() <= 1e-12;
            break;
        }
    }
    LmOutcome { x, cost, iterations, converged, history }
}
