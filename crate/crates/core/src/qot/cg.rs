//! Conjugate gradients for the generalised Newton system
//! `(σ + diag(σ1) + δI) Δu = rhs`.

use crate::error::{Error, Result};
use crate::plan::SupportMask;

#[derive(Clone, Debug, PartialEq)]
pub struct CgSolution {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// `‖A x − b‖₂ / ‖b‖₂` at the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Solves the Newton system on the active pattern `sigma` with Jacobi
/// preconditioned conjugate gradients.
///
/// The matrix is symmetric positive definite for every pattern, since it is
/// diagonally dominant with a `δ` shift. If `cg_max_iters` runs out before
/// the relative residual reaches `cg_tol`, the best iterate is returned with
/// `converged == false`.
pub fn newton_system_solve(
    sigma: &SupportMask,
    rhs: &[f64],
    delta: f64,
    cg_tol: f64,
    cg_max_iters: usize,
) -> Result<CgSolution> {
    if rhs.len() != sigma.n() {
        return Err(Error::DimensionMismatch {
            expected: sigma.n(),
            found: rhs.len(),
        });
    }
    if !(delta > 0.0) {
        return Err(Error::invalid(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("newton right-hand side"));
    }
    Ok(solve(sigma, rhs, delta, cg_tol, cg_max_iters))
}

pub(crate) fn apply(sigma: &SupportMask, delta: f64, x: &[f64], y: &mut [f64]) {
    for i in 0..sigma.n() {
        let nb = sigma.neighbors(i);
        let mut acc = (nb.len() as f64 + delta) * x[i];
        for &j in nb {
            acc += x[j];
        }
        y[i] = acc;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn solve(
    sigma: &SupportMask,
    rhs: &[f64],
    delta: f64,
    cg_tol: f64,
    max_iters: usize,
) -> CgSolution {
    let n = rhs.len();
    let b_norm = dot(rhs, rhs).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return CgSolution {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let inv_diag: Vec<f64> = (0..n)
        .map(|i| 1.0 / (sigma.degree(i) as f64 + delta))
        .collect();
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let target = cg_tol * b_norm;
    let mut iterations = 0;
    while iterations < max_iters {
        apply(sigma, delta, &p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        iterations += 1;
        let res_norm = dot(&r, &r).sqrt();
        if res_norm <= target {
            break;
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    // recompute the true residual; the recurrence drifts on long runs
    apply(sigma, delta, &x, &mut ap);
    let true_res = ap
        .iter()
        .zip(rhs)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let relative_residual = true_res / b_norm;
    CgSolution {
        solution: x,
        iterations,
        relative_residual,
        converged: relative_residual <= cg_tol,
    }
}
