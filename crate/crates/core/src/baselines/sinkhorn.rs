//! Symmetric hollow Sinkhorn scaling in the log domain.
//!
//! The entropic plan has the form `W_ij = exp((v_i + v_j − C_ij)/ε)` off the
//! diagonal. The potential is updated by the symmetric fixed point
//!
//! ```text
//! v_i ← v_i − (ε/2) log Σ_{j≠i} exp((v_i + v_j − C_ij)/ε)
//! ```
//!
//! applied to all rows at once. If the row-sum violation stops decreasing,
//! the update is damped by one half.
//!
//! At small `ε` the fixed point contracts slowly, so after a fixed number of
//! sweeps the solver switches to damped Newton steps on the smooth convex
//! dual `Ψ(v) = (ε/2) Σ_{i≠j} W_ij(v) − Σ_i v_i`, whose gradient is the
//! row-sum residual. Each Newton step counts as one iteration.

use nalgebra::{DMatrix, DVector};

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::plan::DualPotential;

use super::DenseAffinity;

#[derive(Clone, Debug)]
pub struct SinkhornOutput {
    pub potential: DualPotential,
    pub affinity: DenseAffinity,
    pub iterations: usize,
    pub violation: f64,
}

pub fn sinkhorn_symmetric_hollow(
    c: &CostMatrix,
    epsilon: f64,
    tol: f64,
    max_iters: usize,
) -> Result<SinkhornOutput> {
    sinkhorn_warm(c, epsilon, tol, max_iters, None)
}

/// Same as [`sinkhorn_symmetric_hollow`], started from the potential `v0`.
pub fn sinkhorn_warm(
    c: &CostMatrix,
    epsilon: f64,
    tol: f64,
    max_iters: usize,
    v0: Option<&[f64]>,
) -> Result<SinkhornOutput> {
    let n = c.n();
    if n < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            found: n,
        });
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let mut v = match v0 {
        Some(v) if v.len() == n => v.to_vec(),
        Some(v) => {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            })
        }
        None => vec![0.0; n],
    };
    let mut log_rows = vec![0.0; n];
    let mut damping = 1.0;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    let mut iterations = 0;
    let violation = loop {
        log_row_sums(c, &v, epsilon, &mut log_rows);
        let viol = log_rows.iter().fold(0.0f64, |m, l| m.max(l.exp_m1().abs()));
        if !viol.is_finite() {
            return Err(Error::NonFinite("sinkhorn row sums"));
        }
        if viol <= tol {
            break viol;
        }
        if iterations >= max_iters {
            return Err(Error::SinkhornNotConverged {
                iterations,
                violation: viol,
            });
        }
        if viol < best {
            best = viol;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 10 && damping == 1.0 {
                damping = 0.5;
            }
        }
        if iterations >= FIXED_POINT_SWEEPS {
            newton_step(c, &mut v, epsilon, &log_rows)?;
        } else {
            for (vi, li) in v.iter_mut().zip(&log_rows) {
                *vi -= damping * 0.5 * epsilon * li;
            }
        }
        iterations += 1;
    };
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        let row = c.row(i);
        for j in 0..n {
            if i != j {
                entries[i * n + j] = ((v[i] + v[j] - row[j]) / epsilon).exp();
            }
        }
    }
    // exp is evaluated in the same order for (i, j) and (j, i), but enforce
    // exact symmetry anyway
    for i in 0..n {
        for j in (i + 1)..n {
            entries[j * n + i] = entries[i * n + j];
        }
    }
    Ok(SinkhornOutput {
        potential: DualPotential::new(v)?,
        affinity: DenseAffinity::from_parts_unchecked(n, entries, true),
        iterations,
        violation,
    })
}

const FIXED_POINT_SWEEPS: usize = 200;

fn dual_value(v: &[f64], log_rows: &[f64], epsilon: f64) -> f64 {
    let mass: f64 = log_rows.iter().map(|l| l.exp()).sum();
    0.5 * epsilon * mass - v.iter().sum::<f64>()
}

/// One Newton step with Armijo backtracking on the entropic dual. The
/// Hessian is `(diag(W1) + W)/ε`.
fn newton_step(c: &CostMatrix, v: &mut [f64], epsilon: f64, log_rows: &[f64]) -> Result<()> {
    let n = v.len();
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let row = c.row(i);
        for j in 0..n {
            if i != j {
                hess[(i, j)] = ((v[i] + v[j] - row[j]) / epsilon).exp() / epsilon;
            }
        }
        hess[(i, i)] = log_rows[i].exp() / epsilon;
    }
    let grad: Vec<f64> = log_rows.iter().map(|l| l.exp() - 1.0).collect();
    let viol0 = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let shift = 1e-12 * hess.diagonal().max();
    for i in 0..n {
        hess[(i, i)] += shift;
    }
    let step = match hess.clone().cholesky() {
        Some(ch) => ch.solve(&DVector::from_iterator(n, grad.iter().map(|g| -g))),
        None => hess
            .lu()
            .solve(&DVector::from_iterator(n, grad.iter().map(|g| -g)))
            .ok_or(Error::NonFinite("sinkhorn newton system"))?,
    };
    let slope: f64 = step.iter().zip(&grad).map(|(d, g)| d * g).sum();
    let phi0 = dual_value(v, log_rows, epsilon);
    let mut trial = vec![0.0; n];
    let mut trial_rows = vec![0.0; n];
    let mut t = 1.0;
    for _ in 0..60 {
        for k in 0..n {
            trial[k] = v[k] + t * step[k];
        }
        log_row_sums(c, &trial, epsilon, &mut trial_rows);
        let phi = dual_value(&trial, &trial_rows, epsilon);
        if phi.is_finite() {
            let armijo = phi <= phi0 + 1e-4 * t * slope;
            let flat = (phi - phi0).abs() <= 1e-12 * (1.0 + phi0.abs())
                && trial_rows
                    .iter()
                    .fold(0.0f64, |m, l| m.max(l.exp_m1().abs()))
                    < viol0;
            if armijo || flat {
                v.copy_from_slice(&trial);
                return Ok(());
            }
        }
        t *= 0.5;
    }
    // no acceptable step: leave v unchanged and let the caller's cap decide
    Ok(())
}

/// `log Σ_{j≠i} exp((v_i + v_j − C_ij)/ε)` for every row.
fn log_row_sums(c: &CostMatrix, v: &[f64], epsilon: f64, out: &mut [f64]) {
    let n = c.n();
    for i in 0..n {
        let row = c.row(i);
        let mut m = f64::NEG_INFINITY;
        for j in 0..n {
            if j != i {
                m = m.max(v[j] - row[j]);
            }
        }
        let mut s = 0.0;
        for j in 0..n {
            if j != i {
                s += ((v[j] - row[j] - m) / epsilon).exp();
            }
        }
        out[i] = (v[i] + m) / epsilon + s.ln();
    }
}
