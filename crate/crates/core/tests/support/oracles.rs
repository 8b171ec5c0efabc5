//! Reference solvers that share no code with the library.

use bistochastic::CostMatrix;
use nalgebra::DMatrix;

/// Hollow quadratically regularised plan as the Euclidean projection of
/// `−C/ε` onto `{A symmetric, hollow, A ≥ 0, A1 = 1}` by Dykstra's
/// alternating projections between the affine constraints and the
/// nonnegative cone. Works on the `n(n−1)/2` upper-triangle entries, where
/// the Frobenius norm is a uniform multiple of the Euclidean one. Returns the
/// dense `n × n` plan.
pub fn qp_plan(c: &CostMatrix, eps: f64) -> Vec<f64> {
    let n = c.n();
    assert!(n >= 3, "the affine set is a single point below n = 3");
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let m = pairs.len();
    let mut x: Vec<f64> = pairs.iter().map(|&(i, j)| -c.get(i, j) / eps).collect();
    let mut p = vec![0.0; m];
    let mut q = vec![0.0; m];
    let mut y = vec![0.0; m];
    let mut rows = vec![0.0; n];
    // (BBᵀ)⁻¹ = (I − J/(2n−2)) / (n−2) for the pair-row incidence matrix B
    let affine = |z: &[f64], out: &mut [f64], rows: &mut [f64]| {
        rows.iter_mut().for_each(|r| *r = -1.0);
        for (k, &(i, j)) in pairs.iter().enumerate() {
            rows[i] += z[k];
            rows[j] += z[k];
        }
        let total: f64 = rows.iter().sum();
        let lam: Vec<f64> = rows
            .iter()
            .map(|r| (r - total / (2.0 * n as f64 - 2.0)) / (n as f64 - 2.0))
            .collect();
        for (k, &(i, j)) in pairs.iter().enumerate() {
            out[k] = z[k] - lam[i] - lam[j];
        }
    };
    let mut tmp = vec![0.0; m];
    for _ in 0..5_000_000 {
        for k in 0..m {
            tmp[k] = x[k] + p[k];
        }
        affine(&tmp, &mut y, &mut rows);
        let mut change = 0.0f64;
        let mut gap = 0.0f64;
        for k in 0..m {
            p[k] = tmp[k] - y[k];
            let z = y[k] + q[k];
            let xn = z.max(0.0);
            q[k] = z - xn;
            change = change.max((xn - x[k]).abs());
            gap = gap.max((xn - y[k]).abs());
            x[k] = xn;
        }
        if change < 1e-13 && gap < 1e-11 {
            break;
        }
    }
    let mut dense = vec![0.0; n * n];
    for (k, &(i, j)) in pairs.iter().enumerate() {
        dense[i * n + j] = x[k];
        dense[j * n + i] = x[k];
    }
    dense
}

/// Entropic hollow plan by plain multiplicative symmetric scaling
/// `d ← sqrt(d / (K d))` of the kernel `K = exp(−C/ε)` with zero diagonal.
/// Only usable where `exp(−C/ε)` does not underflow.
pub fn scaling_plan(c: &CostMatrix, eps: f64) -> Vec<f64> {
    let n = c.n();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                k[i * n + j] = (-c.get(i, j) / eps).exp();
            }
        }
    }
    let mut d = vec![1.0; n];
    for _ in 0..1_000_000 {
        let kd: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| k[i * n + j] * d[j]).sum())
            .collect();
        let next: Vec<f64> = (0..n).map(|i| (d[i] / kd[i]).sqrt()).collect();
        let change = next
            .iter()
            .zip(&d)
            .map(|(a, b)| (a / b - 1.0).abs())
            .fold(0.0, f64::max);
        d = next;
        if change < 1e-15 {
            break;
        }
    }
    (0..n * n).map(|ij| d[ij / n] * k[ij] * d[ij % n]).collect()
}

/// Eigenvalues (ascending) and matching eigenvectors of a symmetric matrix
/// by cyclic Jacobi rotations.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() < 1e-15 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = cs * akp - sn * akq;
                    a[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = cs * apk - sn * aqk;
                    a[(q, k)] = sn * apk + cs * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = cs * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m = a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
            .unwrap();
        m.swap_rows(col, piv);
        x.swap(col, piv);
        for r in (col + 1)..n {
            let f = m[(r, col)] / m[(col, col)];
            for k in col..n {
                m[(r, k)] -= f * m[(col, k)];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let s: f64 = ((col + 1)..n).map(|k| m[(col, k)] * x[k]).sum();
        x[col] = (x[col] - s) / m[(col, col)];
    }
    x
}
