use crate::error::{Error, Result};

use super::DenseAffinity;

#[derive(Clone, Debug)]
pub struct AlternatingProjection {
    pub affinity: DenseAffinity,
    /// `‖A1 − 1‖₂` after each iteration.
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Orthogonal projection onto `{A symmetric : A1 = 1}`:
/// `A + (r1ᵀ + 1rᵀ)/n − (1ᵀr/n²) 11ᵀ` with `r = 1 − A1`.
pub fn affine_projection(n: usize, a: &[f64]) -> Vec<f64> {
    let mut out = a.to_vec();
    project_affine_in_place(n, &mut out);
    out
}

fn project_affine_in_place(n: usize, a: &mut [f64]) {
    let nf = n as f64;
    let r: Vec<f64> = (0..n)
        .map(|i| 1.0 - a[i * n..(i + 1) * n].iter().sum::<f64>())
        .collect();
    let total: f64 = r.iter().sum::<f64>() / (nf * nf);
    for i in 0..n {
        let row = &mut a[i * n..(i + 1) * n];
        for (j, x) in row.iter_mut().enumerate() {
            *x += (r[i] + r[j]) / nf - total;
        }
    }
}

fn l2_violation(n: usize, a: &[f64]) -> f64 {
    (0..n)
        .map(|i| {
            let s: f64 = a[i * n..(i + 1) * n].iter().sum();
            (s - 1.0) * (s - 1.0)
        })
        .sum::<f64>()
        .sqrt()
}

/// Alternates the affine projection above with clamping to the nonnegative
/// cone, starting from `M`, until `‖A1 − 1‖₂ ≤ tol` or `max_iters`. The
/// result is bistochastic but not hollow, and in general it is a feasible
/// point rather than the Frobenius projection of `M`.
pub fn alternating_projection_bistochastic(
    n: usize,
    m: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<AlternatingProjection> {
    if m.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: m.len(),
        });
    }
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[i * n + j] - m[j * n + i]).abs() > 1e-12 * scale {
                return Err(Error::invalid(format!(
                    "matrix not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let mut a = m.to_vec();
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..max_iters {
        project_affine_in_place(n, &mut a);
        for x in a.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let viol = l2_violation(n, &a);
        history.push(viol);
        if viol <= tol {
            converged = true;
            break;
        }
    }
    // the affine step is symmetric up to rounding; average it away
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = s;
            a[j * n + i] = s;
        }
    }
    Ok(AlternatingProjection {
        affinity: DenseAffinity::from_parts_unchecked(n, a, false),
        history,
        converged,
    })
}
