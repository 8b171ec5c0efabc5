use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{EigenSystem, SymmetricMatrix};

/// Above this size a sparse operator is handled by restarted Lanczos instead
/// of a dense decomposition.
pub const DENSE_EIGEN_LIMIT: usize = 2000;

const RESIDUAL_TOL: f64 = 1e-8;

/// The `k` smallest eigenpairs of a symmetric matrix, ascending, with unit
/// eigenvectors. Every returned pair satisfies `‖Lv − λv‖₂ ≤ 1e-8`.
pub fn eigenpairs_smallest(l: &SymmetricMatrix, k: usize) -> Result<EigenSystem> {
    let n = l.n();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 ≤ k ≤ n = {n}, got k = {k}")));
    }
    let out = match l {
        SymmetricMatrix::Sparse { .. } if n > DENSE_EIGEN_LIMIT => {
            lanczos_smallest(|x, y| l.apply(x, y), n, k, RESIDUAL_TOL, 0x5eed)?
        }
        _ => dense_smallest(&l.to_dense(), k),
    };
    let worst = max_residual(l, &out);
    if worst > RESIDUAL_TOL {
        return Err(Error::EigenNotConverged { residual: worst });
    }
    Ok(out)
}

fn dense_smallest(m: &DMatrix<f64>, k: usize) -> EigenSystem {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(k);
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(m.nrows(), k, |r, c| eig.eigenvectors[(r, order[c])]);
    EigenSystem {
        eigenvalues,
        eigenvectors,
    }
}

fn max_residual(l: &SymmetricMatrix, es: &EigenSystem) -> f64 {
    let n = l.n();
    let mut y = vec![0.0; n];
    let mut worst = 0.0f64;
    for (c, lambda) in es.eigenvalues.iter().enumerate() {
        let v: Vec<f64> = es.eigenvectors.column(c).iter().copied().collect();
        l.apply(&v, &mut y);
        let r = y
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    worst
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two passes of classical Gram-Schmidt against every vector of every set.
/// Both sets are swept inside each pass: cleaning them one after the other
/// lets rounding errors in one set leak back through the other.
fn orthogonalize(v: &mut [f64], sets: &[&[Vec<f64>]]) {
    for _ in 0..2 {
        for q in sets.iter().flat_map(|s| s.iter()) {
            let h = dot(v, q);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= h * y;
            }
        }
    }
}

/// Smallest `k` eigenpairs of the symmetric operator `apply` by
/// thick-restarted Lanczos with full reorthogonalisation. After the `k`
/// pairs converge, a deflated probe from a fresh random vector looks for
/// eigenvalues the Krylov space missed (e.g. extra copies of a repeated
/// eigenvalue) and merges any it finds.
pub fn lanczos_smallest(
    apply: impl Fn(&[f64], &mut [f64]),
    n: usize,
    k: usize,
    tol: f64,
    seed: u64,
) -> Result<EigenSystem> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 ≤ k ≤ n = {n}, got k = {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut vals, mut vecs) = thick_restart(&apply, n, k, tol, &[], &mut rng)?;
    for _ in 0..k {
        if vals.len() >= n {
            break;
        }
        let (pv, px) = thick_restart(&apply, n, 1, tol, &vecs, &mut rng)?;
        let mut sorted = vals.clone();
        sorted.sort_by(f64::total_cmp);
        let kth = sorted[k.min(sorted.len()) - 1];
        match pv.first() {
            Some(&t) if t < kth - tol => {
                vals.extend(pv);
                vecs.extend(px);
            }
            _ => break,
        }
    }
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    order.truncate(k);
    Ok(EigenSystem {
        eigenvalues: order.iter().map(|&i| vals[i]).collect(),
        eigenvectors: DMatrix::from_fn(n, k, |r, c| vecs[order[c]][r]),
    })
}

/// Krylov–Schur style restarts: the basis is kept explicitly together with
/// its image, Rayleigh–Ritz is done on the projected matrix, and each restart
/// keeps the best Ritz vectors plus the next Krylov direction.
fn thick_restart(
    apply: &impl Fn(&[f64], &mut [f64]),
    n: usize,
    k: usize,
    tol: f64,
    deflate: &[Vec<f64>],
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let room = n - deflate.len();
    let k = k.min(room);
    if k == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let m = room.min((2 * k + 30).max(50));
    let keep = (k + 10).min(m.saturating_sub(1)).max(k);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut image: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut next: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut worst = f64::INFINITY;
    for _ in 0..2000 {
        // expand to m vectors
        while basis.len() < m {
            orthogonalize(&mut next, &[deflate, &basis]);
            let mut s = norm(&next);
            if s < 1e-10 {
                // invariant subspace: continue from a random direction
                next = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
                orthogonalize(&mut next, &[deflate, &basis]);
                s = norm(&next);
                if s < 1e-10 {
                    break;
                }
            }
            let q: Vec<f64> = next.iter().map(|x| x / s).collect();
            let mut aq = vec![0.0; n];
            apply(&q, &mut aq);
            next = aq.clone();
            basis.push(q);
            image.push(aq);
        }
        let dim = basis.len();
        let h = DMatrix::from_fn(dim, dim, |r, c| {
            0.5 * (dot(&basis[r], &image[c]) + dot(&basis[c], &image[r]))
        });
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let combine = |src: &[Vec<f64>], idx: usize| -> Vec<f64> {
            let mut v = vec![0.0; n];
            for (j, sj) in src.iter().enumerate() {
                let c = eig.eigenvectors[(j, idx)];
                for (x, y) in v.iter_mut().zip(sj) {
                    *x += c * y;
                }
            }
            v
        };
        let kept = keep.min(dim);
        let mut new_basis = Vec::with_capacity(kept);
        let mut new_image = Vec::with_capacity(kept);
        let mut converged = true;
        worst = 0.0;
        for (rank, &idx) in order.iter().take(kept).enumerate() {
            let y = combine(&basis, idx);
            let ay = combine(&image, idx);
            if rank < k {
                let theta = eig.eigenvalues[idx];
                let r = ay
                    .iter()
                    .zip(&y)
                    .map(|(a, b)| (a - theta * b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(r);
                if r > 0.5 * tol {
                    converged = false;
                }
            }
            new_basis.push(y);
            new_image.push(ay);
        }
        if converged || dim == room {
            let mut vals = Vec::with_capacity(k);
            let mut vecs = Vec::with_capacity(k);
            for (rank, &idx) in order.iter().take(k).enumerate() {
                vals.push(eig.eigenvalues[idx]);
                vecs.push(new_basis[rank].clone());
            }
            return Ok((vals, vecs));
        }
        // `next` holds A q_last; projecting out the old basis gives the
        // Krylov continuation direction
        orthogonalize(&mut next, &[&basis]);
        basis = new_basis;
        image = new_image;
    }
    Err(Error::EigenNotConverged { residual: worst })
}
