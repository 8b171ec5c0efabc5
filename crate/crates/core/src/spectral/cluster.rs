use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{eigenpairs_smallest, SymmetricMatrix};

/// Cluster assignment per point; labels are `0..k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels(pub Vec<usize>);

impl Labels {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// One more than the largest label.
    pub fn cluster_count(&self) -> usize {
        self.0.iter().max().map_or(0, |m| m + 1)
    }
}

#[derive(Clone, Debug)]
pub struct KMeansResult {
    pub labels: Labels,
    pub centroids: DMatrix<f64>,
    pub inertia: f64,
}

const MAX_LLOYD_ITERS: usize = 1000;

/// Lloyd's algorithm from `restarts` k-means++ seeds; the lowest-inertia run
/// wins, ties going to the earliest restart. Rows of `x` are points.
pub fn kmeans(x: &DMatrix<f64>, k: usize, seed: u64, restarts: usize) -> Result<KMeansResult> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 ≤ k ≤ n = {n}, got k = {k}")));
    }
    let restarts = restarts.max(1);
    let runs: Vec<KMeansResult> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            lloyd(x, k, &mut rng)
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("at least one restart");
    Ok(best)
}

fn sq_dist(x: &DMatrix<f64>, i: usize, c: &DMatrix<f64>, j: usize) -> f64 {
    (0..x.ncols())
        .map(|d| (x[(i, d)] - c[(j, d)]).powi(2))
        .sum()
}

fn plus_plus(x: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = x.nrows();
    let mut centroids = DMatrix::zeros(k, x.ncols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from(&x.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x, i, &centroids, 0)).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from(&x.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x, i, &centroids, c));
        }
    }
    centroids
}

fn lloyd(x: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> KMeansResult {
    let n = x.nrows();
    let dim = x.ncols();
    let mut centroids = plus_plus(x, k, rng);
    let mut labels = vec![0usize; n];
    let mut dist = vec![0.0; n];
    let mut prev = f64::INFINITY;
    let mut inertia = f64::INFINITY;
    for _ in 0..MAX_LLOYD_ITERS {
        for i in 0..n {
            let (mut best, mut bd) = (0, f64::INFINITY);
            for j in 0..k {
                let d = sq_dist(x, i, &centroids, j);
                if d < bd {
                    best = j;
                    bd = d;
                }
            }
            labels[i] = best;
            dist[i] = bd;
        }
        inertia = dist.iter().sum();
        if (prev - inertia).abs() <= 1e-8 * prev.max(f64::MIN_POSITIVE) || inertia == 0.0 {
            break;
        }
        prev = inertia;
        let mut sums = DMatrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            let mut row = sums.row_mut(labels[i]);
            row += x.row(i);
        }
        for j in 0..k {
            if counts[j] > 0 {
                let row = sums.row(j) / counts[j] as f64;
                centroids.row_mut(j).copy_from(&row);
            } else {
                // reseed from the point farthest from its current centroid
                let far = (0..n)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]))
                    .expect("n ≥ 1");
                centroids.row_mut(j).copy_from(&x.row(far));
                dist[far] = 0.0;
            }
        }
    }
    KMeansResult {
        labels: Labels(labels),
        centroids,
        inertia,
    }
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|c| *c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information over the arithmetic mean of the two entropies. Two
/// constant labelings score 1; exactly one constant labeling scores 0.
pub fn nmi(a: &Labels, b: &Labels) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let n = a.len();
    if n == 0 {
        return Ok(1.0);
    }
    let (ka, kb) = (a.cluster_count(), b.cluster_count());
    let mut joint = vec![0usize; ka * kb];
    let mut ca = vec![0usize; ka];
    let mut cb = vec![0usize; kb];
    for (&x, &y) in a.0.iter().zip(&b.0) {
        joint[x * kb + y] += 1;
        ca[x] += 1;
        cb[y] += 1;
    }
    let nf = n as f64;
    let ha = entropy(ca.iter().copied(), nf);
    let hb = entropy(cb.iter().copied(), nf);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let c = joint[x * kb + y];
            if c > 0 {
                let pxy = c as f64 / nf;
                mi += pxy * (pxy * nf * nf / (ca[x] as f64 * cb[y] as f64)).ln();
            }
        }
    }
    Ok((mi / (0.5 * (ha + hb))).clamp(0.0, 1.0))
}

/// Orthonormal indicator basis: column `j` is `1{y_i = j} / √|cluster j|`.
pub fn template_subspace(truth: &Labels, k: usize) -> Result<DMatrix<f64>> {
    let n = truth.len();
    let mut sizes = vec![0usize; k];
    for &y in truth.as_slice() {
        if y >= k {
            return Err(Error::invalid(format!(
                "label {y} out of range for k = {k}"
            )));
        }
        sizes[y] += 1;
    }
    if let Some(j) = sizes.iter().position(|s| *s == 0) {
        return Err(Error::EmptyCluster(j));
    }
    let mut u = DMatrix::zeros(n, k);
    for (i, &y) in truth.as_slice().iter().enumerate() {
        u[(i, y)] = 1.0 / (sizes[y] as f64).sqrt();
    }
    Ok(u)
}

/// k-means on eigenvectors `2..=k+1` of the Laplacian (the `k` leading
/// nontrivial ones), rows optionally scaled to unit length.
pub fn spectral_clustering(
    l: &SymmetricMatrix,
    k: usize,
    seed: u64,
    restarts: usize,
    normalize_rows: bool,
) -> Result<KMeansResult> {
    let n = l.n();
    if k == 0 || k + 1 > n {
        return Err(Error::invalid(format!("need 1 ≤ k < n = {n}, got k = {k}")));
    }
    let es = eigenpairs_smallest(l, k + 1)?;
    let mut x = es.eigenvectors.columns(1, k).into_owned();
    if normalize_rows {
        for mut row in x.row_iter_mut() {
            let nrm = row.norm();
            if nrm > 0.0 {
                row /= nrm;
            }
        }
    }
    kmeans(&x, k, seed, restarts)
}
