//! Pairwise cost matrices.
//!
//! A [`CostMatrix`] is a dense, symmetric, hollow matrix of squared
//! Euclidean distances. Storage is row-major and `O(n^2)`, which is the
//! intended operating range (a few thousand to a few tens of thousands of
//! points).

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<f64>,
    half_factor: bool,
}

impl CostMatrix {
    /// Builds a cost matrix from a row-major buffer, checking symmetry,
    /// hollowness and nonnegativity. Symmetry is checked exactly.
    pub fn from_dense(n: usize, entries: Vec<f64>, half_factor: bool) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: entries.len(),
            });
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::invalid(format!("diagonal entry {i} is nonzero")));
            }
            for j in 0..n {
                let v = entries[i * n + j];
                if !v.is_finite() {
                    return Err(Error::NonFinite("cost matrix"));
                }
                if v < 0.0 {
                    return Err(Error::NegativeCost { i, j, value: v });
                }
                if v != entries[j * n + i] {
                    return Err(Error::invalid(format!(
                        "cost matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            n,
            entries,
            half_factor,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], half_factor: bool) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::from_dense(n, entries, half_factor)
    }

    pub(crate) fn from_parts_unchecked(n: usize, entries: Vec<f64>, half_factor: bool) -> Self {
        debug_assert_eq!(entries.len(), n * n);
        Self {
            n,
            entries,
            half_factor,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_factor(&self) -> bool {
        self.half_factor
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Row-major view of all entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    /// Returns a copy with every entry divided by `scale`.
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!(
                "scale must be positive, got {scale}"
            )));
        }
        Ok(Self {
            n: self.n,
            entries: self.entries.iter().map(|c| c / scale).collect(),
            half_factor: self.half_factor,
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Squared Euclidean distances between all pairs of points, optionally with
/// the `1/2` prefactor.
pub fn pairwise_cost(points: &[Vec<f64>], half_factor: bool) -> Result<CostMatrix> {
    let n = points.len();
    if n == 0 {
        return Err(Error::TooFewPoints {
            required: 1,
            found: 0,
        });
    }
    let p = points[0].len();
    for pt in points {
        if pt.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: pt.len(),
            });
        }
        if pt.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("points"));
        }
    }
    let factor = if half_factor { 0.5 } else { 1.0 };
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let c = factor * d2;
            entries[i * n + j] = c;
            entries[j * n + i] = c;
        }
    }
    Ok(CostMatrix::from_parts_unchecked(n, entries, half_factor))
}

/// `N^{-2} Σ_ij C_ij`, diagonal zeros included.
pub fn mean_offdiag(c: &CostMatrix) -> f64 {
    let n = c.n as f64;
    c.entries.iter().sum::<f64>() / (n * n)
}

/// Rescales `c` so that its mean over all `N^2` entries is one. Returns the
/// rescaled matrix and the divisor that was applied.
pub fn normalize_mean(c: &CostMatrix) -> Result<(CostMatrix, f64)> {
    let scale = mean_offdiag(c);
    if scale <= 0.0 {
        return Err(Error::ZeroCost);
    }
    Ok((c.scaled(scale)?, scale))
}

/// Adds `eta_i + eta_j` to every off-diagonal entry. The diagonal stays zero.
pub fn rank_one_shift(c: &CostMatrix, eta: &[f64]) -> Result<CostMatrix> {
    let n = c.n;
    if eta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: eta.len(),
        });
    }
    if eta.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("shift vector"));
    }
    let mut entries = c.entries.clone();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = c.get(i, j) + eta[i] + eta[j];
            if v < 0.0 {
                return Err(Error::NegativeCost { i, j, value: v });
            }
            entries[i * n + j] = v;
        }
    }
    Ok(CostMatrix::from_parts_unchecked(n, entries, c.half_factor))
}
