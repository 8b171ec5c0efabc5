//! Comparison affinity constructions: symmetric hollow entropic transport,
//! alternating projections, and the classical kernels.

mod alternating;
mod kernels;
mod sinkhorn;

use crate::error::{Error, Result};
use crate::plan::SparsePlan;

pub use alternating::{
    affine_projection, alternating_projection_bistochastic, AlternatingProjection,
};
pub use kernels::{epanechnikov_kernel, gaussian_kernel, knn_affinity};
pub use sinkhorn::{sinkhorn_symmetric_hollow, sinkhorn_warm, SinkhornOutput};

/// Dense symmetric nonnegative affinity matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseAffinity {
    n: usize,
    entries: Vec<f64>,
    hollow: bool,
}

impl DenseAffinity {
    /// Checks symmetry (exactly), nonnegativity and, when `hollow`, a zero
    /// diagonal.
    pub fn new(n: usize, entries: Vec<f64>, hollow: bool) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: entries.len(),
            });
        }
        for i in 0..n {
            if hollow && entries[i * n + i] != 0.0 {
                return Err(Error::invalid(format!(
                    "diagonal entry {i} of a hollow affinity is nonzero"
                )));
            }
            for j in 0..n {
                let v = entries[i * n + j];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::invalid(format!(
                        "affinity entry ({i}, {j}) = {v} is not a nonnegative number"
                    )));
                }
                if v != entries[j * n + i] {
                    return Err(Error::invalid(format!(
                        "affinity not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n, entries, hollow })
    }

    pub(crate) fn from_parts_unchecked(n: usize, entries: Vec<f64>, hollow: bool) -> Self {
        Self { n, entries, hollow }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_hollow(&self) -> bool {
        self.hollow
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn max_row_violation(&self) -> f64 {
        self.row_sums()
            .iter()
            .fold(0.0, |m, s| m.max((s - 1.0).abs()))
    }

    /// Off-diagonal nonzeros as upper-triangle triplets. Diagonal entries, if
    /// any, are dropped.
    pub fn to_sparse(&self) -> SparsePlan {
        let n = self.n;
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.entries[i * n + j];
                if v > 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        SparsePlan::from_sorted_unchecked(n, triplets)
    }

    pub fn from_sparse(plan: &SparsePlan) -> Self {
        Self::from_parts_unchecked(plan.n(), plan.to_dense(), true)
    }

    pub fn frobenius_distance(&self, other: &DenseAffinity) -> f64 {
        assert_eq!(self.n, other.n);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}
