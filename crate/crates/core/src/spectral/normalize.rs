use nalgebra::DMatrix;

use crate::baselines::DenseAffinity;
use crate::error::{Error, Result};
use crate::plan::SparsePlan;

/// Symmetric nonnegative affinity, dense or sparse.
pub trait Affinity: Sized {
    fn n(&self) -> usize;
    fn row_sums(&self) -> Vec<f64>;
    /// `W_ij s_i s_j`
    fn rescaled(&self, s: &[f64]) -> Self;
    /// Positive values of every row.
    fn row_values(&self) -> Vec<Vec<f64>>;
    /// `I − W` in matching storage.
    fn identity_minus(&self) -> SymmetricMatrix;
}

impl Affinity for DenseAffinity {
    fn n(&self) -> usize {
        DenseAffinity::n(self)
    }

    fn row_sums(&self) -> Vec<f64> {
        DenseAffinity::row_sums(self)
    }

    fn rescaled(&self, s: &[f64]) -> Self {
        let n = self.n();
        let mut entries = self.as_slice().to_vec();
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] *= s[i] * s[j];
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                entries[j * n + i] = entries[i * n + j];
            }
        }
        DenseAffinity::from_parts_unchecked(n, entries, self.is_hollow())
    }

    fn row_values(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| self.row(i).iter().copied().filter(|v| *v > 0.0).collect())
            .collect()
    }

    fn identity_minus(&self) -> SymmetricMatrix {
        let n = self.n();
        SymmetricMatrix::Dense(DMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - self.get(i, j)
        }))
    }
}

impl Affinity for SparsePlan {
    fn n(&self) -> usize {
        SparsePlan::n(self)
    }

    fn row_sums(&self) -> Vec<f64> {
        SparsePlan::row_sums(self)
    }

    fn rescaled(&self, s: &[f64]) -> Self {
        self.map_values(|i, j, v| v * s[i] * s[j])
    }

    fn row_values(&self) -> Vec<Vec<f64>> {
        self.adjacency()
            .into_iter()
            .map(|row| row.into_iter().map(|(_, v)| v).collect())
            .collect()
    }

    fn identity_minus(&self) -> SymmetricMatrix {
        let adj = self
            .adjacency()
            .into_iter()
            .map(|row| row.into_iter().map(|(j, v)| (j, -v)).collect())
            .collect();
        SymmetricMatrix::Sparse {
            diag: vec![1.0; self.n()],
            offdiag: adj,
        }
    }
}

/// Symmetric matrix in dense or adjacency-list form.
#[derive(Clone, Debug)]
pub enum SymmetricMatrix {
    Dense(DMatrix<f64>),
    Sparse {
        diag: Vec<f64>,
        /// Off-diagonal entries per row, both directions stored.
        offdiag: Vec<Vec<(usize, f64)>>,
    },
}

impl SymmetricMatrix {
    pub fn n(&self) -> usize {
        match self {
            SymmetricMatrix::Dense(m) => m.nrows(),
            SymmetricMatrix::Sparse { diag, .. } => diag.len(),
        }
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            SymmetricMatrix::Dense(m) => {
                let n = m.nrows();
                for (i, yi) in y.iter_mut().enumerate().take(n) {
                    *yi = (0..n).map(|j| m[(i, j)] * x[j]).sum();
                }
            }
            SymmetricMatrix::Sparse { diag, offdiag } => {
                for i in 0..diag.len() {
                    let mut acc = diag[i] * x[i];
                    for &(j, v) in &offdiag[i] {
                        acc += v * x[j];
                    }
                    y[i] = acc;
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            SymmetricMatrix::Dense(m) => m.clone(),
            SymmetricMatrix::Sparse { diag, offdiag } => {
                let n = diag.len();
                let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()));
                for (i, row) in offdiag.iter().enumerate() {
                    for &(j, v) in row {
                        m[(i, j)] = v;
                    }
                }
                debug_assert_eq!(m.nrows(), n);
                m
            }
        }
    }
}

/// `D^{-1/2} W D^{-1/2}` with `D = diag(W1)`.
pub fn symmetric_normalize<A: Affinity>(w: &A) -> Result<A> {
    let sums = w.row_sums();
    let mut scale = Vec::with_capacity(sums.len());
    for (row, d) in sums.iter().enumerate() {
        if !(*d > 0.0) {
            return Err(Error::ZeroRow { row });
        }
        scale.push(1.0 / d.sqrt());
    }
    Ok(w.rescaled(&scale))
}

/// `I − W̄`
pub fn laplacian<A: Affinity>(wbar: &A) -> SymmetricMatrix {
    wbar.identity_minus()
}
