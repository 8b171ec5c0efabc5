//! Graph Laplacians, eigenmaps, subspace comparison, perplexity and
//! clustering.

mod angles;
mod cluster;
mod eigen;
mod normalize;
mod perplexity;

use nalgebra::DMatrix;

pub use angles::{eigenmap_embed, mean_angle, orthonormalize, principal_angles};
pub use cluster::{kmeans, nmi, spectral_clustering, template_subspace, KMeansResult, Labels};
pub use eigen::{eigenpairs_smallest, lanczos_smallest, DENSE_EIGEN_LIMIT};
pub use normalize::{laplacian, symmetric_normalize, Affinity, SymmetricMatrix};
pub use perplexity::{
    mean_perplexity, perplexity, tune_epsilon_to_perplexity, PerplexityModel, TunedEpsilon,
};

/// Eigenpairs sorted by ascending eigenvalue. Column `k` of `eigenvectors`
/// belongs to `eigenvalues[k]`.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// The first `k` eigenvectors as an `n × k` basis.
    pub fn leading(&self, k: usize) -> DMatrix<f64> {
        self.eigenvectors.columns(0, k.min(self.len())).into_owned()
    }
}
