use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::qot::knn_support;

use super::DenseAffinity;

/// `exp(−C_ij / ε)`, with a unit diagonal unless `hollow`.
pub fn gaussian_kernel(c: &CostMatrix, epsilon: f64, hollow: bool) -> Result<DenseAffinity> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let n = c.n();
    let mut entries: Vec<f64> = c.as_slice().iter().map(|x| (-x / epsilon).exp()).collect();
    if hollow {
        for i in 0..n {
            entries[i * n + i] = 0.0;
        }
    }
    Ok(DenseAffinity::from_parts_unchecked(n, entries, hollow))
}

/// `[1 − ‖x_i − x_j‖² / h²]_+` off the diagonal. Needs a cost built without
/// the `1/2` prefactor.
pub fn epanechnikov_kernel(c: &CostMatrix, h: f64) -> Result<DenseAffinity> {
    if !(h > 0.0) {
        return Err(Error::invalid(format!(
            "bandwidth must be positive, got {h}"
        )));
    }
    if c.half_factor() {
        return Err(Error::invalid(
            "epanechnikov kernel expects plain squared distances (half_factor = false)",
        ));
    }
    let n = c.n();
    let h2 = h * h;
    let mut entries: Vec<f64> = c
        .as_slice()
        .iter()
        .map(|x| (1.0 - x / h2).max(0.0))
        .collect();
    for i in 0..n {
        entries[i * n + i] = 0.0;
    }
    Ok(DenseAffinity::from_parts_unchecked(n, entries, true))
}

/// Unit-weight symmetrised k-nearest-neighbour graph (union rule).
pub fn knn_affinity(c: &CostMatrix, k: usize) -> Result<DenseAffinity> {
    let mask = knn_support(c, k)?;
    let n = c.n();
    let mut entries = vec![0.0; n * n];
    for (i, j) in mask.edges() {
        entries[i * n + j] = 1.0;
        entries[j * n + i] = 1.0;
    }
    Ok(DenseAffinity::from_parts_unchecked(n, entries, true))
}
