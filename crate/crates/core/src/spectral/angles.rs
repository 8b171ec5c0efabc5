use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::EigenSystem;

/// Columns `1..=ℓ` of the eigenvector matrix, i.e. the eigenmap skipping the
/// trivial eigenvector.
pub fn eigenmap_embed(es: &EigenSystem, ell: usize) -> Result<DMatrix<f64>> {
    if ell == 0 || ell + 1 > es.len() {
        return Err(Error::invalid(format!(
            "embedding dimension {ell} needs {} eigenvectors, have {}",
            ell + 1,
            es.len()
        )));
    }
    Ok(es.eigenvectors.columns(1, ell).into_owned())
}

/// Orthonormal basis for the column span by modified Gram-Schmidt with one
/// reorthogonalisation pass. Fails if any column has norm below `1e-10`
/// after projection.
pub fn orthonormalize(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut q = v.clone();
    for c in 0..q.ncols() {
        for _ in 0..2 {
            for p in 0..c {
                let h = q.column(p).dot(&q.column(c));
                let qp = q.column(p).into_owned();
                q.column_mut(c).axpy(-h, &qp, 1.0);
            }
        }
        let nrm = q.column(c).norm();
        if nrm < 1e-10 {
            return Err(Error::RankDeficient);
        }
        q.column_mut(c).scale_mut(1.0 / nrm);
    }
    Ok(q)
}

/// Principal angles in radians, ascending, between the column spans of two
/// matrices with `n` rows. Spans of different dimension give
/// `min(ℓ₁, ℓ₂)` angles.
pub fn principal_angles(v1: &DMatrix<f64>, v2: &DMatrix<f64>) -> Result<Vec<f64>> {
    if v1.nrows() != v2.nrows() {
        return Err(Error::DimensionMismatch {
            expected: v1.nrows(),
            found: v2.nrows(),
        });
    }
    if v1.ncols() == 0 || v2.ncols() == 0 {
        return Ok(Vec::new());
    }
    let q1 = orthonormalize(v1)?;
    let q2 = orthonormalize(v2)?;
    let m = q1.transpose() * q2;
    let sv = m.singular_values();
    let mut angles: Vec<f64> = sv.iter().map(|s| s.clamp(0.0, 1.0).acos()).collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

/// Mean of the principal angles, the scalar summary used for comparisons.
pub fn mean_angle(v1: &DMatrix<f64>, v2: &DMatrix<f64>) -> Result<f64> {
    let a = principal_angles(v1, v2)?;
    Ok(a.iter().sum::<f64>() / a.len().max(1) as f64)
}
