use super::{svd, Matrix};
use crate::error::Result;

/// `sqrt(sum a_ij^2)`, accumulated with scaling so large entries cannot overflow.
pub fn frobenius_norm(a: &Matrix) -> f64 {
    let scale = a.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let sum: f64 = a.as_slice().iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * sum.sqrt()
}

/// Entrywise l1 norm: sum of absolute values.
pub fn l1_norm(a: &Matrix) -> f64 {
    a.as_slice().iter().map(|x| x.abs()).sum()
}

/// Sum of singular values.
pub fn nuclear_norm(a: &Matrix) -> Result<f64> {
    Ok(svd(a)?.sigma.iter().sum())
}

/// Largest singular value.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    Ok(svd(a)?.sigma[0])
}
