use crate::error::{Error, Result};
use crate::matcore::{svd, Matrix};

/// `sign(x) * max(|x| - eps, 0)`.
#[inline]
pub fn soft_threshold_scalar(x: f64, eps: f64) -> f64 {
    if x > eps {
        x - eps
    } else if x < -eps {
        x + eps
    } else {
        0.0
    }
}

/// Elementwise shrinkage; the proximal map of `eps * ||.||_1`.
pub fn soft_threshold(x: &Matrix, eps: f64) -> Result<Matrix> {
    check_threshold(eps, "eps")?;
    Ok(x.map(|v| soft_threshold_scalar(v, eps)))
}

/// Shrinks the singular values of `a` by `tau`; the proximal map of
/// `tau * ||.||_*`.
pub fn singular_value_threshold(a: &Matrix, tau: f64) -> Result<Matrix> {
    check_threshold(tau, "tau")?;
    Ok(svd(a)?.reconstruct_with(|_, s| soft_threshold_scalar(s, tau)))
}

fn check_threshold(t: f64, name: &str) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid(format!("{name} must be a finite non-negative number, got {t}")));
    }
    Ok(())
}
