use super::split::split_exact;
use crate::matcore::Matrix;

/// A background/foreground pair with `background + foreground == input`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub background: Matrix,
    pub foreground: Matrix,
}

/// Per-pixel temporal minimum as background; the foreground is the remainder.
///
/// Each row of `d` is one pixel's time series. The foreground is non-negative
/// and vanishes at the frame(s) where the minimum is attained. Exact
/// additivity takes precedence over a constant background row: where no
/// foreground value adds back to the input exactly, that background entry
/// moves by at most half an ulp of the input value.
pub fn min_removal(d: &Matrix) -> Decomposition {
    let n = d.cols();
    let mut bg = Vec::with_capacity(d.len());
    for r in 0..d.rows() {
        let min = d.row(r).iter().copied().fold(f64::INFINITY, f64::min);
        bg.extend(std::iter::repeat_n(min, n));
    }
    let (background, foreground) = split_exact(d, &Matrix::from_raw(d.rows(), n, bg));
    Decomposition {
        background,
        foreground,
    }
}
