//! Thin singular value decomposition.
//!
//! For an `m x n` input with `m >= n` (wider inputs are transposed first):
//!
//! 1. Householder QR, `A = Q R`, with `R` upper triangular `n x n`. The
//!    reflectors are applied column by column, so this is the step that scales
//!    with `m` and the one that runs in parallel.
//! 2. One-sided (Hestenes) Jacobi on `R`: plane rotations `V` are accumulated
//!    until the columns of `R V` are mutually orthogonal; their norms are the
//!    singular values.
//! 3. `U = Q * (R V / sigma)`, formed by applying the stored reflectors in
//!    reverse to the small left factor.
//!
//! Jacobi delivers singular vectors accurate to working precision relative to
//! each singular value, which a Gram-matrix eigen-solve would not.

use super::Matrix;
use crate::error::{Error, Result};
use crate::par;

const MAX_SWEEPS: usize = 100;
/// Singular values below this fraction of the largest are reported as zero.
const RELATIVE_ZERO: f64 = 1e-12;

/// `a = u * diag(sigma) * v^T` with `u: m x r`, `v: n x r`, `r = min(m, n)`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    /// Non-negative and sorted in descending order.
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    /// Number of strictly positive singular values.
    pub fn rank(&self) -> usize {
        self.sigma.iter().take_while(|&&s| s > 0.0).count()
    }

    /// `sum_i f(sigma_i) u_i v_i^T`, skipping terms where `f` returns zero.
    pub fn reconstruct_with(&self, f: impl Fn(usize, f64) -> f64) -> Matrix {
        let weights: Vec<(usize, f64)> = self
            .sigma
            .iter()
            .enumerate()
            .map(|(i, &s)| (i, f(i, s)))
            .filter(|&(_, w)| w != 0.0)
            .collect();
        let (m, n, r) = (self.u.rows(), self.v.rows(), self.sigma.len());
        let mut out = vec![0.0; m * n];
        // v^T rows of the retained components, scaled by their weights
        let vt: Vec<Vec<f64>> = weights
            .iter()
            .map(|&(i, w)| (0..n).map(|c| w * self.v.as_slice()[c * r + i]).collect())
            .collect();
        let u = self.u.as_slice();
        par::for_each_chunk_mut(&mut out, n, |row, dst| {
            for ((i, _), v_row) in weights.iter().zip(&vt) {
                let ui = u[row * r + i];
                if ui == 0.0 {
                    continue;
                }
                for (d, &v) in dst.iter_mut().zip(v_row) {
                    *d += ui * v;
                }
            }
        });
        Matrix::from_raw(m, n, out)
    }

    pub fn reconstruct(&self) -> Matrix {
        self.reconstruct_with(|_, s| s)
    }
}

/// Thin SVD of `a`.
///
/// The input is scaled to unit max-abs entry before factorizing so that
/// squared column norms cannot overflow.
pub fn svd(a: &Matrix) -> Result<SvdFactors> {
    if !a.is_finite() {
        return Err(Error::invalid(format!(
            "SVD input {}x{} has non-finite entries",
            a.rows(),
            a.cols()
        )));
    }
    let scale = a.max_abs();
    let scaled;
    let a = if scale > 0.0 && scale != 1.0 {
        scaled = a.scale(1.0 / scale);
        &scaled
    } else {
        a
    };
    let mut f = if a.rows() < a.cols() {
        let t = svd_tall(&a.transpose())?;
        SvdFactors {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        }
    } else {
        svd_tall(a)?
    };
    if scale > 0.0 {
        f.sigma.iter_mut().for_each(|s| *s *= scale);
    }
    if f.sigma.iter().any(|s| !s.is_finite()) {
        return Err(Error::Factorization {
            rows: a.rows(),
            cols: a.cols(),
            sweeps: 0,
        });
    }
    Ok(f)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * a.iter().map(|x| (x / scale) * (x / scale)).sum::<f64>().sqrt()
}

/// Applies `I - 2 v v^T` to `x` in place (`v` unit length).
fn reflect(v: &[f64], x: &mut [f64]) {
    let t = 2.0 * dot(v, x);
    if t != 0.0 {
        x.iter_mut().zip(v).for_each(|(xi, vi)| *xi -= t * vi);
    }
}

fn svd_tall(a: &Matrix) -> Result<SvdFactors> {
    let (m, n) = a.shape();
    debug_assert!(m >= n);

    // Householder QR on a column-major copy.
    let mut cm = a.to_col_major();
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
    for k in 0..n {
        let (head, tail) = cm.split_at_mut((k + 1) * m);
        let col = &mut head[k * m..];
        let x = &col[k..];
        let norm = norm2(x);
        if norm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vn = norm2(&v);
        v.iter_mut().for_each(|e| *e /= vn);
        col[k] = alpha;
        col[k + 1..].iter_mut().for_each(|e| *e = 0.0);
        par::for_each_chunk_mut(tail, m, |_, c| reflect(&v, &mut c[k..]));
        reflectors.push(Some(v));
    }

    // Upper-triangular R as n column vectors.
    let mut w: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i <= j { cm[j * m + i] } else { 0.0 }).collect())
        .collect();
    drop(cm);
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    jacobi_orthogonalize(&mut w, &mut v).ok_or(Error::Factorization {
        rows: a.rows(),
        cols: a.cols(),
        sweeps: MAX_SWEEPS,
    })?;

    let mut order: Vec<(usize, f64)> = w.iter().map(|c| norm2(c)).enumerate().collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1));
    let sigma_max = order.first().map_or(0.0, |o| o.1);
    let cutoff = RELATIVE_ZERO * sigma_max;

    let mut sigma = Vec::with_capacity(n);
    let mut left: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
    let mut right: Vec<Vec<f64>> = Vec::with_capacity(n);
    for &(j, s) in &order {
        if s > cutoff && s > 0.0 {
            sigma.push(s);
            left.push(Some(w[j].iter().map(|x| x / s).collect()));
        } else {
            sigma.push(0.0);
            left.push(None);
        }
        right.push(std::mem::take(&mut v[j]));
    }
    let left = complete_basis(left, n);

    // U = Q * [U_R; 0], reflectors applied in reverse order.
    let mut u_cm = vec![0.0; m * n];
    for (j, c) in left.iter().enumerate() {
        u_cm[j * m..j * m + n].copy_from_slice(c);
    }
    par::for_each_chunk_mut(&mut u_cm, m, |_, col| {
        for (k, refl) in reflectors.iter().enumerate().rev() {
            if let Some(hv) = refl {
                reflect(hv, &mut col[k..]);
            }
        }
    });

    let u = Matrix::from_raw(n, m, u_cm).transpose();
    let v = Matrix::from_columns(&right).expect("finite rotation factors");
    Ok(SvdFactors { u, sigma, v })
}

/// Rotates column pairs of `w` (mirrored on `v`) until all pairs are
/// orthogonal to working precision. Returns `None` if the sweep cap is hit.
fn jacobi_orthogonalize(w: &mut [Vec<f64>], v: &mut [Vec<f64>]) -> Option<()> {
    let n = w.len();
    let tol = (n as f64).sqrt().max(4.0) * f64::EPSILON;
    let mut norms: Vec<f64> = w.iter().map(|c| dot(c, c)).collect();
    // Columns this small end up below the zero cutoff; rotating them against
    // each other can cycle on rounding noise.
    let floor = (0.1 * RELATIVE_ZERO).powi(2) * norms.iter().sum::<f64>();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let gamma = dot(&w[p], &w[q]);
                if !gamma.is_finite() {
                    return None;
                }
                if gamma.abs() <= tol * (alpha.sqrt() * beta.sqrt()) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(w, p, q, c, s);
                rotate(v, p, q, c, s);
                norms[p] = dot(&w[p], &w[p]);
                norms[q] = dot(&w[q], &w[q]);
            }
        }
        if !rotated {
            return Some(());
        }
    }
    None
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills missing columns with unit vectors orthogonal to all present ones,
/// each time taking the coordinate axis with the largest orthogonal residual.
fn complete_basis(cols: Vec<Option<Vec<f64>>>, dim: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = cols.iter().flatten().cloned().collect();
    cols.into_iter()
        .map(|c| {
            if let Some(c) = c {
                return c;
            }
            let residual = |axis: usize| {
                let mut e = vec![0.0; dim];
                e[axis] = 1.0;
                for _ in 0..2 {
                    for b in &basis {
                        let d = dot(b, &e);
                        e.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
                    }
                }
                e
            };
            let (mut e, nrm) = (0..dim)
                .map(|axis| {
                    let e = residual(axis);
                    let n = norm2(&e);
                    (e, n)
                })
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty dimension");
            e.iter_mut().for_each(|x| *x /= nrm);
            basis.push(e.clone());
            e
        })
        .collect()
}
