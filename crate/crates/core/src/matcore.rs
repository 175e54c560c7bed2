//! Dense matrices and the linear-algebra primitives the solvers consume.

mod matrix;
mod norms;
mod svd;

pub use matrix::Matrix;
pub use norms::{frobenius_norm, l1_norm, nuclear_norm, spectral_norm};
pub use svd::{svd, SvdFactors};
