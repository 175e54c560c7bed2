//! Background/foreground decomposition of a data matrix (pixels x frames).
//!
//! All three methods return a pair whose sum reproduces the input exactly,
//! entry by entry, in floating point.

mod minsub;
mod pod;
mod prox;
mod rpca;
mod split;

pub use minsub::{min_removal, Decomposition};
pub use pod::{pod_decompose, PodConfig, PodResult};
pub use prox::{singular_value_threshold, soft_threshold, soft_threshold_scalar};
pub use rpca::{rpca_alm, Param, RpcaConfig, RpcaResult};
pub use split::split_exact;
