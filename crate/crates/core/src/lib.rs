//! Background/foreground separation for particle image sequences.
//!
//! A frame sequence is flattened into a data matrix (one column per frame) and
//! split into a low-rank background and a sparse foreground. Three methods are
//! provided:
//!
//! - robust PCA solved with an inexact augmented Lagrange multiplier scheme
//!   ([`decompose::rpca_alm`]),
//! - POD rank truncation ([`decompose::pod_decompose`]),
//! - per-pixel temporal minimum removal ([`decompose::min_removal`]).
//!
//! [`quality`] scores estimates against ground truth, [`synth`] builds planted
//! and synthetic PIV fixtures, and [`seqio`] moves sequences to and from disk.
//!
//! With the `parallel` feature (on by default) the data-parallel inner loops run
//! on rayon; without it the same code paths run sequentially. Column and frame
//! work is partitioned so that both builds produce bit-identical results.

pub mod decompose;
pub mod error;
pub mod matcore;
pub mod par;
pub mod quality;
pub mod seqio;
pub mod synth;

pub use error::{Error, Result};
pub use matcore::{Matrix, SvdFactors};
