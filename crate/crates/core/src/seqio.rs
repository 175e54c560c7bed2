//! Frame sequences on disk and in memory, the frame-stack <-> data-matrix
//! mapping, and result serialization.
//!
//! Supported frame files: binary/ASCII PGM (8 or 16 bit), PPM (reduced to
//! luma), grayscale or color PNG, and PFM for real-valued data that must
//! survive storage without quantization.

mod io;
mod pnm;
mod report;
mod sequence;

pub use io::{frame_file_name, load_sequence, store_sequence, LoadedSequence};
pub use report::{format_sig6, sequence_checksum, write_quality_csv, RunReport};
pub use sequence::{aggregate, scatter, DataMatrix, FrameSequence, SourceRange};
