use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::Matrix;

/// Intensity scale of the data a sequence was read from or will be written to.
/// In memory, 1.0 is always full scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceRange {
    /// Already normalized; written as 16-bit PGM.
    Normalized,
    EightBit,
    SixteenBit,
    /// Unbounded real values (PFM); never quantized or clamped.
    Float,
}

impl SourceRange {
    pub fn max_value(self) -> f64 {
        match self {
            SourceRange::Normalized | SourceRange::Float => 1.0,
            SourceRange::EightBit => 255.0,
            SourceRange::SixteenBit => 65535.0,
        }
    }

    /// Dynamic range used for quality metrics by default.
    pub fn default_dynamic_range(self) -> f64 {
        match self {
            SourceRange::EightBit => 255.0,
            _ => 1.0,
        }
    }
}

/// Equally sized single-channel frames, each `height x width`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    width: usize,
    height: usize,
    frames: Vec<Matrix>,
    source_range: SourceRange,
}

impl FrameSequence {
    pub fn new(
        width: usize,
        height: usize,
        frames: Vec<Matrix>,
        source_range: SourceRange,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("frame size {width}x{height} is empty")));
        }
        for (i, f) in frames.iter().enumerate() {
            if f.shape() != (height, width) {
                return Err(Error::invalid(format!(
                    "frame {i} is {}x{} (rows x cols), expected {height}x{width}",
                    f.rows(),
                    f.cols()
                )));
            }
        }
        Ok(Self {
            width,
            height,
            frames,
            source_range,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Matrix] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Matrix> {
        self.frames
    }

    pub fn source_range(&self) -> SourceRange {
        self.source_range
    }

    pub fn with_source_range(mut self, range: SourceRange) -> Self {
        self.source_range = range;
        self
    }
}

/// `(width * height) x n_frames` matrix; column `j` is frame `j` flattened
/// row by row from the top-left pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    matrix: Matrix,
    width: usize,
    height: usize,
    source_range: SourceRange,
}

impl DataMatrix {
    pub fn new(matrix: Matrix, width: usize, height: usize, source_range: SourceRange) -> Result<Self> {
        if width * height != matrix.rows() {
            return Err(Error::invalid(format!(
                "{width}x{height} frames need {} rows, matrix has {}",
                width * height,
                matrix.rows()
            )));
        }
        Ok(Self {
            matrix,
            width,
            height,
            source_range,
        })
    }

    /// Same frame geometry, different contents (e.g. a decomposition part).
    pub fn with_matrix(&self, matrix: Matrix) -> Result<Self> {
        Self::new(matrix, self.width, self.height, self.source_range)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn source_range(&self) -> SourceRange {
        self.source_range
    }
}

/// Stacks vectorized frames as columns.
pub fn aggregate(seq: &FrameSequence) -> Result<DataMatrix> {
    if seq.is_empty() {
        return Err(Error::invalid("cannot aggregate an empty sequence"));
    }
    let (p, n) = (seq.width * seq.height, seq.len());
    let mut data = vec![0.0; p * n];
    for (j, f) in seq.frames.iter().enumerate() {
        for (i, &v) in f.as_slice().iter().enumerate() {
            data[i * n + j] = v;
        }
    }
    DataMatrix::new(Matrix::from_raw(p, n, data), seq.width, seq.height, seq.source_range)
}

/// Inverse of [`aggregate`].
pub fn scatter(d: &DataMatrix) -> FrameSequence {
    let frames = (0..d.matrix.cols())
        .map(|j| Matrix::from_raw(d.height, d.width, d.matrix.column(j)))
        .collect();
    FrameSequence {
        width: d.width,
        height: d.height,
        frames,
        source_range: d.source_range,
    }
}
