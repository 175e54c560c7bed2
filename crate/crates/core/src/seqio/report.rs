use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::sequence::FrameSequence;
use crate::error::{Error, Result};
use crate::quality::QualityReport;

/// Formats like C's `%.6g`: six significant digits, trailing zeros dropped,
/// exponent form outside `[1e-4, 1e6)`. Infinity is written `inf`.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        trim(&format!("{x:.*}", (5 - exp) as usize))
    }
}

/// CSV with header `frame,mse,psnr,ssim`, one row per frame and a final
/// `aggregate` row (omitted when there are no frames).
pub fn write_quality_csv(report: &QualityReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, quality_csv(report)).map_err(|e| Error::io(path, e))
}

pub(crate) fn quality_csv(report: &QualityReport) -> String {
    let mut out = String::from("frame,mse,psnr,ssim\n");
    for f in &report.per_frame {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            f.frame_index,
            format_sig6(f.mse),
            format_sig6(f.psnr),
            format_sig6(f.ssim)
        );
    }
    if let Some(a) = &report.aggregate {
        let _ = writeln!(
            out,
            "aggregate,{},{},{}",
            format_sig6(a.mse),
            format_sig6(a.psnr),
            format_sig6(a.ssim)
        );
    }
    out
}

/// SHA-256 over the frame geometry and every sample's bit pattern.
pub fn sequence_checksum(seq: &FrameSequence) -> String {
    let mut h = Sha256::new();
    h.update((seq.width() as u64).to_le_bytes());
    h.update((seq.height() as u64).to_le_bytes());
    h.update((seq.len() as u64).to_le_bytes());
    for f in seq.frames() {
        for v in f.as_slice() {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// JSON record written next to every decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: String,
    /// Echo of the settings that produced the run.
    pub config: serde_json::Value,
    /// Resolved sparsity weight (robust PCA only).
    pub lambda: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub residuals: Vec<f64>,
    pub wall_ms: f64,
    pub warnings: Vec<String>,
    pub input_checksum: String,
    /// Method-specific extras (rank, sparsity, ...).
    #[serde(default)]
    pub details: serde_json::Map<String, serde_json::Value>,
}

impl RunReport {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}
