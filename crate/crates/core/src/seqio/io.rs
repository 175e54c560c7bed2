use std::fs;
use std::path::{Path, PathBuf};

use super::pnm::{self, Raster};
use super::sequence::{FrameSequence, SourceRange};
use crate::error::{Error, Result};
use crate::matcore::Matrix;
use crate::par;

const FRAME_EXTENSIONS: [&str; 4] = ["pgm", "ppm", "pfm", "png"];

#[derive(Debug, Clone)]
pub struct LoadedSequence {
    pub sequence: FrameSequence,
    /// Non-fatal conditions met while loading (e.g. color reduced to luma).
    pub warnings: Vec<String>,
}

struct Decoded {
    width: usize,
    height: usize,
    range: SourceRange,
    color: bool,
    data: Vec<f64>,
}

/// `frame_000042.pgm`
pub fn frame_file_name(index: usize, extension: &str) -> String {
    format!("frame_{index:06}.{extension}")
}

fn is_frame_file(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn luma(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

fn depth_of(maxval: u32) -> SourceRange {
    if maxval <= 255 {
        SourceRange::EightBit
    } else {
        SourceRange::SixteenBit
    }
}

fn decode_file(path: &Path) -> Result<Decoded> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let format_err = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        return decode_png(&bytes).map_err(format_err);
    }
    Ok(match pnm::decode(&bytes).map_err(format_err)? {
        Raster::Gray { width, height, maxval, data } => Decoded {
            width,
            height,
            range: depth_of(maxval),
            color: false,
            data: data.iter().map(|&v| v as f64 / maxval as f64).collect(),
        },
        Raster::Rgb { width, height, maxval, data } => {
            let m = maxval as f64;
            Decoded {
                width,
                height,
                range: depth_of(maxval),
                color: true,
                data: data
                    .iter()
                    .map(|&[r, g, b]| luma(r as f64 / m, g as f64 / m, b as f64 / m))
                    .collect(),
            }
        }
        Raster::Float { width, height, data } => {
            if let Some(v) = data.iter().find(|v| !v.is_finite()) {
                return Err(format_err(format!("non-finite sample {v}")));
            }
            Decoded {
                width,
                height,
                range: SourceRange::Float,
                color: false,
                data: data.iter().map(|&v| v as f64).collect(),
            }
        }
    })
}

fn decode_png(bytes: &[u8]) -> std::result::Result<Decoded, String> {
    use image::{ColorType, DynamicImage};
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| e.to_string())?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let eight = matches!(
        img.color(),
        ColorType::L8 | ColorType::La8 | ColorType::Rgb8 | ColorType::Rgba8
    );
    let color = img.color().has_color();
    let range = if eight { SourceRange::EightBit } else { SourceRange::SixteenBit };
    let data = match (&img, color) {
        (DynamicImage::ImageLuma8(g), _) => g.as_raw().iter().map(|&v| v as f64 / 255.0).collect(),
        (DynamicImage::ImageLuma16(g), _) => g.as_raw().iter().map(|&v| v as f64 / 65535.0).collect(),
        (_, false) => img.to_luma16().as_raw().iter().map(|&v| v as f64 / 65535.0).collect(),
        (_, true) if eight => img
            .to_rgb8()
            .pixels()
            .map(|p| luma(p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0))
            .collect(),
        (_, true) => img
            .to_rgb16()
            .pixels()
            .map(|p| luma(p[0] as f64 / 65535.0, p[1] as f64 / 65535.0, p[2] as f64 / 65535.0))
            .collect(),
    };
    Ok(Decoded { width, height, range, color, data })
}

/// Reads every frame file in `dir`, ordered by file name.
///
/// Integer samples are divided by the format's maximum value. Color frames are
/// reduced to luma and reported in [`LoadedSequence::warnings`].
pub fn load_sequence(dir: impl AsRef<Path>) -> Result<LoadedSequence> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.is_file() && is_frame_file(p))
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if files.is_empty() {
        return Err(Error::EmptyInput { path: dir.to_path_buf() });
    }

    let decoded = par::map_range(files.len(), 1 << 16, |i| decode_file(&files[i]));
    let mut frames = Vec::with_capacity(files.len());
    let mut first: Option<(usize, usize, SourceRange)> = None;
    let mut color_frames = 0;
    for (path, d) in files.iter().zip(decoded) {
        let d = d?;
        let (w, h, range) = *first.get_or_insert((d.width, d.height, d.range));
        if (d.width, d.height) != (w, h) {
            return Err(Error::DimensionMismatch {
                path: path.clone(),
                expected: (w, h),
                found: (d.width, d.height),
            });
        }
        if d.range != range {
            return Err(Error::Format {
                path: path.clone(),
                message: format!("sample format {:?} differs from first frame ({range:?})", d.range),
            });
        }
        color_frames += usize::from(d.color);
        frames.push(Matrix::from_raw(d.height, d.width, d.data));
    }
    let (w, h, range) = first.expect("at least one frame");
    let mut warnings = Vec::new();
    if color_frames > 0 {
        let msg = format!(
            "{color_frames} color frame(s) in {} reduced to luma (0.299R + 0.587G + 0.114B)",
            dir.display()
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(LoadedSequence {
        sequence: FrameSequence::new(w, h, frames, range)?,
        warnings,
    })
}

/// Writes `frame_NNNNNN.pgm` (or `.pfm` for real-valued sequences) into `dir`.
///
/// Integer depths quantize `round(v * max)`. With `clamp`, values are first
/// clipped to `[0, 1]`; without it an out-of-range value is an error and
/// nothing is written. Real-valued sequences are stored as-is.
pub fn store_sequence(seq: &FrameSequence, dir: impl AsRef<Path>, clamp: bool) -> Result<()> {
    let dir = dir.as_ref();
    let range = seq.source_range();
    if range != SourceRange::Float && !clamp {
        for (i, f) in seq.frames().iter().enumerate() {
            if let Some(v) = f.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::invalid(format!(
                    "frame {i} holds {v}, outside [0, 1]; store with clamping"
                )));
            }
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let (w, h) = (seq.width(), seq.height());
    let results = par::map_range(seq.len(), w * h, |i| {
        let frame = seq.frames()[i].as_slice();
        let (name, bytes) = match range {
            SourceRange::Float => {
                let vals: Vec<f32> = frame.iter().map(|&v| v as f32).collect();
                (frame_file_name(i, "pfm"), pnm::encode_pfm(w, h, &vals))
            }
            _ => {
                let max: u16 = if range == SourceRange::EightBit { 255 } else { 65535 };
                let codes: Vec<u16> = frame
                    .iter()
                    .map(|&v| (v.clamp(0.0, 1.0) * max as f64).round() as u16)
                    .collect();
                (frame_file_name(i, "pgm"), pnm::encode_pgm(w, h, max, &codes))
            }
        };
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(path, e))
    });
    results.into_iter().collect()
}
