//! Full-reference quality metrics: MSE, PSNR and single-window (global) SSIM.
//!
//! SSIM uses image-wide means, population variances and covariance, with
//! `C1 = (0.01 L)^2` and `C2 = (0.03 L)^2` for dynamic range `L`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::Matrix;
use crate::par;

fn check_pair(truth: &Matrix, estimate: &Matrix) -> Result<()> {
    truth.check_same_shape(estimate)
}

fn check_range(dynamic_range: f64) -> Result<()> {
    if !(dynamic_range > 0.0 && dynamic_range.is_finite()) {
        return Err(Error::invalid(format!(
            "dynamic range must be positive, got {dynamic_range}"
        )));
    }
    Ok(())
}

/// Mean of squared pixel differences.
pub fn mse(truth: &Matrix, estimate: &Matrix) -> Result<f64> {
    check_pair(truth, estimate)?;
    let sum: f64 = truth
        .as_slice()
        .iter()
        .zip(estimate.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / truth.len() as f64)
}

/// `10 log10(L^2 / mse)`; infinite for `mse == 0`.
pub fn psnr_from_mse(mse: f64, dynamic_range: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (dynamic_range * dynamic_range / mse).log10()
    }
}

pub fn psnr(truth: &Matrix, estimate: &Matrix, dynamic_range: f64) -> Result<f64> {
    check_range(dynamic_range)?;
    Ok(psnr_from_mse(mse(truth, estimate)?, dynamic_range))
}

pub fn ssim_global(truth: &Matrix, estimate: &Matrix, dynamic_range: f64) -> Result<f64> {
    check_pair(truth, estimate)?;
    check_range(dynamic_range)?;
    let n = truth.len() as f64;
    let (x, y) = (truth.as_slice(), estimate.as_slice());
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let (mx, my) = (mean(x), mean(y));
    // same expression for all three so that identical inputs cancel exactly
    let co = |a: &[f64], ma: f64, b: &[f64], mb: f64| {
        a.iter().zip(b).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>() / n
    };
    let (vx, vy, cxy) = (co(x, mx, x, mx), co(y, my, y, my), co(x, mx, y, my));
    let c1 = (0.01 * dynamic_range).powi(2);
    let c2 = (0.03 * dynamic_range).powi(2);
    let num = (2.0 * (mx * my) + c1) * (2.0 * cxy + c2);
    let den = (mx * mx + my * my + c1) * (vx + vy + c2);
    Ok((num / den).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameQuality {
    pub frame_index: usize,
    pub mse: f64,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregateQuality {
    pub mse: f64,
    /// Mean over frames with finite PSNR; infinite if there are none.
    pub psnr: f64,
    pub ssim: f64,
    pub infinite_psnr_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    pub per_frame: Vec<FrameQuality>,
    /// `None` when no frames were compared.
    pub aggregate: Option<AggregateQuality>,
    pub dynamic_range: f64,
}

impl QualityReport {
    pub fn from_frames(per_frame: Vec<FrameQuality>, dynamic_range: f64) -> Self {
        let aggregate = (!per_frame.is_empty()).then(|| {
            let n = per_frame.len() as f64;
            let finite: Vec<f64> = per_frame.iter().map(|f| f.psnr).filter(|p| p.is_finite()).collect();
            AggregateQuality {
                mse: per_frame.iter().map(|f| f.mse).sum::<f64>() / n,
                psnr: if finite.is_empty() {
                    f64::INFINITY
                } else {
                    finite.iter().sum::<f64>() / finite.len() as f64
                },
                ssim: per_frame.iter().map(|f| f.ssim).sum::<f64>() / n,
                infinite_psnr_frames: per_frame.len() - finite.len(),
            }
        });
        Self {
            per_frame,
            aggregate,
            dynamic_range,
        }
    }
}

/// Scores `estimate[t]` against `truth[t]` for every frame.
pub fn evaluate_frames(truth: &[Matrix], estimate: &[Matrix], dynamic_range: f64) -> Result<QualityReport> {
    check_range(dynamic_range)?;
    if truth.len() != estimate.len() {
        return Err(Error::invalid(format!(
            "frame count mismatch: {} truth vs {} estimate",
            truth.len(),
            estimate.len()
        )));
    }
    let pixels = truth.first().map_or(0, |f| f.len());
    let per_frame = par::map_range(truth.len(), pixels, |t| -> Result<FrameQuality> {
        let mse = mse(&truth[t], &estimate[t])?;
        Ok(FrameQuality {
            frame_index: t,
            mse,
            psnr: psnr_from_mse(mse, dynamic_range),
            ssim: ssim_global(&truth[t], &estimate[t], dynamic_range)?,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(QualityReport::from_frames(per_frame, dynamic_range))
}
