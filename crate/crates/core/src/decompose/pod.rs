use serde::{Deserialize, Serialize};

use super::split::split_exact;
use crate::error::{Error, Result};
use crate::matcore::{svd, Matrix};

/// How many leading modes form the background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PodConfig {
    Rank(usize),
    /// Smallest `k` whose leading singular values hold this fraction of
    /// `sum sigma_i^2`.
    EnergyThreshold(f64),
}

impl Default for PodConfig {
    fn default() -> Self {
        PodConfig::Rank(1)
    }
}

#[derive(Debug, Clone)]
pub struct PodResult {
    pub background: Matrix,
    pub foreground: Matrix,
    /// Resolved truncation rank.
    pub rank: usize,
}

impl PodConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PodConfig::Rank(0) => Err(Error::invalid("POD rank must be at least 1")),
            PodConfig::EnergyThreshold(e) if !(e > 0.0 && e <= 1.0) => Err(Error::invalid(format!(
                "energy threshold must lie in (0, 1], got {e}"
            ))),
            _ => Ok(()),
        }
    }

    fn resolve(&self, sigma: &[f64]) -> Result<usize> {
        self.validate()?;
        match *self {
            PodConfig::Rank(k) if k > sigma.len() => Err(Error::invalid(format!(
                "POD rank {k} exceeds min(m, n) = {}",
                sigma.len()
            ))),
            PodConfig::Rank(k) => Ok(k),
            PodConfig::EnergyThreshold(frac) => {
                let total: f64 = sigma.iter().map(|s| s * s).sum();
                if total == 0.0 {
                    return Ok(1);
                }
                let target = frac * total * (1.0 - 1e-12);
                let mut acc = 0.0;
                for (i, s) in sigma.iter().enumerate() {
                    acc += s * s;
                    if acc >= target {
                        return Ok(i + 1);
                    }
                }
                Ok(sigma.len())
            }
        }
    }
}

/// Background = leading-`k` SVD reconstruction of `d` (no mean removal).
pub fn pod_decompose(d: &Matrix, cfg: &PodConfig) -> Result<PodResult> {
    let f = svd(d)?;
    let rank = cfg.resolve(&f.sigma)?;
    let bg = f.reconstruct_with(|i, s| if i < rank { s } else { 0.0 });
    let (background, foreground) = split_exact(d, &bg);
    Ok(PodResult {
        background,
        foreground,
        rank,
    })
}
