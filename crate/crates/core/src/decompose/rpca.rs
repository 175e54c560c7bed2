//! Robust PCA, `min ||L||_* + lambda ||S||_1  s.t.  D = L + S`, solved by the
//! inexact augmented Lagrange multiplier method.
//!
//! Each outer iteration does one singular-value-thresholding step for `L`, one
//! shrinkage step for `S`, a dual ascent step on the multiplier `Y`, and grows
//! the penalty `mu` geometrically up to a cap.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::prox::soft_threshold_scalar;
use super::split::split_exact;
use crate::error::{Error, Result};
use crate::matcore::{frobenius_norm, svd, Matrix};
use crate::par;

/// A solver parameter that is either derived from the data or given.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Param {
    #[default]
    Auto,
    Value(f64),
}

impl Param {
    pub fn value(self) -> Option<f64> {
        match self {
            Param::Auto => None,
            Param::Value(v) => Some(v),
        }
    }

    pub fn resolve(self, auto: impl FnOnce() -> f64) -> f64 {
        self.value().unwrap_or_else(auto)
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Auto => f.write_str("auto"),
            Param::Value(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Param::Auto);
        }
        s.parse::<f64>()
            .map(Param::Value)
            .map_err(|_| format!("expected `auto` or a number, got `{s}`"))
    }
}

impl Serialize for Param {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Param::Auto => s.serialize_str("auto"),
            Param::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Param {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Param::Value(v)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpcaConfig {
    /// Sparsity weight; `auto` is `1 / sqrt(rows)` (pixels per frame).
    pub lambda: Param,
    /// Initial penalty; `auto` is `1.25 / ||D||_2`.
    pub mu0: Param,
    /// Penalty growth factor per iteration. Fast growth reaches feasibility
    /// before optimality: at 1.5 about one planted instance in twenty stalls
    /// at a feasible point with a higher objective than the planted truth.
    pub rho: f64,
    /// Stop once `||D - L - S||_F / ||D||_F` drops to this.
    pub tol: f64,
    pub max_iters: usize,
    /// Upper bound on the penalty; `auto` is `1e10 * mu0`.
    pub mu_cap: Param,
}

impl Default for RpcaConfig {
    fn default() -> Self {
        Self {
            lambda: Param::Auto,
            mu0: Param::Auto,
            rho: 1.2,
            tol: 1e-7,
            max_iters: 500,
            mu_cap: Param::Auto,
        }
    }
}

impl RpcaConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, p: Param| match p.value() {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(Error::invalid(format!(
                "{name} must be positive and finite, got {v}"
            ))),
            _ => Ok(()),
        };
        positive("lambda", self.lambda)?;
        positive("mu0", self.mu0)?;
        positive("mu_cap", self.mu_cap)?;
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return Err(Error::invalid(format!("rho must exceed 1, got {}", self.rho)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if let (Some(mu0), Some(cap)) = (self.mu0.value(), self.mu_cap.value()) {
            if cap < mu0 {
                return Err(Error::invalid(format!("mu_cap {cap} is below mu0 {mu0}")));
            }
        }
        Ok(())
    }

    /// `1 / sqrt(rows)`, unless set explicitly.
    pub fn resolve_lambda(&self, rows: usize) -> f64 {
        self.lambda.resolve(|| 1.0 / (rows as f64).sqrt())
    }
}

#[derive(Debug, Clone)]
pub struct RpcaResult {
    pub low_rank: Matrix,
    /// Reassigned to `D - L` on exit, so `low_rank + sparse == D` exactly.
    pub sparse: Matrix,
    pub iterations: usize,
    pub converged: bool,
    /// Relative residual after each iteration.
    pub residual_trace: Vec<f64>,
    /// Number of singular values kept by the last thresholding step.
    pub rank_of_l: usize,
    /// Fraction of nonzero entries in the last shrinkage iterate (before the
    /// additivity reassignment, which makes every entry carry residual).
    pub sparsity_of_s: f64,
    pub lambda: f64,
    pub mu0: f64,
}

/// Decomposes `d` (pixels x frames) into low-rank plus sparse parts.
pub fn rpca_alm(d: &Matrix, cfg: &RpcaConfig) -> Result<RpcaResult> {
    cfg.validate()?;
    if !d.is_finite() {
        return Err(Error::invalid("input matrix has non-finite entries"));
    }
    let (m, n) = d.shape();
    let lambda = cfg.resolve_lambda(m);
    let d_norm = frobenius_norm(d);

    if d_norm == 0.0 {
        return Ok(RpcaResult {
            low_rank: Matrix::zeros(m, n),
            sparse: Matrix::zeros(m, n),
            iterations: 1,
            converged: true,
            residual_trace: vec![0.0],
            rank_of_l: 0,
            sparsity_of_s: 0.0,
            lambda,
            mu0: cfg.mu0.value().unwrap_or(f64::INFINITY),
        });
    }

    let spectral = svd(d)?.sigma[0];
    let dual_scale = spectral.max(d.max_abs() / lambda);
    let mu0 = cfg.mu0.resolve(|| 1.25 / spectral);
    let mu_cap = cfg.mu_cap.resolve(|| 1e10 * mu0);
    let denom = d_norm.max(1e-12);

    let dv = d.as_slice();
    let mut y: Vec<f64> = dv.iter().map(|x| x / dual_scale).collect();
    let mut s = vec![0.0; m * n];
    let mut low_rank = Matrix::zeros(m, n);
    let mut mu = mu0;
    let mut trace = Vec::new();
    let mut rank_of_l = 0;
    let mut converged = false;

    for iteration in 1..=cfg.max_iters {
        let inv_mu = 1.0 / mu;

        let target = tabulate(m, n, |i| dv[i] - s[i] + inv_mu * y[i]);
        if !target.is_finite() {
            return Err(Error::Divergence { iteration });
        }
        let factors = svd(&target)?;
        rank_of_l = factors.sigma.iter().filter(|&&sv| sv > inv_mu).count();
        low_rank = factors.reconstruct_with(|_, sv| soft_threshold_scalar(sv, inv_mu));
        let l = low_rank.as_slice();

        let shrink = lambda * inv_mu;
        s = par::map_range(m * n, 1, |i| {
            soft_threshold_scalar(dv[i] - l[i] + inv_mu * y[i], shrink)
        });

        let residual_m = tabulate(m, n, |i| dv[i] - l[i] - s[i]);
        let r = residual_m.as_slice();
        y = par::map_range(m * n, 1, |i| y[i] + mu * r[i]);

        if !(low_rank.is_finite() && s.iter().chain(&y).all(|v| v.is_finite())) {
            return Err(Error::Divergence { iteration });
        }

        let residual = frobenius_norm(&residual_m) / denom;
        trace.push(residual);
        log::trace!("rpca iter {iteration}: residual {residual:.3e}, rank {rank_of_l}, mu {mu:.3e}");
        mu = (mu * cfg.rho).min(mu_cap);

        if residual <= cfg.tol {
            converged = true;
            break;
        }
    }

    let nonzero = s.iter().filter(|&&v| v != 0.0).count();
    let (low_rank, sparse) = split_exact(d, &low_rank);
    Ok(RpcaResult {
        low_rank,
        sparse,
        iterations: trace.len(),
        converged,
        residual_trace: trace,
        rank_of_l,
        sparsity_of_s: nonzero as f64 / (m * n) as f64,
        lambda,
        mu0,
    })
}

fn tabulate(rows: usize, cols: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> Matrix {
    Matrix::from_raw(rows, cols, par::map_range(rows * cols, 1, f))
}
