//! Ground-truth fixtures: planted low-rank + sparse matrices and synthetic PIV
//! scenes with a contaminated background.
//!
//! Randomness comes from [`ChaCha8Rng`] seeded with `seed_from_u64`. PIV scenes
//! draw particle positions from stream 0 and the noise of frame `t` from stream
//! `t + 1`, so frames render independently and in any order.

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::Matrix;
use crate::par;
use crate::seqio::{FrameSequence, SourceRange};

/// Identity of the pseudo-random generator, recorded in run reports.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

/// Blobs are rendered out to this many standard deviations.
const BLOB_RADIUS_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub m: usize,
    pub n: usize,
    pub rank: usize,
    pub sparse_fraction: f64,
    pub sparse_magnitude: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Planted {
    /// `l0 + s0`.
    pub d: Matrix,
    pub l0: Matrix,
    pub s0: Matrix,
}

impl PlantedSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::invalid("planted matrix must be at least 1x1"));
        }
        if self.rank == 0 || self.rank > self.m.min(self.n) {
            return Err(Error::invalid(format!(
                "rank {} outside 1..={}",
                self.rank,
                self.m.min(self.n)
            )));
        }
        if !(0.0..1.0).contains(&self.sparse_fraction) {
            return Err(Error::invalid(format!(
                "sparse_fraction {} outside [0, 1)",
                self.sparse_fraction
            )));
        }
        if !(self.sparse_magnitude > 0.0 && self.sparse_magnitude.is_finite()) {
            return Err(Error::invalid("sparse_magnitude must be positive"));
        }
        Ok(())
    }

    /// `round(sparse_fraction * m * n)`.
    pub fn sparse_count(&self) -> usize {
        (self.sparse_fraction * (self.m * self.n) as f64).round() as usize
    }
}

/// `l0 = A B^T` with `A: m x rank ~ N(0, 1/m)`, `B: n x rank ~ N(0, 1/n)`;
/// `s0` has exactly [`PlantedSpec::sparse_count`] entries of value
/// `+-sparse_magnitude` at uniformly chosen positions.
pub fn make_planted(spec: &PlantedSpec) -> Result<Planted> {
    spec.validate()?;
    let PlantedSpec { m, n, rank, .. } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut gaussian = |count: usize, scale: f64| -> Vec<f64> {
        (0..count)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            })
            .collect()
    };
    let a = Matrix::from_raw(m, rank, gaussian(m * rank, 1.0 / (m as f64).sqrt()));
    let b = Matrix::from_raw(n, rank, gaussian(n * rank, 1.0 / (n as f64).sqrt()));
    let l0 = a.matmul(&b.transpose())?;

    let mut s0 = vec![0.0; m * n];
    for idx in sample(&mut rng, m * n, spec.sparse_count()) {
        s0[idx] = if rng.random_bool(0.5) {
            spec.sparse_magnitude
        } else {
            -spec.sparse_magnitude
        };
    }
    let s0 = Matrix::from_raw(m, n, s0);
    let d = l0.add(&s0)?;
    Ok(Planted { d, l0, s0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Flow {
    /// Constant displacement in pixels per frame.
    Uniform { u: f64, v: f64 },
    /// Solid-body rotation about `(cx, cy)` at `omega` radians per frame.
    Vortex { cx: f64, cy: f64, omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reflection {
    pub cx: f64,
    pub cy: f64,
    pub sigma: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSpec {
    /// Peak of a diagonal ramp from the top-left (0) to the bottom-right corner.
    pub gradient: f64,
    pub reflections: Vec<Reflection>,
    /// Frame `t` is scaled by `1 + modulation * sin(2 pi t / period)`.
    pub modulation: f64,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivSceneSpec {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    pub particle_count: usize,
    /// Gaussian blob standard deviation in pixels.
    pub particle_sigma: f64,
    pub particle_peak: f64,
    pub flow: Flow,
    pub background: BackgroundSpec,
    /// Standard deviation of additive white noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct PivSequence {
    /// `clamp(background + particles + noise, 0, 1)`.
    pub frames: FrameSequence,
    pub background: FrameSequence,
    pub particles: FrameSequence,
}

impl PivSceneSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::invalid(msg));
        if self.width == 0 || self.height == 0 {
            return fail(format!("frame size {}x{} is empty", self.width, self.height));
        }
        if self.n_frames < 2 {
            return fail(format!("need at least 2 frames, got {}", self.n_frames));
        }
        if !(self.particle_sigma > 0.0 && self.particle_sigma.is_finite()) {
            return fail(format!("particle_sigma must be positive, got {}", self.particle_sigma));
        }
        if !(self.particle_peak > 0.0 && self.particle_peak <= 1.0) {
            return fail(format!("particle_peak must lie in (0, 1], got {}", self.particle_peak));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return fail(format!("noise_sigma must be non-negative, got {}", self.noise_sigma));
        }
        let bg = &self.background;
        if !(0.0..1.0).contains(&bg.gradient) {
            return fail(format!("gradient amplitude {} outside [0, 1)", bg.gradient));
        }
        if !(0.0..1.0).contains(&bg.modulation) {
            return fail(format!("modulation amplitude {} outside [0, 1)", bg.modulation));
        }
        if !(bg.period > 0.0 && bg.period.is_finite()) {
            return fail(format!("modulation period must be positive, got {}", bg.period));
        }
        for r in &bg.reflections {
            let finite = [r.cx, r.cy, r.sigma, r.amplitude].iter().all(|v| v.is_finite());
            if !finite || r.sigma <= 0.0 || r.amplitude < 0.0 {
                return fail(format!("invalid reflection {r:?}"));
            }
        }
        let flow_ok = match self.flow {
            Flow::Uniform { u, v } => u.is_finite() && v.is_finite(),
            Flow::Vortex { cx, cy, omega } => cx.is_finite() && cy.is_finite() && omega.is_finite(),
        };
        if !flow_ok {
            return fail(format!("non-finite flow {:?}", self.flow));
        }
        Ok(())
    }

    fn static_background(&self) -> Matrix {
        let (w, h) = (self.width, self.height);
        let bg = &self.background;
        let ramp = |x: usize, len: usize| if len > 1 { x as f64 / (len - 1) as f64 } else { 0.0 };
        let mut out = Matrix::zeros(h, w);
        for y in 0..h {
            for x in 0..w {
                let mut v = bg.gradient * 0.5 * (ramp(x, w) + ramp(y, h));
                for r in &bg.reflections {
                    let d2 = (x as f64 - r.cx).powi(2) + (y as f64 - r.cy).powi(2);
                    v += r.amplitude * (-d2 / (2.0 * r.sigma * r.sigma)).exp();
                }
                out[(y, x)] = v;
            }
        }
        out
    }

    fn modulation_at(&self, t: usize) -> f64 {
        let bg = &self.background;
        1.0 + bg.modulation * (2.0 * PI * t as f64 / bg.period).sin()
    }

    fn particle_position(&self, start: (f64, f64), t: usize) -> (f64, f64) {
        let (w, h) = (self.width as f64, self.height as f64);
        let t = t as f64;
        let (x, y) = match self.flow {
            Flow::Uniform { u, v } => (start.0 + u * t, start.1 + v * t),
            Flow::Vortex { cx, cy, omega } => {
                let (s, c) = (omega * t).sin_cos();
                let (dx, dy) = (start.0 - cx, start.1 - cy);
                (cx + c * dx - s * dy, cy + s * dx + c * dy)
            }
        };
        (x.rem_euclid(w), y.rem_euclid(h))
    }

    fn render_particles(&self, positions: &[(f64, f64)]) -> Matrix {
        let (w, h) = (self.width as i64, self.height as i64);
        let sigma = self.particle_sigma;
        let radius = BLOB_RADIUS_SIGMAS * sigma;
        let two_var = 2.0 * sigma * sigma;
        let mut field = Matrix::zeros(self.height, self.width);
        for &(px, py) in positions {
            let (x0, x1) = ((px - radius).floor() as i64, (px + radius).ceil() as i64);
            let (y0, y1) = ((py - radius).floor() as i64, (py + radius).ceil() as i64);
            for yy in y0..=y1 {
                for xx in x0..=x1 {
                    let d2 = (xx as f64 - px).powi(2) + (yy as f64 - py).powi(2);
                    if d2 > radius * radius {
                        continue;
                    }
                    let v = self.particle_peak * (-d2 / two_var).exp();
                    let cell = &mut field[(yy.rem_euclid(h) as usize, xx.rem_euclid(w) as usize)];
                    *cell = cell.max(v);
                }
            }
        }
        field
    }
}

/// Renders a synthetic PIV sequence with known background and particle truth.
///
/// Particles are Gaussian blobs advected by the flow and wrapped on a torus;
/// overlapping blobs combine by maximum, so particle intensity never exceeds
/// `particle_peak`.
pub fn make_piv_sequence(spec: &PivSceneSpec) -> Result<PivSequence> {
    spec.validate()?;
    let still = spec.static_background();
    let peak = still.as_slice().iter().fold(0.0f64, |m, &v| m.max(v));
    if peak * (1.0 + spec.background.modulation) > 1.0 + 1e-12 {
        return Err(Error::invalid(format!(
            "background peaks at {:.4} after modulation, above full scale",
            peak * (1.0 + spec.background.modulation)
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(0);
    let starts: Vec<(f64, f64)> = (0..spec.particle_count)
        .map(|_| {
            (
                rng.random_range(0.0..spec.width as f64),
                rng.random_range(0.0..spec.height as f64),
            )
        })
        .collect();

    let pixels = spec.width * spec.height;
    let rendered = par::map_range(spec.n_frames, pixels, |t| {
        let background = still.scale(spec.modulation_at(t));
        let positions: Vec<_> = starts.iter().map(|&p| spec.particle_position(p, t)).collect();
        let particles = spec.render_particles(&positions);

        let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed);
        noise_rng.set_stream(t as u64 + 1);
        let noise = Normal::new(0.0, spec.noise_sigma).expect("validated noise sigma");
        let frame: Vec<f64> = background
            .as_slice()
            .iter()
            .zip(particles.as_slice())
            .map(|(&b, &p)| {
                let n = if spec.noise_sigma > 0.0 { noise.sample(&mut noise_rng) } else { 0.0 };
                (b + p + n).clamp(0.0, 1.0)
            })
            .collect();
        (Matrix::from_raw(spec.height, spec.width, frame), background, particles)
    });

    let mut frames = Vec::with_capacity(spec.n_frames);
    let mut backgrounds = Vec::with_capacity(spec.n_frames);
    let mut particles = Vec::with_capacity(spec.n_frames);
    for (f, b, p) in rendered {
        frames.push(f);
        backgrounds.push(b);
        particles.push(p);
    }
    let seq = |frames| FrameSequence::new(spec.width, spec.height, frames, SourceRange::Normalized);
    Ok(PivSequence {
        frames: seq(frames)?,
        background: seq(backgrounds)?,
        particles: seq(particles)?,
    })
}
