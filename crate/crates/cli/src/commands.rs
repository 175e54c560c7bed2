use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Map, Value};

use piv_rpca::decompose::{min_removal, pod_decompose, rpca_alm, PodConfig, RpcaConfig};
use piv_rpca::matcore::frobenius_norm;
use piv_rpca::quality::evaluate_frames;
use piv_rpca::seqio::{
    aggregate, format_sig6, load_sequence, scatter, sequence_checksum, store_sequence,
    write_quality_csv, DataMatrix, FrameSequence, RunReport, SourceRange,
};
use piv_rpca::synth::{
    make_piv_sequence, make_planted, BackgroundSpec, Flow, PivSceneSpec, PlantedSpec, Reflection,
    RNG_ALGORITHM,
};
use piv_rpca::Matrix;

use crate::args::{Command, DecomposeArgs, EvaluateArgs, FlowKind, GenerateArgs, Method, Preset};
use crate::error::CliError;

/// Written into an output directory whose contents are incomplete.
pub const FAILED_MARKER: &str = "FAILED";

type Result<T> = std::result::Result<T, CliError>;

/// Runs one subcommand. `stdout` receives the only machine-readable console
/// output (the aggregate line of `evaluate`).
pub fn run(cmd: &Command, stdout: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Decompose(a) => decompose(cmd, a),
        Command::Evaluate(a) => evaluate(a, stdout),
        Command::Generate(a) => generate(cmd, a),
    }
}

/// Reads a run report and returns the arguments that reproduce it.
pub fn replay_argv(report: &Path) -> Result<Vec<String>> {
    let r = RunReport::read(report)?;
    let cmd: Command = serde_json::from_value(r.config).map_err(|e| CliError::Report {
        path: report.to_path_buf(),
        message: format!("config is not a replayable invocation: {e}"),
    })?;
    Ok(cmd.to_argv())
}

fn distinct_dirs(dirs: &[(&str, &Path)]) -> Result<()> {
    for (i, (na, a)) in dirs.iter().enumerate() {
        for (nb, b) in &dirs[i + 1..] {
            if a == b {
                return Err(CliError::usage(format!(
                    "--{na} and --{nb} name the same directory {}",
                    a.display()
                )));
            }
        }
    }
    Ok(())
}

fn is_stale_output(name: &str) -> bool {
    if name == FAILED_MARKER {
        return true;
    }
    let Some(rest) = name.strip_prefix("frame_") else {
        return false;
    };
    let Some((digits, ext)) = rest.split_once('.') else {
        return false;
    };
    digits.len() == 6 && digits.bytes().all(|b| b.is_ascii_digit()) && ["pgm", "pfm"].contains(&ext)
}

// Frames left over from an earlier, longer run would otherwise be read back
// as part of this one.
fn clear_previous_output(dir: &Path) -> Result<()> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(piv_rpca::Error::Io { path: dir.to_path_buf(), source: e }.into()),
    };
    for entry in entries.flatten() {
        let is_file = entry.file_type().is_ok_and(|t| t.is_file());
        if is_file && entry.file_name().to_str().is_some_and(is_stale_output) {
            let p = entry.path();
            fs::remove_file(&p).map_err(|e| piv_rpca::Error::Io { path: p, source: e })?;
        }
    }
    Ok(())
}

fn mark_failed(dirs: &[&Path]) {
    for d in dirs {
        if d.is_dir() {
            let _ = fs::write(d.join(FAILED_MARKER), "incomplete output\n");
        }
    }
}

/// Stores every `(sequence, dir)` pair; on any failure each directory that
/// exists is tagged with the failure marker.
fn store_all(outputs: &[(&FrameSequence, &Path)], report: Option<(&RunReport, &Path)>) -> Result<()> {
    let dirs: Vec<&Path> = outputs.iter().map(|(_, d)| *d).collect();
    let result = (|| -> Result<()> {
        for d in &dirs {
            clear_previous_output(d)?;
        }
        for (seq, dir) in outputs {
            store_sequence(seq, dir, true)?;
        }
        if let Some((r, path)) = report {
            r.write(path)?;
        }
        Ok(())
    })();
    if result.is_err() {
        mark_failed(&dirs);
    }
    result
}

fn decompose(cmd: &Command, a: &DecomposeArgs) -> Result<()> {
    let rpca_cfg = RpcaConfig {
        lambda: a.lambda,
        tol: a.tol,
        max_iters: a.max_iters,
        ..RpcaConfig::default()
    };
    let pod_cfg = match a.energy {
        Some(e) => PodConfig::EnergyThreshold(e),
        None => PodConfig::Rank(a.rank),
    };
    rpca_cfg.validate()?;
    pod_cfg.validate()?;
    distinct_dirs(&[("input", &a.input), ("out-bg", &a.out_bg), ("out-fg", &a.out_fg)])?;

    let started = Instant::now();
    let loaded = load_sequence(&a.input)?;
    let mut warnings = loaded.warnings;
    for w in &warnings {
        log::warn!("{w}");
    }
    let input = loaded.sequence;
    let data = aggregate(&input)?;
    let d = data.matrix();

    let mut report = RunReport {
        method: a.method.name().into(),
        config: serde_json::to_value(cmd).expect("arguments serialize"),
        lambda: None,
        iterations: None,
        converged: None,
        residuals: Vec::new(),
        wall_ms: 0.0,
        warnings: Vec::new(),
        input_checksum: sequence_checksum(&input),
        details: Map::new(),
    };
    let (background, foreground) = match a.method {
        Method::Rpca => {
            let r = rpca_alm(d, &rpca_cfg)?;
            if !r.converged {
                let msg = format!(
                    "rpca stopped after {} iterations without reaching tol {:e} (residual {:e})",
                    r.iterations,
                    a.tol,
                    r.residual_trace.last().copied().unwrap_or(f64::NAN)
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
            report.lambda = Some(r.lambda);
            report.iterations = Some(r.iterations);
            report.converged = Some(r.converged);
            report.residuals = r.residual_trace;
            report.details.insert("mu0".into(), json!(r.mu0));
            report.details.insert("rank_of_l".into(), json!(r.rank_of_l));
            report.details.insert("sparsity_of_s".into(), json!(r.sparsity_of_s));
            (r.low_rank, r.sparse)
        }
        Method::Pod => {
            let r = pod_decompose(d, &pod_cfg)?;
            report.details.insert("rank".into(), json!(r.rank));
            (r.background, r.foreground)
        }
        Method::Minsub => {
            let r = min_removal(d);
            (r.background, r.foreground)
        }
    };
    let d_norm = frobenius_norm(d);
    let ratio = if d_norm > 0.0 { frobenius_norm(&foreground) / d_norm } else { 0.0 };
    report.details.insert("foreground_energy_ratio".into(), json!(ratio));

    let bg_seq = to_sequence(&data, background)?;
    let fg_seq = to_sequence(&data, foreground)?;
    report.warnings = warnings;
    report.wall_ms = started.elapsed().as_secs_f64() * 1e3;
    store_all(
        &[(&bg_seq, &a.out_bg), (&fg_seq, &a.out_fg)],
        a.report.as_deref().map(|p| (&report, p)),
    )
}

fn to_sequence(like: &DataMatrix, m: Matrix) -> Result<FrameSequence> {
    Ok(scatter(&like.with_matrix(m)?))
}

fn evaluate(a: &EvaluateArgs, stdout: &mut dyn Write) -> Result<()> {
    if !(a.range > 0.0 && a.range.is_finite()) {
        return Err(CliError::usage(format!("--range must be positive, got {}", a.range)));
    }
    if a.estimate == a.truth {
        log::warn!("--estimate and --truth are the same directory");
    }
    let estimate = load_sequence(&a.estimate)?;
    let truth = load_sequence(&a.truth)?;
    for w in estimate.warnings.iter().chain(&truth.warnings) {
        log::warn!("{w}");
    }
    let (est, tru) = (estimate.sequence, truth.sequence);
    if est.len() != tru.len() {
        return Err(CliError::usage(format!(
            "frame count mismatch: {} estimate frames, {} truth frames",
            est.len(),
            tru.len()
        )));
    }
    if (est.width(), est.height()) != (tru.width(), tru.height()) {
        return Err(CliError::usage(format!(
            "frame size mismatch: estimate {}x{}, truth {}x{}",
            est.width(),
            est.height(),
            tru.width(),
            tru.height()
        )));
    }
    let scale = |s: &FrameSequence| -> Vec<Matrix> { s.frames().iter().map(|f| f.scale(a.range)).collect() };
    let q = evaluate_frames(&scale(&tru), &scale(&est), a.range)?;
    if let Some(csv) = &a.csv {
        write_quality_csv(&q, csv)?;
    }
    if let Some(agg) = &q.aggregate {
        writeln!(
            stdout,
            "aggregate,{},{},{}",
            format_sig6(agg.mse),
            format_sig6(agg.psnr),
            format_sig6(agg.ssim)
        )
        .map_err(|e| piv_rpca::Error::Io { path: "<stdout>".into(), source: e })?;
    }
    Ok(())
}

impl GenerateArgs {
    /// The matrix fixture behind `--preset planted`: `m = width * height`,
    /// `n = frames`.
    pub fn planted_spec(&self) -> PlantedSpec {
        PlantedSpec {
            m: self.width * self.height,
            n: self.frames,
            rank: self.rank,
            sparse_fraction: self.sparse_fraction,
            sparse_magnitude: self.sparse_magnitude,
            seed: self.seed,
        }
    }

    /// The scene behind `--preset piv`.
    pub fn piv_spec(&self) -> PivSceneSpec {
        let (w, h) = (self.width as f64, self.height as f64);
        let reflections = if self.no_reflections {
            Vec::new()
        } else if self.reflections.is_empty() {
            // (20, 24) and (44, 40) with sigmas 6 and 8 on a 64x64 frame
            let s = w.min(h);
            vec![
                Reflection { cx: 0.3125 * w, cy: 0.375 * h, sigma: 0.09375 * s, amplitude: 0.3 },
                Reflection { cx: 0.6875 * w, cy: 0.625 * h, sigma: 0.125 * s, amplitude: 0.25 },
            ]
        } else {
            self.reflections.clone()
        };
        let flow = match self.flow {
            FlowKind::Uniform => Flow::Uniform { u: self.u, v: self.v },
            FlowKind::Vortex => Flow::Vortex {
                cx: (w - 1.0) / 2.0,
                cy: (h - 1.0) / 2.0,
                omega: self.omega,
            },
        };
        PivSceneSpec {
            width: self.width,
            height: self.height,
            n_frames: self.frames,
            particle_count: self.particles,
            particle_sigma: self.particle_sigma,
            particle_peak: self.particle_peak,
            flow,
            background: BackgroundSpec {
                gradient: self.gradient,
                reflections,
                modulation: self.modulation,
                period: self.period,
            },
            noise_sigma: self.noise,
            seed: self.seed,
        }
    }
}

fn generate(cmd: &Command, a: &GenerateArgs) -> Result<()> {
    let spec_json: Value = match a.preset {
        Preset::Planted => {
            let s = a.planted_spec();
            s.validate()?;
            serde_json::to_value(s)
        }
        Preset::Piv => {
            let s = a.piv_spec();
            s.validate()?;
            serde_json::to_value(s)
        }
    }
    .expect("spec serializes");
    distinct_dirs(&[
        ("out-frames", &a.out_frames),
        ("out-background", &a.out_background),
        ("out-foreground", &a.out_foreground),
    ])?;

    let started = Instant::now();
    let (frames, background, foreground) = match a.preset {
        Preset::Planted => {
            let p = make_planted(&a.planted_spec())?;
            let as_seq = |m: Matrix| -> Result<FrameSequence> {
                let dm = DataMatrix::new(m, a.width, a.height, SourceRange::Float)?;
                Ok(scatter(&dm))
            };
            (as_seq(p.d)?, as_seq(p.l0)?, as_seq(p.s0)?)
        }
        Preset::Piv => {
            let s = make_piv_sequence(&a.piv_spec())?;
            let depth = if a.depth == 8 { SourceRange::EightBit } else { SourceRange::SixteenBit };
            (
                s.frames.with_source_range(depth),
                s.background.with_source_range(depth),
                s.particles.with_source_range(depth),
            )
        }
    };

    let mut details = Map::new();
    details.insert("preset".into(), serde_json::to_value(a.preset).expect("preset serializes"));
    details.insert("spec".into(), spec_json);
    details.insert("rng".into(), json!(RNG_ALGORITHM));
    details.insert("frames_checksum".into(), json!(sequence_checksum(&frames)));
    let report = RunReport {
        method: "generate".into(),
        config: serde_json::to_value(cmd).expect("arguments serialize"),
        lambda: None,
        iterations: None,
        converged: None,
        residuals: Vec::new(),
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        warnings: Vec::new(),
        input_checksum: String::new(),
        details,
    };
    store_all(
        &[
            (&frames, &a.out_frames),
            (&background, &a.out_background),
            (&foreground, &a.out_foreground),
        ],
        a.report.as_deref().map(|p| (&report, p)),
    )
}
