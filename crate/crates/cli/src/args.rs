use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use piv_rpca::decompose::Param;
use piv_rpca::synth::Reflection;

#[derive(Debug, Parser)]
#[command(name = "piv-rpca", version, about = "Low-rank background / sparse foreground separation for image sequences")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// A parsed invocation. It is also the config echo stored in run reports, so
/// a run can be replayed with [`Command::to_argv`].
#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
pub enum Command {
    /// Split a frame sequence into background and foreground sequences.
    Decompose(DecomposeArgs),
    /// Score an estimated sequence against ground truth (MSE, PSNR, SSIM).
    Evaluate(EvaluateArgs),
    /// Write a synthetic sequence together with its ground truth.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rpca,
    Pod,
    Minsub,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rpca => "rpca",
            Method::Pod => "pod",
            Method::Minsub => "minsub",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DecomposeArgs {
    /// Directory of input frames (read in lexicographic file-name order).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_bg: PathBuf,
    #[arg(long)]
    pub out_fg: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Rpca)]
    pub method: Method,
    /// Sparsity weight for rpca: `auto` (1/sqrt(pixels per frame)) or a number.
    #[arg(long, default_value = "auto")]
    pub lambda: Param,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// POD truncation rank.
    #[arg(long, default_value_t = 1)]
    pub rank: usize,
    /// POD: keep the fewest modes holding this fraction of the energy
    /// (overrides `--rank`).
    #[arg(long)]
    pub energy: Option<f64>,
    /// JSON run report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub estimate: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Dynamic range; normalized intensities are scaled by it before scoring.
    #[arg(long, default_value_t = 1.0)]
    pub range: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Low-rank plus sparse matrix; frames are stored as real-valued PFM.
    Planted,
    /// Particles advected over a contaminated background.
    Piv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    Uniform,
    Vortex,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub preset: Preset,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_frames: PathBuf,
    /// Ground-truth low-rank part (planted) or background (piv).
    #[arg(long)]
    pub out_background: PathBuf,
    /// Ground-truth sparse part (planted) or particle images (piv).
    #[arg(long)]
    pub out_foreground: PathBuf,
    /// JSON echo of the generator settings.
    #[arg(long)]
    pub report: Option<PathBuf>,

    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, default_value_t = 60)]
    pub frames: usize,

    /// planted: rank of the low-rank part.
    #[arg(long, default_value_t = 2)]
    pub rank: usize,
    #[arg(long, default_value_t = 0.05)]
    pub sparse_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sparse_magnitude: f64,

    #[arg(long, default_value_t = 80)]
    pub particles: usize,
    #[arg(long, default_value_t = 0.7)]
    pub particle_sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub particle_peak: f64,
    #[arg(long, value_enum, default_value_t = FlowKind::Uniform)]
    pub flow: FlowKind,
    /// Uniform flow, pixels per frame.
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    pub u: f64,
    #[arg(long, default_value_t = 0.75, allow_negative_numbers = true)]
    pub v: f64,
    /// Vortex rotation, radians per frame, about the frame center.
    #[arg(long, default_value_t = 0.02, allow_negative_numbers = true)]
    pub omega: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gradient: f64,
    /// Reflection blob `CX,CY,SIGMA,AMPLITUDE`; repeatable. Without any, two
    /// blobs placed relative to the frame size are used.
    #[arg(long = "reflection", value_parser = parse_reflection)]
    pub reflections: Vec<Reflection>,
    #[arg(long)]
    pub no_reflections: bool,
    #[arg(long, default_value_t = 0.1)]
    pub modulation: f64,
    /// Modulation period in frames.
    #[arg(long, default_value_t = 30.0)]
    pub period: f64,
    /// Standard deviation of additive white noise.
    #[arg(long, default_value_t = 0.005)]
    pub noise: f64,
    /// Bit depth of piv output frames.
    #[arg(long, default_value_t = 16, value_parser = parse_depth)]
    pub depth: u8,
}

fn parse_depth(s: &str) -> Result<u8, String> {
    match s {
        "8" => Ok(8),
        "16" => Ok(16),
        _ => Err(format!("depth must be 8 or 16, got `{s}`")),
    }
}

fn parse_reflection(s: &str) -> Result<Reflection, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [cx, cy, sigma, amplitude] => Ok(Reflection { cx, cy, sigma, amplitude }),
        _ => Err(format!("expected CX,CY,SIGMA,AMPLITUDE, got `{s}`")),
    }
}

// `--flag=value` keeps values that start with `-` unambiguous.
fn push(argv: &mut Vec<String>, flag: &str, value: impl std::fmt::Display) {
    argv.push(format!("--{flag}={value}"));
}

fn push_path(argv: &mut Vec<String>, flag: &str, path: &std::path::Path) {
    push(argv, flag, path.display());
}

impl Command {
    /// Arguments (without the program name) that reproduce this invocation.
    /// Floats are printed in shortest round-trip form, so parsing them back
    /// gives the same values bit for bit.
    pub fn to_argv(&self) -> Vec<String> {
        let mut a = Vec::new();
        match self {
            Command::Decompose(d) => {
                a.push("decompose".into());
                push_path(&mut a, "input", &d.input);
                push_path(&mut a, "out-bg", &d.out_bg);
                push_path(&mut a, "out-fg", &d.out_fg);
                push(&mut a, "method", d.method.name());
                push(&mut a, "lambda", d.lambda);
                push(&mut a, "tol", d.tol);
                push(&mut a, "max-iters", d.max_iters);
                push(&mut a, "rank", d.rank);
                if let Some(e) = d.energy {
                    push(&mut a, "energy", e);
                }
                if let Some(r) = &d.report {
                    push_path(&mut a, "report", r);
                }
            }
            Command::Evaluate(e) => {
                a.push("evaluate".into());
                push_path(&mut a, "estimate", &e.estimate);
                push_path(&mut a, "truth", &e.truth);
                push(&mut a, "range", e.range);
                if let Some(c) = &e.csv {
                    push_path(&mut a, "csv", c);
                }
            }
            Command::Generate(g) => {
                a.push("generate".into());
                push(&mut a, "preset", match g.preset {
                    Preset::Planted => "planted",
                    Preset::Piv => "piv",
                });
                push(&mut a, "seed", g.seed);
                push_path(&mut a, "out-frames", &g.out_frames);
                push_path(&mut a, "out-background", &g.out_background);
                push_path(&mut a, "out-foreground", &g.out_foreground);
                if let Some(r) = &g.report {
                    push_path(&mut a, "report", r);
                }
                push(&mut a, "width", g.width);
                push(&mut a, "height", g.height);
                push(&mut a, "frames", g.frames);
                push(&mut a, "rank", g.rank);
                push(&mut a, "sparse-fraction", g.sparse_fraction);
                push(&mut a, "sparse-magnitude", g.sparse_magnitude);
                push(&mut a, "particles", g.particles);
                push(&mut a, "particle-sigma", g.particle_sigma);
                push(&mut a, "particle-peak", g.particle_peak);
                push(&mut a, "flow", match g.flow {
                    FlowKind::Uniform => "uniform",
                    FlowKind::Vortex => "vortex",
                });
                push(&mut a, "u", g.u);
                push(&mut a, "v", g.v);
                push(&mut a, "omega", g.omega);
                push(&mut a, "gradient", g.gradient);
                for r in &g.reflections {
                    push(&mut a, "reflection", format!("{},{},{},{}", r.cx, r.cy, r.sigma, r.amplitude));
                }
                if g.no_reflections {
                    a.push("--no-reflections".into());
                }
                push(&mut a, "modulation", g.modulation);
                push(&mut a, "period", g.period);
                push(&mut a, "noise", g.noise);
                push(&mut a, "depth", g.depth);
            }
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        Cli::try_parse_from(std::iter::once("piv-rpca").chain(args.iter().copied()))
            .unwrap()
            .command
    }

    fn round_trip(cmd: &Command) {
        let argv = cmd.to_argv();
        let again = Cli::try_parse_from(std::iter::once("piv-rpca".to_string()).chain(argv))
            .unwrap()
            .command;
        assert_eq!(&again, cmd);
        let json = serde_json::to_value(cmd).unwrap();
        assert_eq!(&serde_json::from_value::<Command>(json).unwrap(), cmd);
    }

    #[test]
    fn decompose_defaults() {
        let Command::Decompose(d) = parse(&["decompose", "--input", "i", "--out-bg", "b", "--out-fg", "f"]) else {
            panic!()
        };
        assert_eq!(d.method, Method::Rpca);
        assert_eq!(d.lambda, Param::Auto);
        assert_eq!((d.tol, d.max_iters, d.rank, d.energy), (1e-7, 500, 1, None));
    }

    #[test]
    fn argv_round_trips() {
        round_trip(&parse(&[
            "decompose", "--input", "in dir", "--out-bg", "b", "--out-fg", "f", "--method", "pod",
            "--energy", "0.9", "--lambda", "0.0123", "--tol", "3e-9", "--report", "r.json",
        ]));
        round_trip(&parse(&["evaluate", "--estimate", "e", "--truth", "t", "--range", "255"]));
        round_trip(&parse(&[
            "generate", "--preset", "piv", "--out-frames", "a", "--out-background", "b",
            "--out-foreground", "c", "--reflection", "1.5,2,3,0.1", "--reflection", "4,5,6,0.2",
            "--u", "-0.3", "--flow", "vortex", "--depth", "8", "--seed", "17",
        ]));
        round_trip(&parse(&[
            "generate", "--preset", "planted", "--out-frames", "a", "--out-background", "b",
            "--out-foreground", "c", "--no-reflections", "--noise", "0.1",
        ]));
    }

    #[test]
    fn rejects_bad_values() {
        let base = ["decompose", "--input", "i", "--out-bg", "b", "--out-fg", "f"];
        for extra in [&["--lambda", "lots"][..], &["--method", "ica"], &["--rank", "-1"], &["--bogus", "1"]] {
            let args: Vec<&str> = base.iter().chain(extra).copied().collect();
            assert!(Cli::try_parse_from(std::iter::once("piv-rpca").chain(args)).is_err());
        }
        assert!(parse_reflection("1,2,3").is_err());
        assert!(Cli::try_parse_from([
            "piv-rpca", "generate", "--preset", "piv", "--out-frames", "a", "--out-background", "b",
            "--out-foreground", "c", "--depth", "12",
        ])
        .is_err());
    }
}
