//! `fusionframe`: generate fusion frame fixtures, check their bounds, and run
//! reconstruction, perturbation and sensor-network experiments on them.
//!
//! Exit status: 0 on success, 1 for usage and I/O problems, 2 when the input
//! is mathematically unsuitable (not a fusion frame, failed hypothesis).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fusionframe::commands::{self, GenerateKind, PerturbConfig, ReconConfig, SimulateConfig};
use fusionframe::fixture::Fixture;
use fusionframe::generate::RandomSpec;
use fusionframe::perturb::PerturbMode;
use fusionframe::FusionFrameSystem;
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(name = "fusionframe", version, about = "Fusion frame bounds, reconstruction and perturbation experiments")]
struct Cli {
    /// TOML file supplying defaults for any flag; command-line flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a random or structured fixture as JSON.
    Generate(GenerateArgs),
    /// Report bounds, tightness and local/global bound transfer as JSON.
    Check(IoArgs),
    /// Reconstruct one signal with every method; CSV.
    Recon(ReconArgs),
    /// Perturbation sweep replaying the robustness bounds; CSV per trial.
    Perturb(PerturbArgs),
    /// Noisy measurements with subspace dropout over a sigma x dropout grid; CSV.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Kind {
    Random,
    Split,
    Orthonormal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    SubspaceRotate,
    LocalFrameJitter,
}

impl From<ModeArg> for PerturbMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::SubspaceRotate => PerturbMode::SubspaceRotate,
            ModeArg::LocalFrameJitter => PerturbMode::LocalFrameJitter,
        }
    }
}

#[derive(Args, Debug)]
struct IoArgs {
    /// Fixture JSON.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// Ambient dimension M.
    #[arg(long)]
    dim: Option<usize>,
    /// Number of subspaces (random) or blocks (split, orthonormal).
    #[arg(long)]
    subspaces: Option<usize>,
    /// Dimension of every random subspace.
    #[arg(long)]
    subspace_dim: Option<usize>,
    /// Local frame vectors per random subspace.
    #[arg(long)]
    local_size: Option<usize>,
    /// Draw weights from [0.5, 2] instead of using 1.
    #[arg(long)]
    random_weights: bool,
    /// Frame vectors to split (split).
    #[arg(long)]
    vectors: Option<usize>,
    /// Extra indices shared with the next block (split).
    #[arg(long)]
    overlap: Option<usize>,
}

#[derive(Args, Debug)]
struct ReconArgs {
    #[command(flatten)]
    io: IoArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated signal; a seeded random unit vector when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    signal: Option<Vec<f64>>,
    /// Gaussian noise on each local coefficient.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Stop iterating once the certified bound reaches this value.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Fill the wall_time_s column (makes output run-dependent).
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug)]
struct PerturbArgs {
    #[command(flatten)]
    io: IoArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Maximal rotation angle or jitter standard deviation.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    trials: Option<usize>,
    /// Also write the containment summary as JSON here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    io: IoArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated noise levels.
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<f64>>,
    /// Comma-separated dropout probabilities.
    #[arg(long, value_delimiter = ',')]
    dropout: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }

    fn single(self, flag: &str) -> Result<f64, Failure> {
        match self {
            OneOrMany::One(x) => Ok(x),
            OneOrMany::Many(v) if v.len() == 1 => Ok(v[0]),
            OneOrMany::Many(_) => Err(Failure::Usage(format!("--{flag} takes a single value here"))),
        }
    }
}

/// Keys mirror the long flag names.
#[derive(Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct ConfigFile {
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    seed: Option<u64>,
    kind: Option<Kind>,
    dim: Option<usize>,
    subspaces: Option<usize>,
    subspace_dim: Option<usize>,
    local_size: Option<usize>,
    random_weights: Option<bool>,
    vectors: Option<usize>,
    overlap: Option<usize>,
    signal: Option<Vec<f64>>,
    sigma: Option<OneOrMany>,
    max_iterations: Option<usize>,
    tolerance: Option<f64>,
    timings: Option<bool>,
    noise: Option<f64>,
    mode: Option<ModeArg>,
    trials: Option<usize>,
    summary: Option<PathBuf>,
    dropout: Option<OneOrMany>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Math(fusionframe::Error),
}

impl From<fusionframe::Error> for Failure {
    fn from(e: fusionframe::Error) -> Self {
        if e.is_mathematical() {
            Failure::Math(e)
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Io(_) => 1,
            Failure::Math(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Io(m) => f.write_str(m),
            Failure::Math(e) => write!(f, "{e}"),
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile, Failure> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => toml::from_str(&read_text(p)?)
            .map_err(|e| Failure::Usage(format!("config {}: {e}", p.display()))),
    }
}

fn load_system(input: Option<PathBuf>) -> Result<FusionFrameSystem, Failure> {
    let path = input.ok_or_else(|| Failure::Usage("--input is required".into()))?;
    let fixture = Fixture::from_json(&read_text(&path)?)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    fixture
        .to_system()
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Io(format!("cannot write to stdout: {e}")))
        }
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("--{flag} is required")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Generate(a) => {
            let seed = a.seed.or(cfg.seed).unwrap_or(0);
            let kind = match a.kind.or(cfg.kind).unwrap_or(Kind::Random) {
                Kind::Random => {
                    let dim = require(a.dim.or(cfg.dim), "dim")?;
                    let count = require(a.subspaces.or(cfg.subspaces), "subspaces")?;
                    let d = require(a.subspace_dim.or(cfg.subspace_dim), "subspace-dim")?;
                    let n = a.local_size.or(cfg.local_size).unwrap_or(d);
                    GenerateKind::Random(RandomSpec {
                        random_weights: a.random_weights || cfg.random_weights.unwrap_or(false),
                        ..RandomSpec::uniform(dim, count, d, n)
                    })
                }
                Kind::Split => GenerateKind::Split {
                    ambient_dim: require(a.dim.or(cfg.dim), "dim")?,
                    vectors: require(a.vectors.or(cfg.vectors), "vectors")?,
                    blocks: require(a.subspaces.or(cfg.subspaces), "subspaces")?,
                    overlap: a.overlap.or(cfg.overlap).unwrap_or(0),
                },
                Kind::Orthonormal => GenerateKind::Orthonormal {
                    ambient_dim: require(a.dim.or(cfg.dim), "dim")?,
                    blocks: require(a.subspaces.or(cfg.subspaces), "subspaces")?,
                },
            };
            let text = commands::cmd_generate(&kind, seed)?;
            emit(a.output.or(cfg.output).as_deref(), &text)
        }
        Command::Check(io) => {
            let ffs = load_system(io.input.or(cfg.input))?;
            let (text, status) = commands::cmd_check(&ffs);
            emit(io.output.or(cfg.output).as_deref(), &text)?;
            status.map_err(Failure::from)
        }
        Command::Recon(a) => {
            let ffs = load_system(a.io.input.or(cfg.input))?;
            let defaults = ReconConfig::default();
            let sigma = match (a.sigma, cfg.sigma) {
                (Some(s), _) => s,
                (None, Some(s)) => s.single("sigma")?,
                (None, None) => defaults.sigma,
            };
            let rc = ReconConfig {
                seed: a.seed.or(cfg.seed).unwrap_or(defaults.seed),
                signal: a.signal.or(cfg.signal),
                sigma,
                max_iterations: a.max_iterations.or(cfg.max_iterations).unwrap_or(defaults.max_iterations),
                tolerance: a.tolerance.or(cfg.tolerance).unwrap_or(defaults.tolerance),
                timings: a.timings || cfg.timings.unwrap_or(false),
            };
            let text = commands::cmd_recon(&ffs, &rc)?;
            emit(a.io.output.or(cfg.output).as_deref(), &text)
        }
        Command::Perturb(a) => {
            let ffs = load_system(a.io.input.or(cfg.input))?;
            let pc = PerturbConfig {
                seed: a.seed.or(cfg.seed).unwrap_or(0),
                noise_scale: a.noise.or(cfg.noise).unwrap_or(0.01),
                mode: a.mode.or(cfg.mode).unwrap_or(ModeArg::SubspaceRotate).into(),
                trials: a.trials.or(cfg.trials).unwrap_or(100),
            };
            let (text, summary) = commands::cmd_perturb(&ffs, &pc)?;
            emit(a.io.output.or(cfg.output).as_deref(), &text)?;
            let rate = summary
                .containment_rate
                .map(|r| format!("{:.1}%", 100.0 * r))
                .unwrap_or_else(|| "n/a".into());
            eprintln!(
                "{} trials, {} discarded, {} passed the hypothesis gate, containment {rate}",
                summary.trials, summary.discarded, summary.hypothesis_passed
            );
            if let Some(path) = a.summary.or(cfg.summary) {
                let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
                json.push('\n');
                emit(Some(&path), &json)?;
            }
            Ok(())
        }
        Command::Simulate(a) => {
            let ffs = load_system(a.io.input.or(cfg.input))?;
            let sc = SimulateConfig {
                seed: a.seed.or(cfg.seed).unwrap_or(0),
                sigmas: a.sigma.or(cfg.sigma.map(OneOrMany::into_vec)).unwrap_or_else(|| vec![0.0]),
                dropouts: a.dropout.or(cfg.dropout.map(OneOrMany::into_vec)).unwrap_or_else(|| vec![0.0]),
                trials: a.trials.or(cfg.trials).unwrap_or(100),
            };
            let text = commands::cmd_simulate(&ffs, &sc)?;
            emit(a.io.output.or(cfg.output).as_deref(), &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
