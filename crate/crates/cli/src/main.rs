//! `rfnet`: simulate circuits, build datasets, train and compose surrogate
//! models, size circuits and compare training strategies.
//!
//! Every command writes its outputs and a `<stem>.<command>.manifest.json` into
//! `--out`. `rfnet replay MANIFEST` re-runs a recorded command into another
//! directory and checks the outputs byte for byte.

mod compare;
mod context;
mod data;
mod models;
mod simulate;
mod size;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Parser, Subcommand};
use rfnet::twoport::{FrequencyGrid, ReferenceImpedance};

use context::{sha256_hex, usage_error, Classify, CmdResult, Ctx, Exit, RunManifest, MANIFEST_SCHEMA};

#[derive(Debug, Parser)]
#[command(name = "rfnet", version, about = "Two-port circuit simulation, surrogate models and sizing")]
pub struct Cli {
    /// Base seed; commands derive their streams from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Reference impedance in ohms.
    #[arg(long, global = true, default_value_t = 50.0)]
    z0: f64,
    /// Sweep grid `lo:hi:points[:log]` in Hz.
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// JSON file overriding the command's default configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep a netlist: S-parameters and figures per grid point.
    Simulate(simulate::SimulateArgs),
    /// Generate sub-model or main-model training data.
    GenData(data::GenDataArgs),
    /// Train a sub-model (E-network parameters to S-parameters).
    TrainSub(models::TrainArgs),
    /// Train a main model (S-parameters and residual features to figures).
    TrainMain(models::TrainArgs),
    /// Score a model or model bank on a dataset.
    Eval(models::EvalArgs),
    /// Bundle sub-models and a main model into a model bank.
    Compose(models::ComposeArgs),
    /// Size a netlist against performance targets with NSGA-II.
    Size(size::SizeArgs),
    /// Training-data sweep of the four model strategies.
    Compare(compare::CompareArgs),
    /// Re-run a manifest's command and compare outputs byte for byte.
    Replay { manifest: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::GenData(_) => "gen-data",
            Command::TrainSub(_) => "train-sub",
            Command::TrainMain(_) => "train-main",
            Command::Eval(_) => "eval",
            Command::Compose(_) => "compose",
            Command::Size(_) => "size",
            Command::Compare(_) => "compare",
            Command::Replay { .. } => "replay",
        }
    }
}

/// Settings shared by every command.
pub struct Global {
    pub z0: ReferenceImpedance,
    grid: Option<FrequencyGrid>,
}

impl Global {
    pub fn grid(&self) -> FrequencyGrid {
        self.grid.clone().unwrap_or_else(|| {
            FrequencyGrid::linear(
                FrequencyGrid::DEFAULT_MIN_HZ,
                FrequencyGrid::DEFAULT_MAX_HZ,
                FrequencyGrid::DEFAULT_POINTS,
            )
            .expect("default grid is valid")
        })
    }
}

/// Drops `--out DIR` / `--out=DIR` so a manifest can be replayed elsewhere.
fn strip_out(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}

fn run(cli: Cli, args: Vec<String>) -> CmdResult<()> {
    let z0 = ReferenceImpedance::new(cli.z0).usage()?;
    let grid = cli.grid.as_deref().map(str::parse::<FrequencyGrid>).transpose().usage()?;
    let global = Global { z0, grid };
    if let Command::Replay { manifest } = &cli.command {
        return replay(manifest, &cli.out);
    }
    let ctx = Ctx::new(cli.command.name(), args, cli.seed, cli.out.clone(), cli.config.as_deref())?;
    match cli.command {
        Command::Simulate(a) => simulate::run(ctx, &global, a),
        Command::GenData(a) => data::run(ctx, &global, a),
        Command::TrainSub(a) => models::train(ctx, a, rfnet::surrogate::ModelRole::Sub),
        Command::TrainMain(a) => models::train(ctx, a, rfnet::surrogate::ModelRole::Main),
        Command::Eval(a) => models::eval(ctx, a),
        Command::Compose(a) => models::compose(ctx, a),
        Command::Size(a) => size::run(ctx, &global, a),
        Command::Compare(a) => compare::run(ctx, &global, a),
        Command::Replay { .. } => unreachable!(),
    }
}

fn replay(manifest: &Path, out: &Path) -> CmdResult<()> {
    let text = std::fs::read_to_string(manifest).with_context(|| format!("reading {}", manifest.display())).usage()?;
    let m: RunManifest = serde_json::from_str(&text).context("not a run manifest").usage()?;
    if m.schema != MANIFEST_SCHEMA {
        return usage_error(format!("unsupported manifest schema `{}`", m.schema));
    }
    let recorded_dir = manifest.parent().unwrap_or(Path::new("."));
    if std::fs::canonicalize(out).ok() == std::fs::canonicalize(recorded_dir).ok() {
        return usage_error("replay needs an --out directory other than the manifest's");
    }
    let mut argv = vec!["rfnet".to_string()];
    argv.extend(m.args.iter().cloned());
    let mut cli = Cli::try_parse_from(&argv).context("recorded arguments no longer parse").usage()?;
    cli.out = out.to_path_buf();
    run(cli, m.args.clone())?;

    let mut differ = 0;
    for rec in &m.outputs {
        let status = match std::fs::read(out.join(&rec.path)) {
            Ok(bytes) if sha256_hex(&bytes) == rec.sha256 => "identical",
            Ok(_) => "DIFFERENT",
            Err(_) => "MISSING",
        };
        if status != "identical" {
            differ += 1;
        }
        println!("{status} {}", rec.path);
    }
    if differ > 0 {
        return Err(Exit::Domain(anyhow::anyhow!("{differ} of {} outputs differ from the manifest", m.outputs.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let raw: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match run(cli, strip_out(&raw)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
