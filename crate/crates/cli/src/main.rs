//! `emodrift`: ingest, train, sanity-check and compare slice embeddings.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use emodrift::drift::DistanceKind;

use crate::config::{RunConfig, WORKDIR_ENV};
use crate::output::Failure;

#[derive(Debug, Parser)]
#[command(name = "emodrift", version, about = "Semantic drift of emoji and words across time-sliced corpora")]
struct Cli {
    /// Flat `key = value` config file; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Working directory holding slices/, models/ and reports/.
    #[arg(long, global = true, env = WORKDIR_ENV, value_name = "DIR")]
    workdir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Any config key, e.g. `--set train.dim=50`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean newline-delimited JSON posts into per-slice corpus files.
    Ingest(IngestArgs),
    /// Build the shared vocabulary and train one model per slice.
    Train(TrainArgs),
    /// Run the analogy suite against every trained model.
    Sanity(SanityArgs),
    /// Compare two slice models, or every adjacent pair of months.
    Drift(DriftArgs),
    /// Similarity series, trends and neighborhood statistics.
    Timeseries(TimeseriesArgs),
    /// Generate a benchmark corpus with planted drift and score the detector.
    Synth(SynthArgs),
    /// Print the resolved configuration as `key = value` lines.
    Config,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Input file, or `-` for stdin. Defaults to the `corpus` config key.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// First month, `YYYY-MM`.
    #[arg(long)]
    pub grid_start: Option<String>,
    #[arg(long)]
    pub months: Option<u32>,
    /// Comma-separated platforms.
    #[arg(long)]
    pub platforms: Option<String>,
    /// Keep posts without any emoji.
    #[arg(long)]
    pub allow_no_emoji: bool,
    /// Fold skin-tone modifiers into the base emoji.
    #[arg(long)]
    pub collapse_skin_tones: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Train only these slices (the vocabulary still spans all of them).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SanityArgs {
    /// Suite file (`a b c expected category` per line); defaults to the bundled suite.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub min_hit_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DistanceArg {
    Cosine,
    Similarity,
}

impl From<DistanceArg> for DistanceKind {
    fn from(d: DistanceArg) -> Self {
        match d {
            DistanceArg::Cosine => DistanceKind::Cosine,
            DistanceArg::Similarity => DistanceKind::Similarity,
        }
    }
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("which").required(true).args(["from", "sweep"]))]
pub struct DriftArgs {
    /// Earlier slice, e.g. `2016-06/iOS`.
    #[arg(long, requires = "to")]
    pub from: Option<String>,
    #[arg(long, requires = "from")]
    pub to: Option<String>,
    /// Compare every pair of adjacent months per platform.
    #[arg(long)]
    pub sweep: bool,
    /// Must be at least 2 unless `--unsafe-beta`.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub unsafe_beta: bool,
    #[arg(long, value_enum)]
    pub distance: Option<DistanceArg>,
    /// Also write flagged pairs as CSV.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct TimeseriesArgs {
    /// Token pair `a,b`. Repeatable.
    #[arg(long = "pair", value_name = "A,B")]
    pub pairs: Vec<String>,
    /// Token for cohesiveness and neighbor overlap. Repeatable.
    #[arg(long = "token")]
    pub tokens: Vec<String>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Restrict to one platform.
    #[arg(long)]
    pub platform: Option<String>,
    /// Keep models the analogy gate rejected instead of leaving gaps.
    #[arg(long)]
    pub ignore_sanity: bool,
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ComparisonsArg {
    Spanning,
    Adjacent,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Where to write the corpus; defaults to `<workdir>/slices`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub docs: Option<usize>,
    #[arg(long)]
    pub months: Option<u32>,
    /// Plant nothing (null benchmark).
    #[arg(long)]
    pub no_drifts: bool,
    /// Only write the corpus and ground truth.
    #[arg(long)]
    pub generate_only: bool,
    #[arg(long, value_enum, default_value = "spanning")]
    pub comparisons: ComparisonsArg,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    if let Some(w) = &cli.workdir {
        cfg.workdir = w.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got `{o}`")))?;
        cfg.set(k, v).map_err(Failure::Usage)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = resolve(&cli)?;
    match &cli.command {
        Command::Ingest(a) => commands::ingest(&mut cfg, a),
        Command::Train(a) => commands::train(&mut cfg, a),
        Command::Sanity(a) => commands::sanity(&mut cfg, a),
        Command::Drift(a) => commands::drift(&mut cfg, a),
        Command::Timeseries(a) => commands::timeseries(&mut cfg, a),
        Command::Synth(a) => commands::synth(&mut cfg, a),
        Command::Config => {
            cfg.validate()?;
            print!("{}", cfg.to_text());
            Ok(())
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
            eprintln!("emodrift: {f}");
            ExitCode::from(f.code())
        }
    }
}
