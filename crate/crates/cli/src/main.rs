//! Command-line workflow for occlusion-aware detection datasets: convert
//! annotation formats, measure occlusion statistics, draw from them,
//! paste donors under constraints, synthesize annotated scenes, and score
//! predictions.
//!
//! Every run writes `manifest.json` (tool, version, subcommand, resolved
//! config) into its output directory; passing that manifest back as
//! `--config` with a fresh `--out` reproduces the run byte-identically.
//! Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

mod commands;
mod config;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "shelfgen",
    version,
    about = "Occlusion-aware dataset tooling: convert, measure, sample, paste, synthesize, score"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert between dataset JSON and a text-label directory.
    Convert(ConvertArgs),
    /// Infer occlusion events from a dataset (or load recorded events) and
    /// estimate the per-category histogram.
    Stats(StatsArgs),
    /// Draw occlusion cells from a histogram file.
    Sample(SampleArgs),
    /// Paste donor crops onto images of a category so each paste realizes a
    /// drawn occlusion cell, rewriting annotations to visible regions.
    Augment(AugmentArgs),
    /// Synthesize annotated shelf scenes with exact occlusion events.
    Synth(SynthArgs),
    /// Score a prediction file against ground truth.
    Eval(EvalArgs),
    /// Confidence-distribution CSV for a prediction file.
    Report(ReportArgs),
}

#[derive(Args)]
pub struct ConvertArgs {
    /// JSON config document; flags override its fields.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Source dataset JSON (direction: JSON to labels).
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Output label directory (direction: JSON to labels).
    #[arg(long, value_name = "DIR")]
    out_yolo: Option<PathBuf>,
    /// Source label directory (direction: labels to JSON).
    #[arg(long, value_name = "DIR")]
    in_yolo: Option<PathBuf>,
    /// Output directory (direction: labels to JSON).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct StatsArgs {
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Dataset JSON to infer events from (exclusive with --events).
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Recorded event JSONL to estimate from (exclusive with --in).
    #[arg(long, value_name = "FILE")]
    events: Option<PathBuf>,
    /// Target category id.
    #[arg(long, value_name = "ID")]
    category: Option<i64>,
    /// Output directory for histogram.json and manifest.json.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SampleArgs {
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Histogram JSON produced by `stats`.
    #[arg(long, value_name = "FILE")]
    hist: Option<PathBuf>,
    /// Number of draws.
    #[arg(short = 'n', long = "count", value_name = "N")]
    count: Option<usize>,
    /// Seed (default 0, recorded in the manifest).
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Output directory for samples.jsonl and manifest.json.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct AugmentArgs {
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Base dataset JSON.
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Directory holding the dataset's image files.
    #[arg(long, value_name = "DIR")]
    images: Option<PathBuf>,
    /// Occlusion histogram JSON; inferred from the dataset when omitted.
    #[arg(long, value_name = "FILE")]
    hist: Option<PathBuf>,
    /// Category receiving pastes.
    #[arg(long, value_name = "ID")]
    category: Option<i64>,
    /// Number of augmented images to produce.
    #[arg(long, value_name = "N")]
    count: Option<usize>,
    /// Seed; required (also satisfiable via config).
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Worker threads (0 = library default). Outputs are identical for any
    /// worker count.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Number of scenes (overrides scene.n_scenes).
    #[arg(long, value_name = "N")]
    scenes: Option<usize>,
    /// Seed; required (also satisfiable via config).
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Worker threads (0 = library default).
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Skip rendering; emit only annotations and events.
    #[arg(long)]
    annotations_only: bool,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Ground-truth dataset JSON.
    #[arg(long, value_name = "FILE")]
    gt: Option<PathBuf>,
    /// Prediction JSONL: one {image_id, category_id, bbox, score} per line.
    #[arg(long, value_name = "FILE")]
    pred: Option<PathBuf>,
    /// Confidence threshold for threshold-indexed rates; repeatable.
    #[arg(long = "tau", value_name = "T")]
    taus: Vec<f64>,
    /// Matching IoU threshold.
    #[arg(long, value_name = "X")]
    iou_min: Option<f64>,
    /// Minimum confidence for pass-rate matching.
    #[arg(long, value_name = "X")]
    conf_min: Option<f64>,
    /// Restrict the report to one category.
    #[arg(long, value_name = "ID")]
    category: Option<i64>,
    /// Output directory for report.json, report.csv, and manifest.json.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ReportArgs {
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Prediction JSONL.
    #[arg(long, value_name = "FILE")]
    pred: Option<PathBuf>,
    /// Category to histogram.
    #[arg(long, value_name = "ID")]
    category: Option<i64>,
    /// Confidence bin width.
    #[arg(long, value_name = "W")]
    bin_width: Option<f64>,
    /// Output directory for confidence.csv and manifest.json.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    // Die quietly when stdout closes early (`shelfgen eval … | head`)
    // instead of panicking mid-write; Rust ignores SIGPIPE by default.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }

    let cli = Cli::parse();
    let result = match cli.command {
        Command::Convert(args) => commands::convert::run(args),
        Command::Stats(args) => commands::stats::run(args),
        Command::Sample(args) => commands::sample::run(args),
        Command::Augment(args) => commands::augment::run(args),
        Command::Synth(args) => commands::synth::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Report(args) => commands::report::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
