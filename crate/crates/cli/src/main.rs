//! `shiptrack`: batch front end for tracking, evaluation, scenario
//! generation and similarity-metric ablations.
//!
//! Exit codes: 0 success, 2 usage or invalid configuration, 3 unreadable or
//! malformed input, 4 inputs that do not line up, 1 anything else.

mod ablate;
mod args;
mod error;
mod eval;
mod manifest;
mod metric_table;
mod synth;
mod track;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "shiptrack", version, about = "Multi-ship tracking with overlap-free similarity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a tracker over a MOT detection file.
    Track(track::TrackArgs),
    /// Score a MOT result file against ground truth.
    Eval(eval::EvalArgs),
    /// Generate a synthetic sea scene as MOT ground truth and detections.
    Synth(synth::SynthArgs),
    /// Sweep pipelines, similarity metrics and seeds over synthetic scenes.
    Ablate(ablate::AblateArgs),
    /// Print IoU, GIoU, DIoU and TIoU for box pairs.
    MetricTable(metric_table::MetricTableArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("SHIPTRACK_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Track(a) => track::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Synth(a) => synth::run(a),
        Command::Ablate(a) => ablate::run(a),
        Command::MetricTable(a) => metric_table::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
