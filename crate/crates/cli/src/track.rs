use std::path::PathBuf;

use clap::Args;
use shiptrack::experiment::run_tracker;
use shiptrack::mot_io::{self, FileKind};

use crate::args::{MetricArg, PipelineArg, TrackerTuning};
use crate::error::{CliError, CliResult};
use crate::manifest::{default_manifest_path, FileDigest, RunManifest};

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// MOT detection file (`frame,-1,x,y,w,h,conf,...`).
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long, value_enum, default_value = "sort")]
    pub pipeline: PipelineArg,
    #[arg(long, value_enum, default_value = "iou")]
    pub metric: MetricArg,
    #[command(flatten)]
    pub tuning: TrackerTuning,
    /// Where to write the MOT result file.
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path (defaults to `<out stem>.manifest.json` beside --out).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub fn run(args: TrackArgs) -> CliResult {
    let config = args.tuning.config(args.pipeline.into(), args.metric.into())?;
    let input = FileDigest::of_file(&args.detections)?;
    let records =
        mot_io::parse_file(&args.detections, FileKind::Detections).map_err(|e| CliError::input(&args.detections, e))?;

    // Every frame up to the last one is stepped, so gaps coast.
    let by_frame = mot_io::records_to_detections(&records);
    let last = by_frame.keys().next_back().copied().unwrap_or(0);
    let frames: Vec<_> = (1..=last).map(|f| by_frame.get(&f).cloned().unwrap_or_default()).collect();
    log::info!("tracking {} detections over {last} frames", records.len());

    let results = run_tracker(&frames, &config).map_err(|e| CliError::Other(e.to_string()))?;
    let mut bytes = Vec::new();
    mot_io::write_results(&mot_io::frames_to_result_records(&results), &mut bytes)
        .map_err(|e| CliError::output(&args.out, e))?;
    crate::manifest::write_file(&args.out, &bytes)?;

    let mut manifest = RunManifest::new("track");
    manifest.tracker = Some(config);
    manifest.inputs.push(input);
    manifest.outputs.push(FileDigest::of_bytes(&args.out, &bytes));
    manifest.write(&args.manifest.unwrap_or_else(|| default_manifest_path(&args.out)))
}
