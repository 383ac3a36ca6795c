use std::path::PathBuf;

use clap::Args;
use shiptrack::association::SimilarityMetricKind;
use shiptrack::evaluation::DEFAULT_IOU_THRESHOLD;
use shiptrack::experiment::{run_ablation, summarize_deltas, AblationSpec, DeltaSummary};
use shiptrack::tracker::Pipeline;

use crate::args::{MetricArg, PipelineArg, TrackerTuning};
use crate::error::{CliError, CliResult};
use crate::manifest::{default_manifest_path, write_file, AblationGrid, FileDigest, RunManifest};
use crate::synth::ScenarioArgs;

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "sort,byte")]
    pub pipelines: Vec<PipelineArg>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "iou,giou,diou,tiou")]
    pub metrics: Vec<MetricArg>,
    /// Scenario seeds; each one generates a fresh scene.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub seeds: Vec<u64>,
    #[command(flatten)]
    pub tuning: TrackerTuning,
    #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
    pub iou_threshold: f64,
    /// CSV with one row per (pipeline, metric, seed).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional JSON file with the TIoU-versus-IoU delta summary.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Manifest path (defaults to `<out stem>.manifest.json` beside --out).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

fn dedup<T: PartialEq + Copy>(items: &[T]) -> Vec<T> {
    let mut out = Vec::new();
    for &i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

pub fn run(args: AblateArgs) -> CliResult {
    let scenario = args.scenario.resolve()?;
    if !(0.0..=1.0).contains(&args.iou_threshold) {
        return Err(CliError::Usage(format!("--iou-threshold must lie in [0, 1], got {}", args.iou_threshold)));
    }
    let pipelines: Vec<Pipeline> = dedup(&args.pipelines).into_iter().map(Into::into).collect();
    let metrics: Vec<SimilarityMetricKind> = dedup(&args.metrics).into_iter().map(Into::into).collect();
    let seeds = dedup(&args.seeds);
    let tracker = args.tuning.config(Pipeline::Sort, SimilarityMetricKind::IoU)?;
    let spec = AblationSpec { scenario, tracker, pipelines, metrics, seeds, iou_threshold: args.iou_threshold };

    let rows = run_ablation(&spec).map_err(|e| CliError::Other(e.to_string()))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| CliError::output(&args.out, e))?;
    }
    let csv_bytes = w.into_inner().map_err(|e| CliError::output(&args.out, e))?;
    write_file(&args.out, &csv_bytes)?;

    let deltas = summarize_deltas(&rows, SimilarityMetricKind::TIoU, SimilarityMetricKind::IoU);
    for d in &deltas {
        println!("{}", summary_line(d));
    }
    if deltas.is_empty() {
        println!("no TIoU/IoU pairs in the grid; delta summary skipped");
    }

    let mut manifest = RunManifest::new("ablate");
    manifest.scenario = Some(spec.scenario);
    manifest.tracker = Some(spec.tracker);
    manifest.ablation = Some(AblationGrid {
        pipelines: spec.pipelines.clone(),
        metrics: spec.metrics.clone(),
        seeds: spec.seeds.clone(),
        iou_threshold: spec.iou_threshold,
    });
    if let Some(path) = &args.scenario.config {
        manifest.inputs.push(FileDigest::of_file(path)?);
    }
    manifest.outputs.push(FileDigest::of_bytes(&args.out, &csv_bytes));
    if let Some(path) = &args.summary {
        let mut json = serde_json::to_string_pretty(&deltas).map_err(|e| CliError::output(path, e))?;
        json.push('\n');
        write_file(path, json.as_bytes())?;
        manifest.outputs.push(FileDigest::of_bytes(path, json.as_bytes()));
    }
    manifest.write(&args.manifest.clone().unwrap_or_else(|| default_manifest_path(&args.out)))
}

fn summary_line(d: &DeltaSummary) -> String {
    let fmt_f = |v: &[f64]| v.iter().map(|x| format!("{x:+.4}")).collect::<Vec<_>>().join(" ");
    let ids: Vec<String> = d.ids_deltas.iter().map(|x| format!("{x:+}")).collect();
    format!(
        "{} {}-{}: median MOTA {:.4} vs {:.4}, median IDS {} vs {}, median IDF1 {:.4} vs {:.4}; per-seed dMOTA [{}] dIDS [{}] dIDF1 [{}]",
        d.pipeline,
        d.metric,
        d.baseline,
        d.median_mota,
        d.median_mota_baseline,
        d.median_ids,
        d.median_ids_baseline,
        d.median_idf1,
        d.median_idf1_baseline,
        fmt_f(&d.mota_deltas),
        ids.join(" "),
        fmt_f(&d.idf1_deltas),
    )
}
