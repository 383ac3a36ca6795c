use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use shiptrack::evaluation::{evaluate, MetricsReport, DEFAULT_IOU_THRESHOLD};
use shiptrack::mot_io::{self, FileKind};

use crate::args::OutputFormat;
use crate::error::{CliError, CliResult};
use crate::manifest::{FileDigest, RunManifest};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// MOT ground truth file.
    #[arg(long)]
    pub gt: PathBuf,
    /// MOT result file.
    #[arg(long)]
    pub results: PathBuf,
    /// Minimum IoU for a hypothesis to count as a hit.
    #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
    pub iou_threshold: f64,
    #[arg(long, value_enum, default_value = "table")]
    pub format: OutputFormat,
    /// Also write a run manifest here.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub fn run(args: EvalArgs) -> CliResult {
    if !(0.0..=1.0).contains(&args.iou_threshold) {
        return Err(CliError::Usage(format!("--iou-threshold must lie in [0, 1], got {}", args.iou_threshold)));
    }
    let gt = mot_io::parse_file(&args.gt, FileKind::GroundTruth).map_err(|e| CliError::input(&args.gt, e))?;
    let hyp = mot_io::parse_file(&args.results, FileKind::Results).map_err(|e| CliError::input(&args.results, e))?;
    let gt = mot_io::records_to_ground_truth(&gt);
    let results = mot_io::result_records_to_frames(&mot_io::records_to_result_records(&hyp));
    let report = evaluate(&gt, &results, args.iou_threshold).map_err(|e| CliError::Mismatch(e.to_string()))?;

    let text = render(&report, args.format)?;
    std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Other(e.to_string()))?;

    if let Some(path) = args.manifest {
        let mut manifest = RunManifest::new("eval");
        manifest.iou_threshold = Some(args.iou_threshold);
        manifest.inputs = vec![FileDigest::of_file(&args.gt)?, FileDigest::of_file(&args.results)?];
        manifest.write(&path)?;
    }
    Ok(())
}

pub fn render(r: &MetricsReport, format: OutputFormat) -> CliResult<String> {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(r).map_err(|e| CliError::Other(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.serialize(r).map_err(|e| CliError::Other(e.to_string()))?;
            let bytes = w.into_inner().map_err(|e| CliError::Other(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        OutputFormat::Table => {
            let ratios = [
                ("MOTA", r.mota),
                ("MOTP", r.motp),
                ("IDF1", r.idf1),
                ("Recall", r.recall),
                ("Precision", r.precision),
            ];
            let counts = [
                ("TP", r.tp),
                ("FP", r.fp),
                ("FN", r.fn_),
                ("IDS", r.ids),
                ("FM", r.fm),
                ("MT", r.mt),
                ("ML", r.ml),
                ("GT_count", r.gt_count),
                ("GT_tracks", r.gt_tracks),
                ("IDTP", r.idtp),
                ("IDFP", r.idfp),
                ("IDFN", r.idfn),
            ];
            let mut s = String::new();
            for (name, v) in ratios {
                s += &format!("{name:<10} {v:>10.4}\n");
            }
            for (name, v) in counts {
                s += &format!("{name:<10} {v:>10}\n");
            }
            Ok(s)
        }
    }
}
