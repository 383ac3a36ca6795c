use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use shiptrack::experiment::{demo_pairs, metric_table, MetricRow};
use shiptrack::geometry::BBox;

use crate::args::OutputFormat;
use crate::error::{CliError, CliResult};
use crate::manifest::{FileDigest, RunManifest};

#[derive(Debug, Args)]
pub struct MetricTableArgs {
    /// File of box pairs, one per line: `x1 y1 w1 h1 x2 y2 w2 h2` (commas or
    /// whitespace; `#` starts a comment). Uses a built-in set when omitted.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: OutputFormat,
    /// Also write a run manifest here.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

fn parse_pairs(text: &str) -> Result<Vec<(String, BBox, BBox)>, String> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|e| format!("line {line_no}: `{t}`: {e}")))
            .collect::<Result<_, _>>()?;
        if nums.len() != 8 {
            return Err(format!("line {line_no}: expected 8 numbers, found {}", nums.len()));
        }
        let a = BBox::new(nums[0], nums[1], nums[2], nums[3]).map_err(|e| format!("line {line_no}: {e}"))?;
        let b = BBox::new(nums[4], nums[5], nums[6], nums[7]).map_err(|e| format!("line {line_no}: {e}"))?;
        pairs.push((format!("line {line_no}"), a, b));
    }
    Ok(pairs)
}

fn fmt_box(b: &BBox) -> String {
    format!("({},{},{},{})", b.x(), b.y(), b.width(), b.height())
}

pub fn render(rows: &[MetricRow], format: OutputFormat) -> CliResult<String> {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(rows).map_err(|e| CliError::Other(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["regime", "label", "box_a", "box_b", "iou", "giou", "diou", "tiou"])
                .map_err(|e| CliError::Other(e.to_string()))?;
            for r in rows {
                w.write_record([
                    r.regime.to_string(),
                    r.label.clone(),
                    fmt_box(&r.a),
                    fmt_box(&r.b),
                    format!("{:.4}", r.iou),
                    format!("{:.4}", r.giou),
                    format!("{:.4}", r.diou),
                    format!("{:.4}", r.tiou),
                ])
                .map_err(|e| CliError::Other(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Other(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        OutputFormat::Table => {
            let mut s = format!(
                "{:<7} {:<16} {:<18} {:<18} {:>8} {:>8} {:>8} {:>8}\n",
                "regime", "pair", "box a", "box b", "IoU", "GIoU", "DIoU", "TIoU"
            );
            for r in rows {
                s += &format!(
                    "{:<7} {:<16} {:<18} {:<18} {:>8.4} {:>8.4} {:>8.4} {:>8.4}\n",
                    r.regime.to_string(),
                    r.label,
                    fmt_box(&r.a),
                    fmt_box(&r.b),
                    r.iou,
                    r.giou,
                    r.diou,
                    r.tiou
                );
            }
            Ok(s)
        }
    }
}

pub fn run(args: MetricTableArgs) -> CliResult {
    let mut manifest = RunManifest::new("metric-table");
    let pairs = match &args.pairs {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| CliError::input(path, e))?;
            manifest.inputs.push(FileDigest::of_bytes(path, &bytes));
            let text = String::from_utf8(bytes).map_err(|e| CliError::input(path, e))?;
            parse_pairs(&text).map_err(|e| CliError::input(path, e))?
        }
        None => demo_pairs(),
    };
    let text = render(&metric_table(&pairs), args.format)?;
    std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Other(e.to_string()))?;
    if let Some(path) = &args.manifest {
        manifest.write(path)?;
    }
    Ok(())
}
