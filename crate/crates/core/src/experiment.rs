//! Batch drivers: run a tracker over a sequence, sweep pipeline × metric ×
//! seed over synthetic scenarios, and tabulate the four similarity scores.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::SimilarityMetricKind;
use crate::evaluation::{evaluate, EvalError, GtEntry};
use crate::geometry::{diou, giou, iou, tiou, BBox};
use crate::synth::{generate, regime_stats, ScenarioConfig, SynthError};
use crate::tracker::{Detection, FrameResult, Pipeline, Tracker, TrackerConfig, TrackerError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Runs a fresh tracker over `frames`, where `frames[i]` holds the
/// detections of frame `i + 1`.
pub fn run_tracker(frames: &[Vec<Detection>], config: &TrackerConfig) -> Result<Vec<FrameResult>, TrackerError> {
    let mut tracker = Tracker::new(*config)?;
    frames.iter().enumerate().map(|(i, dets)| tracker.step(i as u64 + 1, dets)).collect()
}

/// Runs the tracker over a ground-truth-aligned sequence and scores it.
pub fn track_and_evaluate(
    gt: &[GtEntry],
    frames: &[Vec<Detection>],
    config: &TrackerConfig,
    iou_threshold: f64,
) -> Result<crate::evaluation::MetricsReport, ExperimentError> {
    let results = run_tracker(frames, config)?;
    Ok(evaluate(gt, &results, iou_threshold)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationSpec {
    pub scenario: ScenarioConfig,
    pub tracker: TrackerConfig,
    pub pipelines: Vec<Pipeline>,
    pub metrics: Vec<SimilarityMetricKind>,
    /// Each seed replaces `scenario.seed`.
    pub seeds: Vec<u64>,
    pub iou_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub pipeline: Pipeline,
    pub metric: SimilarityMetricKind,
    pub seed: u64,
    pub mota: f64,
    pub idf1: f64,
    pub ids: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub recall: f64,
    pub zero_iou_fraction: f64,
}

/// Runs every (pipeline, metric, seed) cell. Scenarios are generated once
/// per seed and cells run in parallel; rows come back in pipeline, metric,
/// seed order as listed in `spec`.
pub fn run_ablation(spec: &AblationSpec) -> Result<Vec<AblationRow>, ExperimentError> {
    let scenarios = spec
        .seeds
        .par_iter()
        .map(|&seed| {
            let s = generate(&ScenarioConfig { seed, ..spec.scenario })?;
            let zero = regime_stats(&s).zero_iou_fraction;
            Ok((s, zero))
        })
        .collect::<Result<Vec<_>, SynthError>>()?;

    let cells: Vec<(Pipeline, SimilarityMetricKind, usize)> = spec
        .pipelines
        .iter()
        .flat_map(|&p| spec.metrics.iter().flat_map(move |&m| (0..spec.seeds.len()).map(move |i| (p, m, i))))
        .collect();

    cells
        .par_iter()
        .map(|&(pipeline, metric, i)| {
            let (scenario, zero_iou_fraction) = &scenarios[i];
            let config = TrackerConfig { pipeline, metric, ..spec.tracker };
            let report = track_and_evaluate(&scenario.gt, &scenario.detections, &config, spec.iou_threshold)?;
            Ok(AblationRow {
                pipeline,
                metric,
                seed: spec.seeds[i],
                mota: report.mota,
                idf1: report.idf1,
                ids: report.ids,
                fp: report.fp,
                fn_: report.fn_,
                recall: report.recall,
                zero_iou_fraction: *zero_iou_fraction,
            })
        })
        .collect()
}

/// Per-pipeline comparison of one metric against a baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub pipeline: Pipeline,
    pub metric: SimilarityMetricKind,
    pub baseline: SimilarityMetricKind,
    pub seeds: Vec<u64>,
    /// `metric − baseline` per seed.
    pub mota_deltas: Vec<f64>,
    pub idf1_deltas: Vec<f64>,
    pub ids_deltas: Vec<i64>,
    pub median_mota: f64,
    pub median_mota_baseline: f64,
    pub median_ids: f64,
    pub median_ids_baseline: f64,
    pub median_idf1: f64,
    pub median_idf1_baseline: f64,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Pairs rows of `metric` with rows of `baseline` by (pipeline, seed). Pipelines
/// lacking either metric are skipped.
pub fn summarize_deltas(
    rows: &[AblationRow],
    metric: SimilarityMetricKind,
    baseline: SimilarityMetricKind,
) -> Vec<DeltaSummary> {
    type Slot<'a> = (Option<&'a AblationRow>, Option<&'a AblationRow>);
    let mut by_key: BTreeMap<(Pipeline, u64), Slot> = BTreeMap::new();
    for r in rows {
        let slot = by_key.entry((r.pipeline, r.seed)).or_default();
        if r.metric == metric {
            slot.0 = Some(r);
        }
        if r.metric == baseline {
            slot.1 = Some(r);
        }
    }
    let mut per_pipeline: BTreeMap<Pipeline, Vec<(&AblationRow, &AblationRow)>> = BTreeMap::new();
    for ((p, _), pair) in by_key {
        if let (Some(a), Some(b)) = pair {
            per_pipeline.entry(p).or_default().push((a, b));
        }
    }
    per_pipeline
        .into_iter()
        .map(|(pipeline, pairs)| {
            let col = |f: &dyn Fn(&AblationRow) -> f64, first: bool| -> Vec<f64> {
                pairs.iter().map(|(a, b)| f(if first { a } else { b })).collect()
            };
            DeltaSummary {
                pipeline,
                metric,
                baseline,
                seeds: pairs.iter().map(|(a, _)| a.seed).collect(),
                mota_deltas: pairs.iter().map(|(a, b)| a.mota - b.mota).collect(),
                idf1_deltas: pairs.iter().map(|(a, b)| a.idf1 - b.idf1).collect(),
                ids_deltas: pairs.iter().map(|(a, b)| a.ids as i64 - b.ids as i64).collect(),
                median_mota: median(&col(&|r| r.mota, true)),
                median_mota_baseline: median(&col(&|r| r.mota, false)),
                median_ids: median(&col(&|r| r.ids as f64, true)),
                median_ids_baseline: median(&col(&|r| r.ids as f64, false)),
                median_idf1: median(&col(&|r| r.idf1, true)),
                median_idf1_baseline: median(&col(&|r| r.idf1, false)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapRegime {
    Large,
    Small,
    None,
}

impl OverlapRegime {
    /// Large from IoU 0.5 up, none at exactly zero.
    pub fn of_iou(v: f64) -> Self {
        if v >= 0.5 {
            Self::Large
        } else if v > 0.0 {
            Self::Small
        } else {
            Self::None
        }
    }
}

impl fmt::Display for OverlapRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Large => "large",
            Self::Small => "small",
            Self::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub label: String,
    pub a: BBox,
    pub b: BBox,
    pub iou: f64,
    pub giou: f64,
    pub diou: f64,
    pub tiou: f64,
    pub regime: OverlapRegime,
}

impl MetricRow {
    pub fn new(label: impl Into<String>, a: BBox, b: BBox) -> Self {
        let v = iou(&a, &b);
        Self {
            label: label.into(),
            a,
            b,
            iou: v,
            giou: giou(&a, &b),
            diou: diou(&a, &b),
            tiou: tiou(&a, &b),
            regime: OverlapRegime::of_iou(v),
        }
    }
}

/// Built-in box pairs: a shape-discrimination pair with equal IoU, plus
/// representatives of each overlap regime.
pub fn demo_pairs() -> Vec<(String, BBox, BBox)> {
    let b = |x, y, w, h| BBox::new(x, y, w, h).expect("demo box");
    vec![
        ("identical".into(), b(0.0, 0.0, 4.0, 3.0), b(0.0, 0.0, 4.0, 3.0)),
        ("large-shift".into(), b(0.0, 0.0, 10.0, 10.0), b(1.0, 1.0, 10.0, 10.0)),
        ("large-vertical".into(), b(0.0, 0.0, 6.0, 7.0), b(0.0, 1.0, 6.0, 7.0)),
        ("diagonal-square".into(), b(0.0, 0.0, 2.0, 2.0), b(1.0, 1.0, 2.0, 2.0)),
        ("diagonal-flat".into(), b(0.0, 0.0, 2.0, 2.0), b(1.0, 1.0, 4.0, 1.0)),
        ("corner-touch".into(), b(0.0, 0.0, 1.0, 1.0), b(1.0, 1.0, 1.0, 1.0)),
        ("near-miss".into(), b(0.0, 0.0, 7.0, 8.0), b(7.0, 9.0, 7.0, 8.0)),
        ("far-miss".into(), b(0.0, 0.0, 4.0, 7.0), b(9.0, 7.0, 4.0, 7.0)),
    ]
}

/// Rows sorted by regime (large, small, none), keeping input order within a
/// regime.
pub fn metric_table(pairs: &[(String, BBox, BBox)]) -> Vec<MetricRow> {
    let mut rows: Vec<MetricRow> = pairs.iter().map(|(l, a, b)| MetricRow::new(l.clone(), *a, *b)).collect();
    rows.sort_by_key(|r| r.regime);
    rows
}
