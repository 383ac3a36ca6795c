//! Flag groups shared by several subcommands.

use clap::{Args, ValueEnum};
use shiptrack::association::{GateMode, SimilarityMetricKind, DEFAULT_GATE};
use shiptrack::motion::NoiseConfig;
use shiptrack::tracker::{Matcher, Pipeline, TrackerConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PipelineArg {
    Sort,
    Byte,
}

impl From<PipelineArg> for Pipeline {
    fn from(p: PipelineArg) -> Self {
        match p {
            PipelineArg::Sort => Pipeline::Sort,
            PipelineArg::Byte => Pipeline::Byte,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Iou,
    Giou,
    Diou,
    Tiou,
}

impl From<MetricArg> for SimilarityMetricKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Iou => SimilarityMetricKind::IoU,
            MetricArg::Giou => SimilarityMetricKind::GIoU,
            MetricArg::Diou => SimilarityMetricKind::DIoU,
            MetricArg::Tiou => SimilarityMetricKind::TIoU,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GateModeArg {
    Post,
    Pre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatcherArg {
    Hungarian,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
    Csv,
}

/// Tracker settings other than pipeline and metric.
#[derive(Debug, Clone, Args)]
pub struct TrackerTuning {
    /// Minimum similarity for a match.
    #[arg(long, default_value_t = DEFAULT_GATE)]
    pub gate: f64,
    /// Minimum similarity in the second Byte stage (defaults to --gate).
    #[arg(long)]
    pub second_gate: Option<f64>,
    /// Apply the gate after solving (post) or forbid sub-gate pairs (pre).
    #[arg(long, value_enum, default_value = "post")]
    pub gate_mode: GateModeArg,
    #[arg(long, value_enum, default_value = "hungarian")]
    pub matcher: MatcherArg,
    /// Detections at or above this confidence are associated first and may
    /// start tracks.
    #[arg(long, default_value_t = 0.6)]
    pub high_conf: f64,
    /// Detections below this confidence are discarded.
    #[arg(long, default_value_t = 0.1)]
    pub low_conf: f64,
    /// Frames a lost track is kept before removal.
    #[arg(long, default_value_t = 30)]
    pub max_age: u32,
    /// Matches needed before a track is reported.
    #[arg(long, default_value_t = 3)]
    pub min_hits: u32,
    /// Frames a lost track keeps being reported at its predicted position.
    #[arg(long, default_value_t = 1)]
    pub coast_frames: u32,
    /// Position noise, relative to box height.
    #[arg(long, default_value_t = NoiseConfig::default().std_weight_position)]
    pub position_noise: f64,
    /// Velocity noise, relative to box height.
    #[arg(long, default_value_t = NoiseConfig::default().std_weight_velocity)]
    pub velocity_noise: f64,
    /// Only associate tracks and detections of the same class.
    #[arg(long)]
    pub per_class: bool,
}

impl TrackerTuning {
    pub fn config(&self, pipeline: Pipeline, metric: SimilarityMetricKind) -> CliResult<TrackerConfig> {
        let noise =
            NoiseConfig::new(self.position_noise, self.velocity_noise).map_err(|e| CliError::Usage(e.to_string()))?;
        let cfg = TrackerConfig {
            pipeline,
            metric,
            gate: self.gate,
            second_gate: self.second_gate,
            gate_mode: match self.gate_mode {
                GateModeArg::Post => GateMode::Post,
                GateModeArg::Pre => GateMode::Pre,
            },
            matcher: match self.matcher {
                MatcherArg::Hungarian => Matcher::Hungarian,
                MatcherArg::Greedy => Matcher::Greedy,
            },
            high_conf_threshold: self.high_conf,
            low_conf_floor: self.low_conf,
            max_age: self.max_age,
            min_hits: self.min_hits,
            noise,
            per_class: self.per_class,
            coast_output_frames: self.coast_frames,
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}
