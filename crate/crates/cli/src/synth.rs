use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use shiptrack::mot_io;
use shiptrack::synth::{generate, regime_stats, ScenarioConfig};

use crate::error::{CliError, CliResult};
use crate::manifest::{write_file, FileDigest, RunManifest};

/// Scenario flags. Each one overrides the matching field of `--config` (or
/// of the built-in defaults).
#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// Scenario config JSON, or a manifest containing one.
    #[arg(long, visible_alias = "scenario")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_ships: Option<u32>,
    /// Frames simulated before subsampling.
    #[arg(long)]
    pub n_frames: Option<u32>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub height: Option<f64>,
    /// Keep every k-th simulated frame.
    #[arg(long)]
    pub fps_subsample: Option<u32>,
    /// Standard deviation of the shared per-frame camera shake (pixels).
    #[arg(long)]
    pub jitter_std: Option<f64>,
    /// Standard deviation of per-detection box noise (pixels).
    #[arg(long)]
    pub detection_noise_std: Option<f64>,
    #[arg(long)]
    pub miss_prob: Option<f64>,
    /// Expected clutter detections per frame.
    #[arg(long)]
    pub clutter_rate: Option<f64>,
    #[arg(long)]
    pub size_min: Option<f64>,
    #[arg(long)]
    pub size_max: Option<f64>,
    #[arg(long)]
    pub aspect_min: Option<f64>,
    #[arg(long)]
    pub aspect_max: Option<f64>,
    #[arg(long)]
    pub speed_min: Option<f64>,
    #[arg(long)]
    pub speed_max: Option<f64>,
    #[arg(long)]
    pub heading_noise_std: Option<f64>,
    #[arg(long)]
    pub n_classes: Option<u32>,
    #[arg(long)]
    pub min_visibility: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ScenarioArgs {
    pub fn resolve(&self) -> CliResult<ScenarioConfig> {
        let mut c = match &self.config {
            Some(path) => load_scenario(path)?,
            None => ScenarioConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$flag { $target = v; })*
            };
        }
        set!(
            n_ships => c.n_ships,
            n_frames => c.n_frames,
            width => c.image_size.0,
            height => c.image_size.1,
            fps_subsample => c.fps_subsample,
            jitter_std => c.jitter_std,
            detection_noise_std => c.detection_noise_std,
            miss_prob => c.miss_prob,
            clutter_rate => c.clutter_rate,
            size_min => c.size_range.0,
            size_max => c.size_range.1,
            aspect_min => c.aspect_range.0,
            aspect_max => c.aspect_range.1,
            speed_min => c.speed_range.0,
            speed_max => c.speed_range.1,
            heading_noise_std => c.heading_noise_std,
            n_classes => c.n_classes,
            min_visibility => c.min_visibility,
            seed => c.seed,
        );
        c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(c)
    }
}

/// Reads a scenario config, accepting either the bare config or a manifest
/// with a `scenario` entry.
pub fn load_scenario(path: &Path) -> CliResult<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::input(path, e))?;
    let inner = match value.get("scenario") {
        Some(s) => s.clone(),
        None => value,
    };
    serde_json::from_value(inner).map_err(|e| CliError::input(path, e))
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Directory receiving gt.txt, det.txt and manifest.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(args: SynthArgs) -> CliResult {
    let cfg = args.scenario.resolve()?;
    let scenario = generate(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    let stats = regime_stats(&scenario);
    log::info!("generated {} gt boxes, regime {stats:?}", scenario.gt.len());

    let gt_path = args.out_dir.join("gt.txt");
    let det_path = args.out_dir.join("det.txt");
    let mut gt = Vec::new();
    mot_io::write_ground_truth(&scenario.gt, &mut gt).map_err(|e| CliError::output(&gt_path, e))?;
    let mut det = Vec::new();
    let frames = scenario.detections.iter().enumerate().map(|(i, d)| (i as u64 + 1, d.as_slice()));
    mot_io::write_detections(frames, &mut det).map_err(|e| CliError::output(&det_path, e))?;
    write_file(&gt_path, &gt)?;
    write_file(&det_path, &det)?;

    let mut manifest = RunManifest::new("synth");
    manifest.scenario = Some(cfg);
    manifest.seed = Some(cfg.seed);
    if let Some(path) = &args.scenario.config {
        manifest.inputs.push(FileDigest::of_file(path)?);
    }
    manifest.outputs = vec![FileDigest::of_bytes(&gt_path, &gt), FileDigest::of_bytes(&det_path, &det)];
    manifest.write(&args.out_dir.join("manifest.json"))?;

    println!(
        "{} frames, {} gt boxes, median consecutive IoU {:.4}, zero-IoU fraction {:.4}, mean TIoU {:.4}",
        scenario.frame_count(),
        scenario.gt.len(),
        stats.median_iou,
        stats.zero_iou_fraction,
        stats.mean_tiou
    );
    Ok(())
}
