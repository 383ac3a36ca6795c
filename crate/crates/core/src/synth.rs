//! Seeded synthetic sea scenes with camera shake and frame dropping.
//!
//! Ships are boxes moving at constant speed with a slowly wandering heading.
//! The generator then reproduces the two effects that break overlap-based
//! association at sea: frames are kept only every `fps_subsample` steps
//! (low frame rate), and every kept frame gets a shared random translation
//! (the whole image shakes with the waves). Detections are the ground truth
//! boxes with independent per-box noise, random misses and uniform clutter.
//!
//! Randomness is drawn from ChaCha8 with one stream per layer:
//!
//! | stream | layer                   |
//! |--------|-------------------------|
//! | 0      | ship trajectories       |
//! | 1      | camera shake            |
//! | 2      | detection noise, misses |
//! | 3      | clutter                 |
//!
//! Each layer draws a fixed number of values per item regardless of the
//! magnitudes configured, so changing e.g. `jitter_std` rescales the same
//! shake sequence and leaves trajectories untouched.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::GtEntry;
use crate::geometry::{iou, tiou, BBox};
use crate::tracker::Detection;

/// Smallest extent of a box clamped to the image.
const MIN_EXTENT: f64 = 2.0;

const STREAM_TRAJECTORY: u64 = 0;
const STREAM_SHAKE: u64 = 1;
const STREAM_DETECTION: u64 = 2;
const STREAM_CLUTTER: u64 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
}

/// How detection confidences are drawn.
///
/// True detections score `visibility * N(true_mean, true_std)` minus
/// `noise_penalty` times the detection's displacement relative to the box
/// size; clutter scores `N(clutter_mean, clutter_std)`. Both are clamped to
/// `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConfidenceModel {
    pub true_mean: f64,
    pub true_std: f64,
    pub noise_penalty: f64,
    pub clutter_mean: f64,
    pub clutter_std: f64,
}

impl Default for ConfidenceModel {
    fn default() -> Self {
        Self { true_mean: 0.85, true_std: 0.1, noise_penalty: 0.5, clutter_mean: 0.35, clutter_std: 0.15 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub n_ships: u32,
    /// Frames simulated before subsampling.
    pub n_frames: u32,
    /// `(width, height)` in pixels.
    pub image_size: (f64, f64),
    /// Keep every k-th simulated frame.
    pub fps_subsample: u32,
    /// Standard deviation of the per-frame shared camera translation (pixels).
    pub jitter_std: f64,
    /// Per-box position noise (pixels); size noise is the same amount
    /// expressed in log space.
    pub detection_noise_std: f64,
    pub miss_prob: f64,
    /// Expected clutter boxes per kept frame.
    pub clutter_rate: f64,
    pub confidence_model: ConfidenceModel,
    /// Ship width range in pixels.
    pub size_range: (f64, f64),
    /// Ship width/height ratio range.
    pub aspect_range: (f64, f64),
    /// Speed range in pixels per simulated frame.
    pub speed_range: (f64, f64),
    /// Per-frame heading perturbation (radians, Gaussian).
    pub heading_noise_std: f64,
    /// Class ids are drawn from `1..=n_classes`.
    pub n_classes: u32,
    /// Ground truth less visible than this (ships crossing the image border)
    /// is emitted with `considered = false`.
    pub min_visibility: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_ships: 10,
            n_frames: 200,
            image_size: (1920.0, 1080.0),
            fps_subsample: 1,
            jitter_std: 0.0,
            detection_noise_std: 0.0,
            miss_prob: 0.0,
            clutter_rate: 0.0,
            confidence_model: ConfidenceModel::default(),
            size_range: (40.0, 120.0),
            aspect_range: (1.5, 3.5),
            speed_range: (0.5, 3.0),
            heading_noise_std: 0.02,
            n_classes: 7,
            min_visibility: 0.5,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    /// Frames left after subsampling.
    pub fn kept_frames(&self) -> u32 {
        if self.fps_subsample == 0 {
            0
        } else {
            self.n_frames.div_ceil(self.fps_subsample)
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: &str| Err(SynthError::InvalidConfig(msg.to_string()));
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        let range_ok = |(lo, hi): (f64, f64), floor: f64| lo.is_finite() && hi.is_finite() && lo >= floor && lo <= hi;

        if self.fps_subsample < 1 {
            return bad("fps_subsample must be at least 1");
        }
        if self.kept_frames() < 2 {
            return bad("at least 2 frames must remain after subsampling");
        }
        let (w, h) = self.image_size;
        if !(w.is_finite() && h.is_finite()) {
            return bad("image size must be finite");
        }
        if !range_ok(self.size_range, f64::MIN_POSITIVE) || self.size_range.0 < MIN_EXTENT {
            return bad("size_range must satisfy 2 <= min <= max");
        }
        if !range_ok(self.aspect_range, f64::MIN_POSITIVE) {
            return bad("aspect_range must satisfy 0 < min <= max");
        }
        if !range_ok(self.speed_range, 0.0) {
            return bad("speed_range must satisfy 0 <= min <= max");
        }
        let widest = self.size_range.1;
        let tallest = self.size_range.1 / self.aspect_range.0;
        if w <= widest || h <= tallest {
            return bad("image must be larger than the largest ship");
        }
        if !(0.0..1.0).contains(&self.miss_prob) {
            return bad("miss_prob must lie in [0, 1)");
        }
        if !finite_nonneg(self.clutter_rate) {
            return bad("clutter_rate must be finite and non-negative");
        }
        if !finite_nonneg(self.jitter_std)
            || !finite_nonneg(self.detection_noise_std)
            || !finite_nonneg(self.heading_noise_std)
        {
            return bad("noise levels must be finite and non-negative");
        }
        let c = &self.confidence_model;
        if ![c.true_mean, c.true_std, c.noise_penalty, c.clutter_mean, c.clutter_std].iter().all(|v| finite_nonneg(*v))
        {
            return bad("confidence model parameters must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.min_visibility) {
            return bad("min_visibility must lie in [0, 1]");
        }
        if self.n_classes < 1 {
            return bad("n_classes must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Sorted by `(frame, object_id)`; frames are numbered `1..=kept_frames`.
    pub gt: Vec<GtEntry>,
    /// `detections[f - 1]` holds the detections of frame `f`.
    pub detections: Vec<Vec<Detection>>,
    pub config_echo: ScenarioConfig,
}

impl Scenario {
    pub fn frame_count(&self) -> u64 {
        self.detections.len() as u64
    }
}

struct Ship {
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
    speed: f64,
    heading: f64,
    class_id: i32,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Clips a rectangle to the image, keeping at least `MIN_EXTENT` pixels on
/// each axis. Returns the box and the fraction of the original area that was
/// inside the image. Boxes already inside are returned unchanged.
fn clamp_to_image(x: f64, y: f64, w: f64, h: f64, (iw, ih): (f64, f64)) -> (BBox, f64) {
    if x >= 0.0 && y >= 0.0 && x + w <= iw && y + h <= ih {
        return (BBox::new(x, y, w, h).expect("positive extent"), 1.0);
    }
    let (x2, y2) = (x + w, y + h);
    let inside = (x2.min(iw) - x.max(0.0)).max(0.0) * (y2.min(ih) - y.max(0.0)).max(0.0);
    let cx1 = x.clamp(0.0, iw - MIN_EXTENT);
    let cy1 = y.clamp(0.0, ih - MIN_EXTENT);
    let cx2 = x2.clamp(cx1 + MIN_EXTENT, iw);
    let cy2 = y2.clamp(cy1 + MIN_EXTENT, ih);
    let bbox = BBox::from_corners(cx1, cy1, cx2, cy2).expect("clamped box has positive extent");
    (bbox, (inside / (w * h)).clamp(0.0, 1.0))
}

pub fn generate(cfg: &ScenarioConfig) -> Result<Scenario, SynthError> {
    cfg.validate()?;
    let (img_w, img_h) = cfg.image_size;
    let kept = cfg.kept_frames() as usize;

    let mut traj = stream(cfg.seed, STREAM_TRAJECTORY);
    let mut ships: Vec<Ship> = (0..cfg.n_ships)
        .map(|_| {
            let w = traj.random_range(cfg.size_range.0..=cfg.size_range.1);
            let aspect = traj.random_range(cfg.aspect_range.0..=cfg.aspect_range.1);
            let h = w / aspect;
            Ship {
                cx: traj.random_range(w / 2.0..=img_w - w / 2.0),
                cy: traj.random_range(h / 2.0..=img_h - h / 2.0),
                w,
                h,
                speed: traj.random_range(cfg.speed_range.0..=cfg.speed_range.1),
                heading: traj.random_range(0.0..TAU),
                class_id: traj.random_range(1..=cfg.n_classes) as i32,
            }
        })
        .collect();

    // Un-shaken ship boxes per kept frame; `None` once a ship has left.
    let mut positions: Vec<Vec<Option<(f64, f64)>>> = vec![Vec::with_capacity(kept); ships.len()];
    let mut alive = vec![true; ships.len()];
    for t in 0..cfg.n_frames {
        if t > 0 {
            for (s, ship) in ships.iter_mut().enumerate() {
                let turn = normal(&mut traj);
                if !alive[s] {
                    continue;
                }
                ship.heading += cfg.heading_noise_std * turn;
                ship.cx += ship.speed * ship.heading.cos();
                ship.cy += ship.speed * ship.heading.sin();
                let gone = ship.cx + ship.w / 2.0 <= 0.0
                    || ship.cx - ship.w / 2.0 >= img_w
                    || ship.cy + ship.h / 2.0 <= 0.0
                    || ship.cy - ship.h / 2.0 >= img_h;
                if gone {
                    alive[s] = false;
                }
            }
        }
        if t % cfg.fps_subsample == 0 {
            for (s, ship) in ships.iter().enumerate() {
                positions[s].push(alive[s].then_some((ship.cx, ship.cy)));
            }
        }
    }

    let mut shake = stream(cfg.seed, STREAM_SHAKE);
    let offsets: Vec<(f64, f64)> = (0..kept)
        .map(|_| {
            let dx = normal(&mut shake);
            let dy = normal(&mut shake);
            (cfg.jitter_std * dx, cfg.jitter_std * dy)
        })
        .collect();

    let mut gt = Vec::new();
    for (f, &(jx, jy)) in offsets.iter().enumerate() {
        for (s, ship) in ships.iter().enumerate() {
            let Some((cx, cy)) = positions[s][f] else { continue };
            let (x1, y1) = (cx + jx - ship.w / 2.0, cy + jy - ship.h / 2.0);
            let (bbox, visibility) = clamp_to_image(x1, y1, ship.w, ship.h, cfg.image_size);
            gt.push(GtEntry {
                frame: f as u64 + 1,
                object_id: s as u64 + 1,
                bbox,
                visibility,
                class_id: ship.class_id,
                considered: visibility >= cfg.min_visibility,
            });
        }
    }

    let mut noise = stream(cfg.seed, STREAM_DETECTION);
    let cm = cfg.confidence_model;
    let sigma = cfg.detection_noise_std;
    let mut detections: Vec<Vec<Detection>> = vec![Vec::new(); kept];
    for g in &gt {
        let draw: f64 = noise.random();
        let (zx, zy, zw, zh, zc) =
            (normal(&mut noise), normal(&mut noise), normal(&mut noise), normal(&mut noise), normal(&mut noise));
        if draw < cfg.miss_prob {
            continue;
        }
        let (w, h) = (g.bbox.width(), g.bbox.height());
        let (dx, dy) = (sigma * zx, sigma * zy);
        let dw = (w * (sigma / w * zw).exp()).max(MIN_EXTENT);
        let dh = (h * (sigma / h * zh).exp()).max(MIN_EXTENT);
        let x1 = g.bbox.x() + dx + (w - dw) / 2.0;
        let y1 = g.bbox.y() + dy + (h - dh) / 2.0;
        let (bbox, _) = clamp_to_image(x1, y1, dw, dh, cfg.image_size);
        let displacement = (dx.abs() + dy.abs()) / (w + h);
        let conf = (g.visibility * (cm.true_mean + cm.true_std * zc) - cm.noise_penalty * displacement).clamp(0.0, 1.0);
        detections[g.frame as usize - 1].push(Detection { bbox, confidence: conf, class_id: g.class_id });
    }

    let mut clutter = stream(cfg.seed, STREAM_CLUTTER);
    let poisson = (cfg.clutter_rate > 0.0)
        .then(|| Poisson::new(cfg.clutter_rate).map_err(|e| SynthError::InvalidConfig(e.to_string())))
        .transpose()?;
    for frame in detections.iter_mut() {
        let count = poisson.as_ref().map_or(0, |p| p.sample(&mut clutter) as u64);
        for _ in 0..count {
            let w = clutter.random_range(cfg.size_range.0..=cfg.size_range.1);
            let h = w / clutter.random_range(cfg.aspect_range.0..=cfg.aspect_range.1);
            let x = clutter.random_range(0.0..=img_w - w);
            let y = clutter.random_range(0.0..=img_h - h);
            let conf = (cm.clutter_mean + cm.clutter_std * normal(&mut clutter)).clamp(0.0, 1.0);
            let class_id = clutter.random_range(1..=cfg.n_classes) as i32;
            frame.push(Detection {
                bbox: BBox::new(x, y, w, h).expect("clutter box has positive extent"),
                confidence: conf,
                class_id,
            });
        }
    }

    Ok(Scenario { gt, detections, config_echo: *cfg })
}

/// Overlap statistics over each object's consecutive-frame box pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeStats {
    pub pairs: usize,
    pub median_iou: f64,
    pub zero_iou_fraction: f64,
    pub mean_tiou: f64,
}

pub fn regime_stats(s: &Scenario) -> RegimeStats {
    regime_stats_for(&s.gt)
}

/// Same as [`regime_stats`] for a bare ground truth list. All statistics are
/// zero when no object appears in two consecutive frames.
pub fn regime_stats_for(gt: &[GtEntry]) -> RegimeStats {
    let mut by_object: std::collections::BTreeMap<u64, Vec<&GtEntry>> = Default::default();
    for g in gt {
        by_object.entry(g.object_id).or_default().push(g);
    }
    let mut ious = Vec::new();
    let mut tious = Vec::new();
    for track in by_object.values_mut() {
        track.sort_by_key(|g| g.frame);
        for w in track.windows(2) {
            if w[1].frame == w[0].frame + 1 {
                ious.push(iou(&w[0].bbox, &w[1].bbox));
                tious.push(tiou(&w[0].bbox, &w[1].bbox));
            }
        }
    }
    if ious.is_empty() {
        return RegimeStats { pairs: 0, median_iou: 0.0, zero_iou_fraction: 0.0, mean_tiou: 0.0 };
    }
    let n = ious.len();
    let zero = ious.iter().filter(|&&v| v == 0.0).count();
    ious.sort_by(f64::total_cmp);
    let median_iou = if n % 2 == 1 { ious[n / 2] } else { (ious[n / 2 - 1] + ious[n / 2]) / 2.0 };
    RegimeStats {
        pairs: n,
        median_iou,
        zero_iou_fraction: zero as f64 / n as f64,
        mean_tiou: tious.iter().sum::<f64>() / n as f64,
    }
}
