//! Track lifecycle and the frame-level association pipelines.
//!
//! A [`Tracker`] is a state machine for one video sequence. Every call to
//! [`Tracker::step`] predicts all live tracks one frame forward, associates
//! them with the frame's detections, updates the matched tracks, ages the
//! rest and spawns new tracks from leftover confident detections.
//!
//! Two pipelines are available:
//!
//! * [`Pipeline::Sort`]: one association of every detection at or above
//!   `low_conf_floor` against all live tracks.
//! * [`Pipeline::Byte`]: confident detections (`>= high_conf_threshold`)
//!   are associated first; the remaining detections in
//!   `[low_conf_floor, high_conf_threshold)` are then offered to the tracks
//!   the first stage left unmatched.
//!
//! Lifecycle: `Tentative -> {Confirmed, Removed}`, `Confirmed -> Lost`,
//! `Lost -> {Confirmed, Removed}`. A tentative track that misses a frame is
//! removed; a lost track coasts on its motion model until it has gone more
//! than `max_age` frames without an update.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::{
    self, greedy_assignment, similarity_matrix, solve_assignment_with, AssignmentResult, GateMode, SimilarityMatrix,
    SimilarityMetricKind, DEFAULT_GATE,
};
use crate::geometry::BBox;
use crate::motion::{KalmanBoxFilter, KalmanTrackState, MotionError, NoiseConfig};

pub type TrackId = u64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackerError {
    #[error("frame index {got} must be positive and greater than the previous frame {previous:?}")]
    NonMonotonicFrame { previous: Option<u64>, got: u64 },
    #[error("detection confidence {0} outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("invalid tracker config: {0}")]
    InvalidConfig(String),
    #[error("unknown pipeline `{0}` (expected sort or byte)")]
    UnknownPipeline(String),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Association(#[from] association::AssociationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    pub confidence: f64,
    pub class_id: i32,
}

impl Detection {
    pub fn new(bbox: BBox, confidence: f64, class_id: i32) -> Result<Self, TrackerError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(TrackerError::InvalidConfidence(confidence));
        }
        Ok(Self { bbox, confidence, class_id })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Lost,
    Removed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: TrackId,
    pub state: KalmanTrackState,
    pub status: TrackStatus,
    /// Successful updates, including the spawning detection.
    pub hits: u32,
    /// Frames since creation.
    pub age: u32,
    pub time_since_update: u32,
    pub class_id: i32,
    /// Confidence of the last matched detection.
    pub confidence: f64,
}

impl Track {
    pub fn is_live(&self) -> bool {
        self.status != TrackStatus::Removed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Sort,
    Byte,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sort => "sort",
            Self::Byte => "byte",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = TrackerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sort" => Ok(Self::Sort),
            "byte" => Ok(Self::Byte),
            _ => Err(TrackerError::UnknownPipeline(s.to_string())),
        }
    }
}

/// Assignment solver used inside each association stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    #[default]
    Hungarian,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub pipeline: Pipeline,
    pub metric: SimilarityMetricKind,
    /// Similarity floor for the first (or only) association stage.
    pub gate: f64,
    /// Similarity floor for the second Byte stage; `None` reuses `gate`.
    pub second_gate: Option<f64>,
    pub gate_mode: GateMode,
    pub matcher: Matcher,
    pub high_conf_threshold: f64,
    pub low_conf_floor: f64,
    pub max_age: u32,
    pub min_hits: u32,
    pub noise: NoiseConfig,
    /// Associate only tracks and detections that share a class id.
    pub per_class: bool,
    /// A lost track keeps being reported with its predicted box while it has
    /// missed at most this many frames. Zero disables coasting output.
    pub coast_output_frames: u32,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            pipeline: Pipeline::Sort,
            metric: SimilarityMetricKind::IoU,
            gate: DEFAULT_GATE,
            second_gate: None,
            gate_mode: GateMode::Post,
            matcher: Matcher::Hungarian,
            high_conf_threshold: 0.6,
            low_conf_floor: 0.1,
            max_age: 30,
            min_hits: 3,
            noise: NoiseConfig::default(),
            per_class: false,
            coast_output_frames: 1,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), TrackerError> {
        let bad = |msg: String| Err(TrackerError::InvalidConfig(msg));
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !self.gate.is_finite() || !self.second_gate.is_none_or(f64::is_finite) {
            return bad("gates must be finite".into());
        }
        if !unit(self.low_conf_floor) || !unit(self.high_conf_threshold) {
            return bad("confidence thresholds must lie in [0, 1]".into());
        }
        if self.low_conf_floor > self.high_conf_threshold {
            return bad(format!(
                "low_conf_floor {} exceeds high_conf_threshold {}",
                self.low_conf_floor, self.high_conf_threshold
            ));
        }
        if self.max_age < 1 {
            return bad("max_age must be at least 1".into());
        }
        if self.min_hits < 1 {
            return bad("min_hits must be at least 1".into());
        }
        self.noise.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackOutput {
    pub track_id: TrackId,
    pub bbox: BBox,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameResult {
    pub frame_index: u64,
    /// Sorted by track id.
    pub outputs: Vec<TrackOutput>,
}

/// Which detections went through which stage in the last frame.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameDiagnostics {
    pub stage_one: Vec<usize>,
    pub stage_two: Vec<usize>,
    pub matched: Vec<(TrackId, usize)>,
    pub spawned: Vec<TrackId>,
}

/// Extra similarity contributed on top of the box metric, e.g. appearance
/// affinity from an external re-identification model. The returned matrix
/// must be `tracks.len() x detections.len()`.
pub trait SimilarityHook: Send {
    fn addend(&self, tracks: &[&Track], detections: &[&Detection]) -> SimilarityMatrix;
}

pub struct Tracker {
    config: TrackerConfig,
    filter: KalmanBoxFilter,
    /// Live tracks in creation order.
    tracks: Vec<Track>,
    removed: Vec<Track>,
    next_id: TrackId,
    last_frame: Option<u64>,
    diagnostics: FrameDiagnostics,
    hook: Option<Box<dyn SimilarityHook>>,
}

impl fmt::Debug for Tracker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tracker")
            .field("config", &self.config)
            .field("tracks", &self.tracks.len())
            .field("removed", &self.removed.len())
            .field("next_id", &self.next_id)
            .field("last_frame", &self.last_frame)
            .finish()
    }
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self, TrackerError> {
        config.validate()?;
        Ok(Self {
            config,
            filter: KalmanBoxFilter::new(config.noise),
            tracks: Vec::new(),
            removed: Vec::new(),
            next_id: 1,
            last_frame: None,
            diagnostics: FrameDiagnostics::default(),
            hook: None,
        })
    }

    pub fn with_similarity_hook(mut self, hook: Box<dyn SimilarityHook>) -> Self {
        self.hook = Some(hook);
        self
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Tracks that have not been removed, in creation order.
    pub fn live_tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn diagnostics(&self) -> &FrameDiagnostics {
        &self.diagnostics
    }

    pub fn step(&mut self, frame_index: u64, dets: &[Detection]) -> Result<FrameResult, TrackerError> {
        if frame_index == 0 || self.last_frame.is_some_and(|prev| frame_index <= prev) {
            return Err(TrackerError::NonMonotonicFrame { previous: self.last_frame, got: frame_index });
        }
        if let Some(bad) = dets.iter().find(|d| !(0.0..=1.0).contains(&d.confidence)) {
            return Err(TrackerError::InvalidConfidence(bad.confidence));
        }
        self.last_frame = Some(frame_index);
        self.diagnostics = FrameDiagnostics::default();

        let predicted = self.predict_all();
        let cfg = self.config;

        let mut track_matched: Vec<Option<usize>> = vec![None; self.tracks.len()];
        let mut det_consumed = vec![false; dets.len()];
        let all_tracks: Vec<usize> = (0..self.tracks.len()).collect();

        let stage_one: Vec<usize> = match cfg.pipeline {
            Pipeline::Sort => (0..dets.len()).filter(|&d| dets[d].confidence >= cfg.low_conf_floor).collect(),
            Pipeline::Byte => (0..dets.len()).filter(|&d| dets[d].confidence >= cfg.high_conf_threshold).collect(),
        };
        let first = self.associate(&all_tracks, &stage_one, dets, &predicted, cfg.gate);
        for &(t, d) in &first {
            track_matched[t] = Some(d);
            det_consumed[d] = true;
        }
        self.diagnostics.stage_one = stage_one;

        if cfg.pipeline == Pipeline::Byte {
            let stage_two: Vec<usize> = (0..dets.len())
                .filter(|&d| {
                    let c = dets[d].confidence;
                    c >= cfg.low_conf_floor && c < cfg.high_conf_threshold
                })
                .collect();
            let leftover: Vec<usize> = all_tracks.iter().copied().filter(|&t| track_matched[t].is_none()).collect();
            let gate = cfg.second_gate.unwrap_or(cfg.gate);
            let second = self.associate(&leftover, &stage_two, dets, &predicted, gate);
            for &(t, d) in &second {
                track_matched[t] = Some(d);
                det_consumed[d] = true;
            }
            self.diagnostics.stage_two = stage_two;
        }

        for (t, matched) in track_matched.iter().enumerate() {
            match matched {
                Some(d) => {
                    let det = &dets[*d];
                    let track = &mut self.tracks[t];
                    match self.filter.update(&track.state, &det.bbox) {
                        Ok(state) => {
                            track.state = state;
                            track.hits += 1;
                            track.time_since_update = 0;
                            track.confidence = det.confidence;
                            track.status = match track.status {
                                TrackStatus::Tentative if track.hits >= cfg.min_hits => TrackStatus::Confirmed,
                                TrackStatus::Lost => TrackStatus::Confirmed,
                                s => s,
                            };
                            self.diagnostics.matched.push((track.id, *d));
                        }
                        Err(_) => {
                            track.status = TrackStatus::Removed;
                            det_consumed[*d] = false;
                        }
                    }
                }
                None => {
                    let track = &mut self.tracks[t];
                    track.status = match track.status {
                        TrackStatus::Tentative => TrackStatus::Removed,
                        _ if track.time_since_update > cfg.max_age => TrackStatus::Removed,
                        TrackStatus::Confirmed => TrackStatus::Lost,
                        s => s,
                    };
                }
            }
        }

        for (d, det) in dets.iter().enumerate() {
            if !det_consumed[d] && det.confidence >= cfg.high_conf_threshold {
                let id = self.spawn(det);
                self.diagnostics.spawned.push(id);
            }
        }

        let mut outputs = Vec::new();
        for track in &self.tracks {
            let visible = match track.status {
                TrackStatus::Confirmed => track.time_since_update == 0,
                TrackStatus::Lost => track.time_since_update <= cfg.coast_output_frames,
                _ => false,
            };
            if visible {
                if let Ok(bbox) = track.state.to_bbox() {
                    outputs.push(TrackOutput { track_id: track.id, bbox, confidence: track.confidence });
                }
            }
        }

        let (live, dead): (Vec<Track>, Vec<Track>) =
            std::mem::take(&mut self.tracks).into_iter().partition(Track::is_live);
        self.tracks = live;
        self.removed.extend(dead);

        Ok(FrameResult { frame_index, outputs })
    }

    /// Every track ever created, removed ones included, ordered by id.
    pub fn flush(self) -> Vec<Track> {
        let mut all = self.removed;
        all.extend(self.tracks);
        all.sort_by_key(|t| t.id);
        all
    }

    /// Advances every live track and returns its predicted box. Tracks whose
    /// motion state no longer describes a valid box are removed here.
    fn predict_all(&mut self) -> Vec<BBox> {
        let mut kept = Vec::with_capacity(self.tracks.len());
        let mut boxes = Vec::with_capacity(self.tracks.len());
        for mut track in std::mem::take(&mut self.tracks) {
            track.state = self.filter.predict(&track.state);
            track.age += 1;
            track.time_since_update += 1;
            match track.state.to_bbox() {
                Ok(b) => {
                    boxes.push(b);
                    kept.push(track);
                }
                Err(_) => {
                    track.status = TrackStatus::Removed;
                    self.removed.push(track);
                }
            }
        }
        self.tracks = kept;
        boxes
    }

    fn spawn(&mut self, det: &Detection) -> TrackId {
        let id = self.next_id;
        self.next_id += 1;
        let status = if self.config.min_hits <= 1 { TrackStatus::Confirmed } else { TrackStatus::Tentative };
        self.tracks.push(Track {
            id,
            state: self.filter.initiate(&det.bbox),
            status,
            hits: 1,
            age: 0,
            time_since_update: 0,
            class_id: det.class_id,
            confidence: det.confidence,
        });
        id
    }

    /// Matches `track_idx` against `det_idx`; returns global index pairs.
    fn associate(
        &self,
        track_idx: &[usize],
        det_idx: &[usize],
        dets: &[Detection],
        predicted: &[BBox],
        gate: f64,
    ) -> Vec<(usize, usize)> {
        if !self.config.per_class {
            return self.associate_group(track_idx, det_idx, dets, predicted, gate);
        }
        let mut classes: Vec<i32> = det_idx.iter().map(|&d| dets[d].class_id).collect();
        classes.sort_unstable();
        classes.dedup();
        let mut out = Vec::new();
        for class in classes {
            let tracks: Vec<usize> = track_idx.iter().copied().filter(|&t| self.tracks[t].class_id == class).collect();
            let group: Vec<usize> = det_idx.iter().copied().filter(|&d| dets[d].class_id == class).collect();
            out.extend(self.associate_group(&tracks, &group, dets, predicted, gate));
        }
        out
    }

    fn associate_group(
        &self,
        track_idx: &[usize],
        det_idx: &[usize],
        dets: &[Detection],
        predicted: &[BBox],
        gate: f64,
    ) -> Vec<(usize, usize)> {
        if track_idx.is_empty() || det_idx.is_empty() {
            return Vec::new();
        }
        let preds: Vec<BBox> = track_idx.iter().map(|&t| predicted[t]).collect();
        let boxes: Vec<BBox> = det_idx.iter().map(|&d| dets[d].bbox).collect();
        let mut sim = similarity_matrix(&preds, &boxes, self.config.metric);
        if let Some(hook) = &self.hook {
            let tracks: Vec<&Track> = track_idx.iter().map(|&t| &self.tracks[t]).collect();
            let group: Vec<&Detection> = det_idx.iter().map(|&d| &dets[d]).collect();
            let addend = hook.addend(&tracks, &group);
            // A hook returning the wrong shape contributes nothing.
            let _ = association::add_similarity(&mut sim, &addend);
        }
        let AssignmentResult { matches, .. } = match self.config.matcher {
            Matcher::Hungarian => solve_assignment_with(&sim, gate, self.config.gate_mode),
            Matcher::Greedy => greedy_assignment(&sim, gate),
        };
        matches.into_iter().map(|(t, d)| (track_idx[t], det_idx[d])).collect()
    }
}
