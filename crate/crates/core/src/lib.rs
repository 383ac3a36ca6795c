//! Tracking-by-detection for ships filmed at low frame rates from moving
//! platforms.
//!
//! The crate pairs a constant-velocity Kalman motion model with
//! Hungarian/greedy association over one of four box similarity scores
//! (IoU, GIoU, DIoU and the shape-aware TIoU), evaluates the output with
//! CLEAR MOT and identity metrics, reads and writes MOT17 text files, and
//! generates synthetic scenes with camera shake and frame dropping.

pub mod association;
pub mod evaluation;
pub mod experiment;
pub mod geometry;
pub mod mot_io;
pub mod motion;
pub mod synth;
pub mod tracker;

pub use association::{AssignmentResult, GateMode, SimilarityMatrix, SimilarityMetricKind};
pub use geometry::{BBox, EnclosureDecomposition};
pub use motion::{KalmanBoxFilter, KalmanTrackState, NoiseConfig};
pub use tracker::{Detection, FrameResult, Pipeline, Track, TrackStatus, Tracker, TrackerConfig};
