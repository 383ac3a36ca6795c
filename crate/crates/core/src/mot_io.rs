//! MOT17 text files: detections, ground truth and tracker results.
//!
//! One record per line, comma separated, no header:
//!
//! ```text
//! frame,id,left,top,width,height,conf,class,visibility[,ignored...]
//! ```
//!
//! At least the first seven columns must be present. Missing trailing
//! columns default to class `-1` and visibility `1`; a `-1` in those columns
//! of detection or result files means "unset" and is defaulted the same way.
//! In ground truth files the `conf` column is the "considered" flag.
//! Columns past the ninth (world coordinates in some files) are ignored.
//! LF and CRLF line endings are accepted; LF is written.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::GtEntry;
use crate::geometry::BBox;
use crate::tracker::{Detection, FrameResult, TrackId, TrackOutput};

const MIN_FIELDS: usize = 7;
const MAX_ECHO: usize = 80;

#[derive(Debug, Error)]
pub enum MotIoError {
    #[error("line {line}: {reason}: `{text}`")]
    Parse { line: usize, text: String, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl MotIoError {
    pub fn line(&self) -> Option<usize> {
        match self {
            Self::Parse { line, .. } => Some(*line),
            Self::Io(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    Detections,
    GroundTruth,
    Results,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotRecord {
    pub frame: u64,
    /// `-1` for raw detections.
    pub id: i64,
    pub bbox: BBox,
    pub conf: f64,
    pub class_id: i32,
    pub visibility: f64,
}

/// One line of a result file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub frame: u64,
    pub track_id: TrackId,
    pub bbox: BBox,
    pub conf: f64,
}

pub fn parse_file(path: impl AsRef<Path>, kind: FileKind) -> Result<Vec<MotRecord>, MotIoError> {
    parse_bytes(&fs::read(path)?, kind)
}

pub fn parse_reader(mut reader: impl io::Read, kind: FileKind) -> Result<Vec<MotRecord>, MotIoError> {
    let mut buf = Vec::new();
    reader.read_to_end(&mut buf)?;
    parse_bytes(&buf, kind)
}

/// Parses a whole file; records come back sorted by `(frame, id)`.
pub fn parse_bytes(bytes: &[u8], kind: FileKind) -> Result<Vec<MotRecord>, MotIoError> {
    let mut records = Vec::new();
    for (idx, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let line = idx + 1;
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let text = std::str::from_utf8(raw).map_err(|_| MotIoError::Parse {
            line,
            text: String::from_utf8_lossy(raw).chars().take(MAX_ECHO).collect(),
            reason: "not valid UTF-8".into(),
        })?;
        if text.trim().is_empty() {
            continue;
        }
        let record = parse_line(text, kind).map_err(|reason| MotIoError::Parse {
            line,
            text: text.chars().take(MAX_ECHO).collect(),
            reason,
        })?;
        records.push(record);
    }
    records.sort_by_key(|r| (r.frame, r.id));
    Ok(records)
}

fn parse_number(field: &str, name: &str) -> Result<f64, String> {
    let v: f64 = field.parse().map_err(|_| format!("{name} is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name} is not finite"))
    }
}

/// Accepts `3` as well as `3.0`.
fn parse_integer(field: &str, name: &str) -> Result<i64, String> {
    if let Ok(v) = field.parse::<i64>() {
        return Ok(v);
    }
    let v = parse_number(field, name)?;
    if v.fract() != 0.0 || v.abs() > 9.0e15 {
        return Err(format!("{name} is not an integer"));
    }
    Ok(v as i64)
}

fn parse_line(text: &str, kind: FileKind) -> Result<MotRecord, String> {
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    if fields.len() < MIN_FIELDS {
        return Err(format!("expected at least {MIN_FIELDS} fields, found {}", fields.len()));
    }

    let frame = parse_integer(fields[0], "frame")?;
    if frame < 1 {
        return Err("frame must be >= 1".into());
    }
    let id = parse_integer(fields[1], "id")?;
    if kind != FileKind::Detections && id < 1 {
        return Err("id must be >= 1".into());
    }
    let x = parse_number(fields[2], "x")?;
    let y = parse_number(fields[3], "y")?;
    let w = parse_number(fields[4], "width")?;
    let h = parse_number(fields[5], "height")?;
    let bbox = BBox::new(x, y, w, h).map_err(|e| e.to_string())?;
    let conf = parse_number(fields[6], "conf")?;
    if kind == FileKind::Detections && !(0.0..=1.0).contains(&conf) {
        return Err("detection confidence outside [0, 1]".into());
    }

    let class_id = match fields.get(7) {
        Some(f) => {
            let c = parse_integer(f, "class")?;
            i32::try_from(c).map_err(|_| "class out of range".to_string())?
        }
        None => -1,
    };
    let visibility = match fields.get(8) {
        Some(f) => {
            let v = parse_number(f, "visibility")?;
            if kind != FileKind::GroundTruth && v == -1.0 {
                1.0
            } else if (0.0..=1.0).contains(&v) {
                v
            } else {
                return Err("visibility outside [0, 1]".into());
            }
        }
        None => 1.0,
    };

    Ok(MotRecord { frame: frame as u64, id, bbox, conf, class_id, visibility })
}

/// Writes `frame,id,x,y,w,h,conf,-1,-1,-1` lines with two decimals for
/// geometry and four for confidence. Returns the number of bytes written.
pub fn write_results(records: &[ResultRecord], mut sink: impl Write) -> io::Result<usize> {
    let mut written = 0;
    for r in records {
        let line = format!(
            "{},{},{:.2},{:.2},{:.2},{:.2},{:.4},-1,-1,-1\n",
            r.frame,
            r.track_id,
            r.bbox.x(),
            r.bbox.y(),
            r.bbox.width(),
            r.bbox.height(),
            r.conf
        );
        sink.write_all(line.as_bytes())?;
        written += line.len();
    }
    sink.flush()?;
    Ok(written)
}

/// Writes `frame,id,x,y,w,h,considered,class,visibility` lines.
pub fn write_ground_truth(entries: &[GtEntry], mut sink: impl Write) -> io::Result<usize> {
    let mut written = 0;
    for g in entries {
        let line = format!(
            "{},{},{:.2},{:.2},{:.2},{:.2},{},{},{:.4}\n",
            g.frame,
            g.object_id,
            g.bbox.x(),
            g.bbox.y(),
            g.bbox.width(),
            g.bbox.height(),
            u8::from(g.considered),
            g.class_id,
            g.visibility
        );
        sink.write_all(line.as_bytes())?;
        written += line.len();
    }
    sink.flush()?;
    Ok(written)
}

/// Writes `frame,-1,x,y,w,h,conf,class,-1,-1` lines for per-frame
/// detections, given as `(frame, detections)` pairs.
pub fn write_detections<'a>(
    frames: impl IntoIterator<Item = (u64, &'a [Detection])>,
    mut sink: impl Write,
) -> io::Result<usize> {
    let mut written = 0;
    for (frame, dets) in frames {
        for d in dets {
            let line = format!(
                "{},-1,{:.2},{:.2},{:.2},{:.2},{:.4},{},-1,-1\n",
                frame,
                d.bbox.x(),
                d.bbox.y(),
                d.bbox.width(),
                d.bbox.height(),
                d.confidence,
                d.class_id
            );
            sink.write_all(line.as_bytes())?;
            written += line.len();
        }
    }
    sink.flush()?;
    Ok(written)
}

pub fn records_to_ground_truth(records: &[MotRecord]) -> Vec<GtEntry> {
    records
        .iter()
        .map(|r| GtEntry {
            frame: r.frame,
            object_id: r.id as u64,
            bbox: r.bbox,
            visibility: r.visibility,
            class_id: r.class_id,
            considered: r.conf != 0.0,
        })
        .collect()
}

/// Groups detection records by frame. Frames without detections are absent.
pub fn records_to_detections(records: &[MotRecord]) -> BTreeMap<u64, Vec<Detection>> {
    let mut frames: BTreeMap<u64, Vec<Detection>> = BTreeMap::new();
    for r in records {
        frames.entry(r.frame).or_default().push(Detection { bbox: r.bbox, confidence: r.conf, class_id: r.class_id });
    }
    frames
}

pub fn records_to_result_records(records: &[MotRecord]) -> Vec<ResultRecord> {
    records
        .iter()
        .map(|r| ResultRecord { frame: r.frame, track_id: r.id as TrackId, bbox: r.bbox, conf: r.conf })
        .collect()
}

/// Groups result records into per-frame results, ordered by frame.
pub fn result_records_to_frames(records: &[ResultRecord]) -> Vec<FrameResult> {
    let mut frames: BTreeMap<u64, Vec<TrackOutput>> = BTreeMap::new();
    for r in records {
        frames.entry(r.frame).or_default().push(TrackOutput { track_id: r.track_id, bbox: r.bbox, confidence: r.conf });
    }
    frames
        .into_iter()
        .map(|(frame_index, mut outputs)| {
            outputs.sort_by_key(|o| o.track_id);
            FrameResult { frame_index, outputs }
        })
        .collect()
}

pub fn frames_to_result_records(frames: &[FrameResult]) -> Vec<ResultRecord> {
    frames
        .iter()
        .flat_map(|f| {
            f.outputs.iter().map(move |o| ResultRecord {
                frame: f.frame_index,
                track_id: o.track_id,
                bbox: o.bbox,
                conf: o.confidence,
            })
        })
        .collect()
}
