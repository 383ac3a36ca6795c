//! CLEAR MOT and identity (IDF1) metrics.
//!
//! Per frame, ground truth objects and hypotheses are put in correspondence
//! by IoU. Pairs matched in an earlier frame are kept while their IoU stays
//! at or above the threshold; the remaining objects are assigned so that the
//! number of pairs is maximal and, among those, the total IoU is maximal.
//! Ground truth entries flagged as not considered still take part in the
//! matching, but a hypothesis landing on one is ignored rather than counted
//! as a false positive, and the entry itself never counts as a miss.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::{solve_assignment_with, GateMode, SimilarityMatrix};
use crate::geometry::{iou, BBox};
use crate::tracker::{FrameResult, TrackId};

/// IoU at which a hypothesis counts as covering a ground truth box.
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Fraction of its lifespan a trajectory must be covered to be mostly tracked.
const MOSTLY_TRACKED: f64 = 0.8;
/// Coverage at or below which a trajectory is mostly lost.
const MOSTLY_LOST: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("frame index must be positive")]
    ZeroFrame,
    #[error("result frames out of order: frame {got} after frame {previous}")]
    UnorderedResults { previous: u64, got: u64 },
    #[error("track id {track_id} appears twice in result frame {frame}")]
    DuplicateTrack { frame: u64, track_id: TrackId },
    #[error("object id {object_id} appears twice in ground truth frame {frame}")]
    DuplicateObject { frame: u64, object_id: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtEntry {
    pub frame: u64,
    pub object_id: u64,
    pub bbox: BBox,
    pub visibility: f64,
    pub class_id: i32,
    pub considered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMatch {
    pub object_id: u64,
    pub track_id: TrackId,
    pub iou: f64,
}

/// Outcome of matching one frame.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameCorrespondence {
    /// Matches on considered objects, sorted by object id.
    pub matches: Vec<FrameMatch>,
    /// Considered objects left unmatched.
    pub misses: Vec<u64>,
    /// Hypotheses matched to nothing.
    pub false_positives: Vec<TrackId>,
    /// Hypotheses matched to objects that are not considered.
    pub ignored: Vec<TrackId>,
}

/// Matches one frame, keeping still-valid pairs from `previous`
/// (object id to the track id it was last matched with).
pub fn match_frame(
    gt: &[GtEntry],
    hyps: &[(TrackId, BBox)],
    iou_threshold: f64,
    previous: &HashMap<u64, TrackId>,
) -> FrameCorrespondence {
    // Sorting makes the result independent of input order.
    let mut gt: Vec<&GtEntry> = gt.iter().collect();
    gt.sort_by_key(|g| g.object_id);
    let mut hyps: Vec<&(TrackId, BBox)> = hyps.iter().collect();
    hyps.sort_by_key(|h| h.0);

    let mut gt_taken = vec![false; gt.len()];
    let mut hyp_taken = vec![false; hyps.len()];
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();

    for (gi, g) in gt.iter().enumerate() {
        let Some(&track_id) = previous.get(&g.object_id) else { continue };
        let Some(hi) = hyps.iter().position(|h| h.0 == track_id) else { continue };
        if hyp_taken[hi] {
            continue;
        }
        let overlap = iou(&g.bbox, &hyps[hi].1);
        if overlap >= iou_threshold {
            gt_taken[gi] = true;
            hyp_taken[hi] = true;
            pairs.push((gi, hi, overlap));
        }
    }

    let free_gt: Vec<usize> = (0..gt.len()).filter(|&i| !gt_taken[i]).collect();
    let free_hyp: Vec<usize> = (0..hyps.len()).filter(|&i| !hyp_taken[i]).collect();
    let sim = SimilarityMatrix::from_fn(free_gt.len(), free_hyp.len(), |i, j| {
        iou(&gt[free_gt[i]].bbox, &hyps[free_hyp[j]].1)
    });
    for (i, j) in solve_assignment_with(&sim, iou_threshold, GateMode::Pre).matches {
        let (gi, hi) = (free_gt[i], free_hyp[j]);
        gt_taken[gi] = true;
        hyp_taken[hi] = true;
        pairs.push((gi, hi, sim[(i, j)]));
    }

    let mut out = FrameCorrespondence::default();
    pairs.sort_by_key(|p| p.0);
    for (gi, hi, overlap) in pairs {
        if gt[gi].considered {
            out.matches.push(FrameMatch { object_id: gt[gi].object_id, track_id: hyps[hi].0, iou: overlap });
        } else {
            out.ignored.push(hyps[hi].0);
        }
    }
    out.misses = (0..gt.len()).filter(|&i| !gt_taken[i] && gt[i].considered).map(|i| gt[i].object_id).collect();
    out.false_positives = (0..hyps.len()).filter(|&i| !hyp_taken[i]).map(|i| hyps[i].0).collect();
    out.ignored.sort_unstable();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(rename = "MOTA")]
    pub mota: f64,
    #[serde(rename = "MOTP")]
    pub motp: f64,
    #[serde(rename = "IDF1")]
    pub idf1: f64,
    #[serde(rename = "Recall")]
    pub recall: f64,
    #[serde(rename = "Precision")]
    pub precision: f64,
    #[serde(rename = "TP")]
    pub tp: u64,
    #[serde(rename = "FP")]
    pub fp: u64,
    #[serde(rename = "FN")]
    pub fn_: u64,
    #[serde(rename = "IDS")]
    pub ids: u64,
    #[serde(rename = "FM")]
    pub fm: u64,
    #[serde(rename = "MT")]
    pub mt: u64,
    #[serde(rename = "ML")]
    pub ml: u64,
    #[serde(rename = "GT_count")]
    pub gt_count: u64,
    #[serde(rename = "GT_tracks")]
    pub gt_tracks: u64,
    #[serde(rename = "IDTP")]
    pub idtp: u64,
    #[serde(rename = "IDFP")]
    pub idfp: u64,
    #[serde(rename = "IDFN")]
    pub idfn: u64,
}

impl MetricsReport {
    /// `1 - (FP + FN + IDS) / GT_count`, with the denominator floored at 1.
    pub fn mota_from_counts(fp: u64, fn_: u64, ids: u64, gt_count: u64) -> f64 {
        1.0 - (fp + fn_ + ids) as f64 / gt_count.max(1) as f64
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores `results` against `gt`. Frames are aligned by index; frames that
/// appear on only one side count as empty on the other.
pub fn evaluate(gt: &[GtEntry], results: &[FrameResult], iou_threshold: f64) -> Result<MetricsReport, EvalError> {
    let mut gt_frames: BTreeMap<u64, Vec<GtEntry>> = BTreeMap::new();
    for g in gt {
        if g.frame == 0 {
            return Err(EvalError::ZeroFrame);
        }
        let frame = gt_frames.entry(g.frame).or_default();
        if frame.iter().any(|o| o.object_id == g.object_id) {
            return Err(EvalError::DuplicateObject { frame: g.frame, object_id: g.object_id });
        }
        frame.push(*g);
    }

    let mut hyp_frames: BTreeMap<u64, Vec<(TrackId, BBox)>> = BTreeMap::new();
    let mut last = 0;
    for r in results {
        if r.frame_index == 0 {
            return Err(EvalError::ZeroFrame);
        }
        if r.frame_index <= last {
            return Err(EvalError::UnorderedResults { previous: last, got: r.frame_index });
        }
        last = r.frame_index;
        let mut seen = BTreeSet::new();
        for o in &r.outputs {
            if !seen.insert(o.track_id) {
                return Err(EvalError::DuplicateTrack { frame: r.frame_index, track_id: o.track_id });
            }
        }
        hyp_frames.insert(r.frame_index, r.outputs.iter().map(|o| (o.track_id, o.bbox)).collect());
    }

    let frames: BTreeSet<u64> = gt_frames.keys().chain(hyp_frames.keys()).copied().collect();

    let mut previous: HashMap<u64, TrackId> = HashMap::new();
    let (mut tp, mut fp, mut fn_, mut ids) = (0u64, 0u64, 0u64, 0u64);
    let mut iou_sum = 0.0;
    // Per considered object: matched flag for every frame it is present in.
    let mut coverage: BTreeMap<u64, Vec<bool>> = BTreeMap::new();
    // Identity bookkeeping.
    let mut pair_hits: BTreeMap<(u64, TrackId), u64> = BTreeMap::new();
    let mut gt_total = 0u64;
    let mut hyp_total = 0u64;

    let empty_gt = Vec::new();
    let empty_hyp = Vec::new();
    for frame in frames {
        let gts = gt_frames.get(&frame).unwrap_or(&empty_gt);
        let hyps = hyp_frames.get(&frame).unwrap_or(&empty_hyp);
        let corr = match_frame(gts, hyps, iou_threshold, &previous);

        tp += corr.matches.len() as u64;
        fp += corr.false_positives.len() as u64;
        fn_ += corr.misses.len() as u64;
        for m in &corr.matches {
            iou_sum += m.iou;
            if let Some(prev) = previous.insert(m.object_id, m.track_id) {
                if prev != m.track_id {
                    ids += 1;
                }
            }
        }

        let matched: BTreeSet<u64> = corr.matches.iter().map(|m| m.object_id).collect();
        for g in gts.iter().filter(|g| g.considered) {
            coverage.entry(g.object_id).or_default().push(matched.contains(&g.object_id));
        }

        let ignored: BTreeSet<TrackId> = corr.ignored.iter().copied().collect();
        let scored_hyps: Vec<&(TrackId, BBox)> = hyps.iter().filter(|h| !ignored.contains(&h.0)).collect();
        let considered: Vec<&GtEntry> = gts.iter().filter(|g| g.considered).collect();
        gt_total += considered.len() as u64;
        hyp_total += scored_hyps.len() as u64;
        for g in &considered {
            for h in &scored_hyps {
                if iou(&g.bbox, &h.1) >= iou_threshold {
                    *pair_hits.entry((g.object_id, h.0)).or_default() += 1;
                }
            }
        }
    }

    let gt_count = tp + fn_;
    let (mut fm, mut mt, mut ml) = (0u64, 0u64, 0u64);
    for flags in coverage.values() {
        let covered = flags.iter().filter(|&&m| m).count() as f64 / flags.len() as f64;
        if covered >= MOSTLY_TRACKED {
            mt += 1;
        }
        if covered <= MOSTLY_LOST {
            ml += 1;
        }
        fm += fragmentations(flags);
    }

    let idtp = best_identity_matching(&pair_hits);
    let idfn = gt_total - idtp;
    let idfp = hyp_total - idtp;

    Ok(MetricsReport {
        mota: MetricsReport::mota_from_counts(fp, fn_, ids, gt_count),
        motp: if tp == 0 { 0.0 } else { iou_sum / tp as f64 },
        idf1: ratio(2 * idtp, 2 * idtp + idfp + idfn),
        recall: ratio(tp, gt_count),
        precision: ratio(tp, tp + fp),
        tp,
        fp,
        fn_,
        ids,
        fm,
        mt,
        ml,
        gt_count,
        gt_tracks: coverage.len() as u64,
        idtp,
        idfp,
        idfn,
    })
}

/// Interruptions of a trajectory that are later resumed.
fn fragmentations(flags: &[bool]) -> u64 {
    let Some(first) = flags.iter().position(|&m| m) else { return 0 };
    let last = flags.iter().rposition(|&m| m).unwrap_or(first);
    flags[first..=last].windows(2).filter(|w| w[0] && !w[1]).count() as u64
}

/// Largest total of co-occurrence counts under a one-to-one mapping of
/// object ids to track ids.
fn best_identity_matching(pair_hits: &BTreeMap<(u64, TrackId), u64>) -> u64 {
    if pair_hits.is_empty() {
        return 0;
    }
    let objects: Vec<u64> = pair_hits.keys().map(|k| k.0).collect::<BTreeSet<_>>().into_iter().collect();
    let tracks: Vec<TrackId> = pair_hits.keys().map(|k| k.1).collect::<BTreeSet<_>>().into_iter().collect();
    let sim = SimilarityMatrix::from_fn(objects.len(), tracks.len(), |i, j| {
        pair_hits.get(&(objects[i], tracks[j])).copied().unwrap_or(0) as f64
    });
    solve_assignment_with(&sim, 0.5, GateMode::Post).matches.iter().map(|&(i, j)| sim[(i, j)] as u64).sum()
}
