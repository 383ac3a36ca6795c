//! Acceptance gate. Runs every criterion in sequence, prints one PASS/FAIL
//! line each and exits non-zero if any fails.
//!
//! `SHIPTRACK_FUZZ_SECS` shortens or lengthens the parser fuzz run
//! (default 60).

mod common;

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shiptrack::association::{solve_assignment, SimilarityMatrix, SimilarityMetricKind};
use shiptrack::evaluation::{evaluate, GtEntry};
use shiptrack::experiment::{demo_pairs, metric_table, run_ablation, summarize_deltas, AblationSpec, OverlapRegime};
use shiptrack::geometry::{diou, giou, iou, tiou, BBox};
use shiptrack::mot_io::{
    parse_bytes, records_to_detections, records_to_ground_truth, records_to_result_records, write_detections,
    write_ground_truth, write_results, FileKind, ResultRecord,
};
use shiptrack::motion::{measurement_of, KalmanBoxFilter, NoiseConfig};
use shiptrack::synth::{generate, regime_stats, ScenarioConfig};
use shiptrack::tracker::{Detection, FrameResult, Pipeline, TrackOutput, Tracker, TrackerConfig};

use common::{best_full_assignment_total, clear_oracle, raw_iou, raw_tiou, scalar_cv_fixed_point, MicroFrame, RawBox};

type Outcome = Result<String, String>;
type Metric = fn(&BBox, &BBox) -> f64;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if let false = $cond {
            return Err(format!($($msg)+));
        }
    };
}

fn random_box(rng: &mut ChaCha8Rng) -> BBox {
    BBox::new(
        rng.random_range(-500.0..500.0),
        rng.random_range(-500.0..500.0),
        rng.random_range(0.1..200.0),
        rng.random_range(0.1..200.0),
    )
    .unwrap()
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn metric_axioms() -> Outcome {
    const PAIRS: usize = 20_000;
    let metrics: [(&str, Metric); 4] = [("iou", iou), ("giou", giou), ("diou", diou), ("tiou", tiou)];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let start = Instant::now();
    for _ in 0..PAIRS {
        let (a, b) = (random_box(&mut rng), random_box(&mut rng));
        let k = 10f64.powf(rng.random_range(-3.0..3.0));
        let (ka, kb) = (a.scaled(k).unwrap(), b.scaled(k).unwrap());
        for (name, m) in metrics {
            let v = m(&a, &b);
            ensure!(v == m(&b, &a), "{name} not symmetric on {a:?} {b:?}");
            ensure!(rel_close(v, m(&ka, &kb), 1e-9), "{name} not scale invariant on {a:?} {b:?} k={k}");
            ensure!(m(&a, &a) == 1.0, "{name}(b, b) = {} for {a:?}", m(&a, &a));
        }
        let (i, t) = (iou(&a, &b), tiou(&a, &b));
        ensure!((0.0..=1.0).contains(&i), "iou {i} out of range");
        ensure!(t > 0.0 && t <= 1.0, "tiou {t} out of range");
        ensure!(t < 1.0 || a == b, "tiou 1 for distinct {a:?} {b:?}");
    }
    // Small integer grid, where equal and nested boxes are common.
    let mut grid = Vec::new();
    for x in 0..3 {
        for y in 0..3 {
            for w in 1..3 {
                for h in 1..3 {
                    grid.push(BBox::new(x.into(), y.into(), w.into(), h.into()).unwrap());
                }
            }
        }
    }
    for a in &grid {
        for b in &grid {
            ensure!((tiou(a, b) == 1.0) == (a == b), "tiou 1 iff equal fails on {a:?} {b:?}");
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("{} random + {} grid pairs in {elapsed:.2?}", PAIRS, grid.len() * grid.len()))
}

fn fig4() -> Outcome {
    let b = |x, y, w, h| BBox::new(x, y, w, h).unwrap();
    let base = b(0.0, 0.0, 2.0, 2.0);
    let square = b(1.0, 1.0, 2.0, 2.0);
    let flat = b(1.0, 1.0, 4.0, 1.0);
    let cases = [
        ("square IoU", iou(&base, &square), 0.1429),
        ("square TIoU", tiou(&base, &square), 0.4444),
        ("flat IoU", iou(&base, &flat), 0.1429),
        ("flat TIoU", tiou(&base, &flat), 0.4000),
    ];
    for (label, got, want) in cases {
        ensure!((got - want).abs() <= 5e-4, "{label} = {got}, expected {want}");
    }
    // Independent arithmetic: 1/7, 4/9, 4/10.
    ensure!((raw_iou((0.0, 0.0, 2.0, 2.0), (1.0, 1.0, 4.0, 1.0)) - 1.0 / 7.0).abs() < 1e-12, "oracle disagrees");
    ensure!((raw_tiou((0.0, 0.0, 2.0, 2.0), (1.0, 1.0, 2.0, 2.0)) - 4.0 / 9.0).abs() < 1e-12, "oracle disagrees");
    Ok(format!("IoU {:.4}/{:.4}, TIoU {:.4}/{:.4}", cases[0].1, cases[2].1, cases[1].1, cases[3].1))
}

fn regimes() -> Outcome {
    let rows = metric_table(&demo_pairs());
    let mut seen = BTreeMap::new();
    for r in &rows {
        // Identical boxes score 1 everywhere and cannot separate the metrics.
        if r.label == "identical" {
            continue;
        }
        match r.regime {
            OverlapRegime::Large | OverlapRegime::Small => {
                ensure!(r.tiou > r.iou, "{}: tiou {} <= iou {}", r.label, r.tiou, r.iou)
            }
            OverlapRegime::None => ensure!(r.iou == 0.0 && r.tiou > 0.0, "{}: iou {} tiou {}", r.label, r.iou, r.tiou),
        }
        *seen.entry(r.regime).or_insert(0) += 1;
    }
    ensure!(seen.len() == 3, "not every regime represented: {seen:?}");
    Ok(format!("{} pairs: {seen:?}", rows.len() - 1))
}

fn assignment() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let start = Instant::now();
    for n in 0..1000 {
        let rows = rng.random_range(1..=7);
        let cols = rng.random_range(1..=7);
        // Every fourth matrix uses a few coarse levels to force ties.
        let coarse = n % 4 == 0;
        let w: Vec<Vec<f64>> = (0..rows)
            .map(|_| {
                (0..cols)
                    .map(
                        |_| if coarse { f64::from(rng.random_range(0..4u8)) / 4.0 } else { rng.random_range(0.0..1.0) },
                    )
                    .collect()
            })
            .collect();
        let sim = SimilarityMatrix::from_fn(rows, cols, |i, j| w[i][j]);
        let r = solve_assignment(&sim, f64::NEG_INFINITY);
        let best = best_full_assignment_total(&w);
        ensure!(r.matches.len() == rows.min(cols), "matrix {n}: {} matches", r.matches.len());
        ensure!(
            (r.total_similarity(&sim) - best).abs() < 1e-9,
            "matrix {n}: total {} vs {best}",
            r.total_similarity(&sim)
        );
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("1000 matrices up to 7x7 in {elapsed:.2?}"))
}

fn kalman() -> Outcome {
    let kf = KalmanBoxFilter::new(NoiseConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst = f64::INFINITY;
    for _ in 0..10_000 {
        let start = BBox::new(
            rng.random_range(0.0..1000.0),
            rng.random_range(0.0..1000.0),
            rng.random_range(5.0..200.0),
            rng.random_range(5.0..100.0),
        )
        .unwrap();
        let mut s = kf.initiate(&start);
        let (cx, cy) = start.center();
        for _ in 0..rng.random_range(1..40) {
            s = if rng.random_bool(0.5) {
                let k = rng.random_range(0.8..1.25);
                let (w, h) = (start.width() * k, start.height() * k);
                let det =
                    BBox::from_center(cx + rng.random_range(-0.5..0.5) * w, cy + rng.random_range(-0.5..0.5) * h, w, h)
                        .unwrap();
                kf.update(&s, &det).map_err(|e| e.to_string())?
            } else {
                kf.predict(&s)
            };
            ensure!((s.covariance - s.covariance.transpose()).abs().max() <= 1e-9, "covariance not symmetric");
            let min = SymmetricEigen::new(s.covariance).eigenvalues.min();
            worst = worst.min(min);
            ensure!(min >= -1e-6, "eigenvalue {min}");
        }
        let back = kf.initiate(&start).to_bbox().map_err(|e| e.to_string())?;
        for (a, b) in start.corners().iter().zip(back.corners()) {
            ensure!((a - b).abs() <= 1e-9, "roundtrip {start:?} -> {back:?}");
        }
    }

    // Fixed detection shifted 3 px along x from where the track started.
    let noise = NoiseConfig::default();
    let start = BBox::new(6.0, 8.0, 8.0, 4.0).unwrap();
    let target = start.translated(3.0, 0.0).unwrap();
    let cycles = |from: &BBox, to: &BBox| -> Result<shiptrack::KalmanTrackState, String> {
        let mut s = kf.initiate(from);
        for _ in 0..50 {
            s = kf.update(&kf.predict(&s), to).map_err(|e| e.to_string())?;
        }
        Ok(s)
    };
    let s = cycles(&start, &target)?;
    let z = measurement_of(&target);
    let err = (0..4).map(|i| (s.mean[i] - z[i]).abs()).fold(0.0, f64::max);
    let oracle = scalar_cv_fixed_point(10.0, 13.0, 4.0, noise.std_weight_position, noise.std_weight_velocity, 50);
    ensure!((s.mean[0] - oracle).abs() <= 1e-9, "cx {} vs scalar oracle {oracle}", s.mean[0]);
    ensure!(err <= 1e-3, "after 50 cycles off by {err}");
    // Reported only: a 30 px jump with a shape change converges proportionally slower.
    let far = cycles(&BBox::new(100.0, 100.0, 40.0, 20.0).unwrap(), &BBox::new(130.0, 95.0, 48.0, 16.0).unwrap())?;
    let far_err = (far.mean[0] - 154.0).abs().max((far.mean[1] - 103.0).abs());
    Ok(format!("min eigenvalue {worst:.3e}; 3 px fixed-point error {err:.2e} (30 px jump: {far_err:.2e})"))
}

fn micro_scenario(rng: &mut ChaCha8Rng) -> Vec<MicroFrame> {
    let n_objects = rng.random_range(1..=4u64);
    let n_frames = rng.random_range(1..=6);
    let mut pos: Vec<RawBox> = (0..n_objects)
        .map(|_| {
            (
                rng.random_range(0.0..40.0),
                rng.random_range(0.0..20.0),
                rng.random_range(8.0..14.0),
                rng.random_range(8.0..14.0),
            )
        })
        .collect();
    let mut frames = Vec::new();
    for _ in 0..n_frames {
        let mut f = MicroFrame::default();
        for (k, p) in pos.iter_mut().enumerate() {
            p.0 += rng.random_range(-3.0..3.0);
            p.1 += rng.random_range(-3.0..3.0);
            let id = k as u64 + 1;
            if rng.random_bool(0.85) {
                f.objects.push((id, *p));
            }
            if rng.random_bool(0.85) {
                let hid = if rng.random_bool(0.2) { rng.random_range(1..=6) } else { id };
                let h = (p.0 + rng.random_range(-3.0..3.0), p.1 + rng.random_range(-3.0..3.0), p.2, p.3);
                if f.hyps.iter().all(|e| e.0 != hid) {
                    f.hyps.push((hid, h));
                }
            }
        }
        if rng.random_bool(0.2) {
            let hid = rng.random_range(1..=6);
            if f.hyps.iter().all(|e| e.0 != hid) {
                f.hyps.push((hid, (rng.random_range(0.0..40.0), rng.random_range(0.0..20.0), 10.0, 10.0)));
            }
        }
        frames.push(f);
    }
    frames
}

fn to_inputs(frames: &[MicroFrame]) -> (Vec<GtEntry>, Vec<FrameResult>) {
    let b = |r: RawBox| BBox::new(r.0, r.1, r.2, r.3).unwrap();
    let mut gt = Vec::new();
    let mut res = Vec::new();
    for (i, f) in frames.iter().enumerate() {
        let frame = i as u64 + 1;
        for &(id, r) in &f.objects {
            gt.push(GtEntry { frame, object_id: id, bbox: b(r), visibility: 1.0, class_id: 1, considered: true });
        }
        res.push(FrameResult {
            frame_index: frame,
            outputs: f.hyps.iter().map(|&(id, r)| TrackOutput { track_id: id, bbox: b(r), confidence: 1.0 }).collect(),
        });
    }
    (gt, res)
}

fn clear() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut totals = (0, 0, 0);
    for n in 0..500 {
        let frames = micro_scenario(&mut rng);
        let (gt, res) = to_inputs(&frames);
        let r = evaluate(&gt, &res, 0.5).map_err(|e| e.to_string())?;
        let o = clear_oracle(&frames, 0.5);
        ensure!((r.tp, r.fp, r.fn_, r.ids) == (o.tp, o.fp, o.fn_, o.ids), "scenario {n}: got {r:?}, oracle {o:?}");
        let gt_count = o.tp + o.fn_;
        let mota = 1.0 - (o.fp + o.fn_ + o.ids) as f64 / gt_count.max(1) as f64;
        ensure!(r.mota == mota, "scenario {n}: MOTA {} vs {mota}", r.mota);
        totals = (totals.0 + o.fp, totals.1 + o.fn_, totals.2 + o.ids);
    }

    // One miss among four objects; one switch over four frames.
    let sq = |x| (x, 0.0, 10.0, 10.0);
    let miss = vec![
        MicroFrame { objects: vec![(1, sq(0.0)), (2, sq(50.0))], hyps: vec![(1, sq(0.0)), (2, sq(50.0))] },
        MicroFrame { objects: vec![(1, sq(0.0)), (2, sq(50.0))], hyps: vec![(1, sq(0.0))] },
    ];
    let switch: Vec<MicroFrame> = (1..=4)
        .map(|f| MicroFrame { objects: vec![(1, sq(0.0))], hyps: vec![(if f < 3 { 1 } else { 2 }, sq(0.0))] })
        .collect();
    for (label, frames) in [("miss", miss), ("switch", switch)] {
        let (gt, res) = to_inputs(&frames);
        let r = evaluate(&gt, &res, 0.5).map_err(|e| e.to_string())?;
        ensure!(r.mota == 0.75, "{label} toy: MOTA {}", r.mota);
    }
    Ok(format!("500 scenarios (FP {}, FN {}, IDS {} in total); toys at MOTA 0.75", totals.0, totals.1, totals.2))
}

fn ablation_spec() -> AblationSpec {
    AblationSpec {
        scenario: ScenarioConfig {
            n_ships: 10,
            n_frames: 800,
            fps_subsample: 4,
            jitter_std: 60.0,
            detection_noise_std: 2.0,
            miss_prob: 0.05,
            clutter_rate: 0.5,
            ..ScenarioConfig::default()
        },
        tracker: TrackerConfig {
            gate: 0.1,
            min_hits: 1,
            coast_output_frames: 0,
            noise: NoiseConfig::new(NoiseConfig::default().std_weight_position, 0.2).unwrap(),
            ..TrackerConfig::default()
        },
        pipelines: vec![Pipeline::Sort, Pipeline::Byte],
        metrics: vec![SimilarityMetricKind::IoU, SimilarityMetricKind::TIoU],
        seeds: vec![1, 2, 3, 4, 5],
        iou_threshold: 0.5,
    }
}

fn ablation() -> Outcome {
    let spec = ablation_spec();
    let start = Instant::now();
    let mut zero = Vec::new();
    for &seed in &spec.seeds {
        let s = generate(&ScenarioConfig { seed, ..spec.scenario }).map_err(|e| e.to_string())?;
        zero.push(regime_stats(&s).zero_iou_fraction);
    }
    let rows = run_ablation(&spec).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(zero.iter().all(|&z| z > 0.5), "zero-IoU fractions {zero:?}");
    let mut notes = Vec::new();
    for d in summarize_deltas(&rows, SimilarityMetricKind::TIoU, SimilarityMetricKind::IoU) {
        let p = d.pipeline.name();
        ensure!(d.median_ids < d.median_ids_baseline, "{p}: median IDS {} vs {}", d.median_ids, d.median_ids_baseline);
        ensure!(
            d.median_mota > d.median_mota_baseline,
            "{p}: median MOTA {} vs {}",
            d.median_mota,
            d.median_mota_baseline
        );
        notes.push(format!(
            "{p} MOTA {:.3} vs {:.3}, IDS {} vs {}",
            d.median_mota, d.median_mota_baseline, d.median_ids, d.median_ids_baseline
        ));
    }
    ensure!(notes.len() == 2, "expected two pipelines, got {}", notes.len());
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    let zmin = zero.iter().copied().fold(1.0, f64::min);
    Ok(format!("zero-IoU >= {zmin:.2}; {}; {elapsed:.1?}", notes.join("; ")))
}

fn disjoint_hop() -> Outcome {
    let ids = |metric| -> Result<usize, String> {
        let mut t = Tracker::new(TrackerConfig { metric, ..TrackerConfig::default() }).map_err(|e| e.to_string())?;
        for (f, x) in [(1, 0.0), (2, 12.0), (3, 24.0)] {
            let d = Detection::new(BBox::new(x, 0.0, 10.0, 10.0).unwrap(), 0.9, 1).map_err(|e| e.to_string())?;
            t.step(f, &[d]).map_err(|e| e.to_string())?;
        }
        Ok(t.flush().len())
    };
    let (by_iou, by_tiou) = (ids(SimilarityMetricKind::IoU)?, ids(SimilarityMetricKind::TIoU)?);
    ensure!(by_iou >= 2, "IoU produced {by_iou} ids");
    ensure!(by_tiou == 1, "TIoU produced {by_tiou} ids");
    Ok(format!("IoU {by_iou} ids, TIoU {by_tiou} id"))
}

fn io_roundtrip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut cents = |lo: i64, hi: i64| rng.random_range(lo..hi) as f64 / 100.0;
    let mut records: Vec<ResultRecord> = Vec::new();
    for i in 0..1000u64 {
        records.push(ResultRecord {
            frame: i / 10 + 1,
            track_id: i % 10 + 1,
            bbox: BBox::new(cents(-100_000, 100_000), cents(-100_000, 100_000), cents(1, 100_000), cents(1, 100_000))
                .unwrap(),
            conf: 0.0,
        });
    }
    for r in &mut records {
        r.conf = f64::from(rng.random_range(0..=10_000u32)) / 10_000.0;
    }

    let mut buf = Vec::new();
    write_results(&records, &mut buf).map_err(|e| e.to_string())?;
    let back = records_to_result_records(&parse_bytes(&buf, FileKind::Results).map_err(|e| e.to_string())?);
    ensure!(back == records, "result records differ after roundtrip");

    let gt: Vec<GtEntry> = records
        .iter()
        .map(|r| GtEntry {
            frame: r.frame,
            object_id: r.track_id,
            bbox: r.bbox,
            visibility: r.conf,
            class_id: rng.random_range(1..8),
            considered: rng.random_bool(0.8),
        })
        .collect();
    let mut buf = Vec::new();
    write_ground_truth(&gt, &mut buf).map_err(|e| e.to_string())?;
    let back = records_to_ground_truth(&parse_bytes(&buf, FileKind::GroundTruth).map_err(|e| e.to_string())?);
    ensure!(back == gt, "ground truth differs after roundtrip");

    let mut frames: BTreeMap<u64, Vec<Detection>> = BTreeMap::new();
    for r in &records {
        frames.entry(r.frame).or_default().push(Detection::new(r.bbox, r.conf, 3).unwrap());
    }
    let mut buf = Vec::new();
    write_detections(frames.iter().map(|(&f, d)| (f, d.as_slice())), &mut buf).map_err(|e| e.to_string())?;
    let back = records_to_detections(&parse_bytes(&buf, FileKind::Detections).map_err(|e| e.to_string())?);
    ensure!(back == frames, "detections differ after roundtrip");
    Ok("1000 result, ground-truth and detection records exact".into())
}

const TOKENS: &[&str] = &[
    ",",
    "-1",
    "0",
    "1",
    "nan",
    "NaN",
    "inf",
    "-inf",
    "1e309",
    "-0",
    "1.5",
    "9e15",
    "18446744073709551616",
    "\r",
    "\n",
    " ",
    "\t",
    "\u{feff}",
    "\u{00e9}",
    "e",
    ".",
    "+",
    "--1",
];

const SEEDS: &[&str] = &[
    "1,-1,794.2,47.5,71.2,174.8,67.5,-1,-1,-1",
    "1,1,912,484,97,109,0,7,1",
    "3,12,10.00,20.00,30.00,40.00,0.9500,-1,-1,-1",
    "2,-1,1.5,2.5,3.5,4.5,0.25,2,-1,-1\r\n",
    "5,3,0,0,1,1,1,1,0.5,10,20,30",
];

fn mutate(rng: &mut ChaCha8Rng) -> Vec<u8> {
    if rng.random_bool(0.1) {
        return (0..rng.random_range(0..200)).map(|_| rng.random()).collect();
    }
    let mut bytes: Vec<u8> = Vec::new();
    for _ in 0..rng.random_range(1..4) {
        bytes.extend_from_slice(SEEDS[rng.random_range(0..SEEDS.len())].as_bytes());
        bytes.push(b'\n');
    }
    for _ in 0..rng.random_range(1..8) {
        let at = rng.random_range(0..=bytes.len());
        match rng.random_range(0..5) {
            0 if at < bytes.len() => bytes[at] ^= 1 << rng.random_range(0..8),
            1 => bytes.insert(at, rng.random()),
            2 if at < bytes.len() => {
                bytes.remove(at);
            }
            3 => {
                let t = TOKENS[rng.random_range(0..TOKENS.len())];
                bytes.splice(at..at, t.bytes());
            }
            _ => bytes.truncate(at),
        }
    }
    bytes
}

fn parser_fuzz() -> Outcome {
    let secs: u64 = std::env::var("SHIPTRACK_FUZZ_SECS").ok().and_then(|s| s.parse().ok()).unwrap_or(60);
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let deadline = Instant::now() + Duration::from_secs(secs);
    let (mut inputs, mut accepted, mut crashes) = (0u64, 0u64, 0u64);
    let kinds = [FileKind::Detections, FileKind::GroundTruth, FileKind::Results];
    while Instant::now() < deadline {
        for _ in 0..1000 {
            let bytes = mutate(&mut rng);
            for kind in kinds {
                match panic::catch_unwind(AssertUnwindSafe(|| parse_bytes(&bytes, kind).is_ok())) {
                    Ok(true) => accepted += 1,
                    Ok(false) => {}
                    Err(_) => crashes += 1,
                }
            }
            inputs += 1;
        }
    }
    ensure!(crashes == 0, "{crashes} panics over {inputs} inputs");
    Ok(format!("{inputs} inputs over {secs} s, {accepted} parses accepted, no panics"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("metric axioms", metric_axioms),
        ("shape sensitivity pairs", fig4),
        ("overlap regime taxonomy", regimes),
        ("assignment optimality", assignment),
        ("kalman numerics", kalman),
        ("clear oracle equivalence", clear),
        ("ablation direction", ablation),
        ("disjoint hop", disjoint_hop),
        ("io fidelity", io_roundtrip),
    ];
    let mut failed = 0;
    let mut report = |name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("PASS  {name}: {detail}"),
        Err(why) => {
            failed += 1;
            println!("FAIL  {name}: {why}");
        }
    };
    for (name, run) in criteria {
        let outcome = panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        report(name, outcome);
    }
    let hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let fuzz = parser_fuzz();
    panic::set_hook(hook);
    report("parser fuzz", fuzz);

    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
