//! Brute-force reference implementations shared by the integration tests.
//! They favour obviousness over speed and share no code with the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

/// Plain `(x, y, w, h)` box, kept apart from the library type on purpose.
pub type RawBox = (f64, f64, f64, f64);

pub fn raw_iou(a: RawBox, b: RawBox) -> f64 {
    let ix = (a.0 + a.2).min(b.0 + b.2) - a.0.max(b.0);
    let iy = (a.1 + a.3).min(b.1 + b.3) - a.1.max(b.1);
    let inter = ix.max(0.0) * iy.max(0.0);
    inter / (a.2 * a.3 + b.2 * b.3 - inter)
}

pub fn raw_tiou(a: RawBox, b: RawBox) -> f64 {
    let cw = (a.0 + a.2).max(b.0 + b.2) - a.0.min(b.0);
    let ch = (a.1 + a.3).max(b.1 + b.3) - a.1.min(b.1);
    (a.2 * a.3).min(b.2 * b.3) / (cw * ch)
}

/// Calls `visit` with every injective map from `0..k` into `0..n`.
pub fn for_each_injection(k: usize, n: usize, visit: &mut dyn FnMut(&[usize])) {
    fn go(pos: usize, k: usize, n: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if pos == k {
            visit(cur);
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                go(pos + 1, k, n, used, cur, visit);
                cur.pop();
                used[j] = false;
            }
        }
    }
    go(0, k, n, &mut vec![false; n], &mut Vec::new(), visit);
}

/// Largest total over assignments that pair every row of the shorter side.
pub fn best_full_assignment_total(w: &[Vec<f64>]) -> f64 {
    let rows = w.len();
    let cols = w.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let mut best = f64::NEG_INFINITY;
    if rows <= cols {
        for_each_injection(rows, cols, &mut |p| {
            best = best.max(p.iter().enumerate().map(|(i, &j)| w[i][j]).sum());
        });
    } else {
        for_each_injection(cols, rows, &mut |p| {
            best = best.max(p.iter().enumerate().map(|(j, &i)| w[i][j]).sum());
        });
    }
    best
}

/// Over all partial one-to-one matchings using only pairs with
/// `w >= floor`, the one with the most pairs and then the largest total.
/// Returns `(count, total, pairs)`.
pub fn best_partial_matching(w: &[Vec<f64>], floor: f64) -> (usize, f64, Vec<(usize, usize)>) {
    fn go(
        i: usize,
        w: &[Vec<f64>],
        floor: f64,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        total: f64,
        best: &mut (usize, f64, Vec<(usize, usize)>),
    ) {
        if i == w.len() {
            if cur.len() > best.0 || (cur.len() == best.0 && total > best.1) {
                *best = (cur.len(), total, cur.clone());
            }
            return;
        }
        go(i + 1, w, floor, used, cur, total, best);
        for j in 0..used.len() {
            if !used[j] && w[i][j] >= floor {
                used[j] = true;
                cur.push((i, j));
                go(i + 1, w, floor, used, cur, total + w[i][j], best);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let cols = w.first().map_or(0, Vec::len);
    let mut best = (0, f64::NEG_INFINITY, Vec::new());
    go(0, w, floor, &mut vec![false; cols], &mut Vec::new(), 0.0, &mut best);
    if best.0 == 0 {
        best.1 = 0.0;
    }
    best
}

/// One frame of a micro-scenario: `(id, box)` for objects and hypotheses.
#[derive(Debug, Clone, Default)]
pub struct MicroFrame {
    pub objects: Vec<(u64, RawBox)>,
    pub hyps: Vec<(u64, RawBox)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClearCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub ids: u64,
}

/// CLEAR counting: keep last frame's pairs that still overlap enough, then
/// match the rest for the most pairs and, among those, the largest IoU sum.
pub fn clear_oracle(frames: &[MicroFrame], thr: f64) -> ClearCounts {
    let mut last: BTreeMap<u64, u64> = BTreeMap::new();
    let mut c = ClearCounts::default();
    for f in frames {
        let mut pairs: Vec<(u64, u64)> = Vec::new();
        let mut obj_used = vec![false; f.objects.len()];
        let mut hyp_used = vec![false; f.hyps.len()];
        for (oi, &(oid, ob)) in f.objects.iter().enumerate() {
            if let Some(&hid) = last.get(&oid) {
                if let Some(hi) = f.hyps.iter().position(|h| h.0 == hid) {
                    if !hyp_used[hi] && raw_iou(ob, f.hyps[hi].1) >= thr {
                        obj_used[oi] = true;
                        hyp_used[hi] = true;
                        pairs.push((oid, hid));
                    }
                }
            }
        }
        let free_o: Vec<usize> = (0..f.objects.len()).filter(|&i| !obj_used[i]).collect();
        let free_h: Vec<usize> = (0..f.hyps.len()).filter(|&i| !hyp_used[i]).collect();
        let w: Vec<Vec<f64>> =
            free_o.iter().map(|&o| free_h.iter().map(|&h| raw_iou(f.objects[o].1, f.hyps[h].1)).collect()).collect();
        let (_, _, extra) = best_partial_matching(&w, thr);
        for (i, j) in extra {
            pairs.push((f.objects[free_o[i]].0, f.hyps[free_h[j]].0));
        }
        for &(oid, hid) in &pairs {
            if let Some(prev) = last.insert(oid, hid) {
                if prev != hid {
                    c.ids += 1;
                }
            }
        }
        c.tp += pairs.len() as u64;
        c.fn_ += (f.objects.len() - pairs.len()) as u64;
        c.fp += (f.hyps.len() - pairs.len()) as u64;
    }
    c
}

/// Best identity-true-positive count over one-to-one maps of object ids to
/// hypothesis ids, by enumeration.
pub fn idtp_oracle(frames: &[MicroFrame], thr: f64) -> u64 {
    let objects: Vec<u64> =
        frames.iter().flat_map(|f| f.objects.iter().map(|o| o.0)).collect::<BTreeSet<_>>().into_iter().collect();
    let hyps: Vec<u64> =
        frames.iter().flat_map(|f| f.hyps.iter().map(|h| h.0)).collect::<BTreeSet<_>>().into_iter().collect();
    let mut hits = vec![vec![0u64; hyps.len()]; objects.len()];
    for f in frames {
        for &(oid, ob) in &f.objects {
            for &(hid, hb) in &f.hyps {
                if raw_iou(ob, hb) >= thr {
                    let oi = objects.iter().position(|&o| o == oid).unwrap();
                    let hi = hyps.iter().position(|&h| h == hid).unwrap();
                    hits[oi][hi] += 1;
                }
            }
        }
    }
    // Pad with never-matching columns so every object may stay unmapped.
    let width = hyps.len() + objects.len();
    let mut best = 0;
    for_each_injection(objects.len(), width, &mut |p| {
        let total: u64 = p.iter().enumerate().filter(|(_, &j)| j < hyps.len()).map(|(i, &j)| hits[i][j]).sum();
        best = best.max(total);
    });
    best
}

/// One axis of a constant-velocity Kalman filter, written out in scalars:
/// position and velocity start at `(x0, 0)` with standard deviations
/// `2 sp h` and `10 sv h`, then `n` rounds of predict and update against a
/// fixed measurement `z`. Returns the final position estimate.
pub fn scalar_cv_fixed_point(x0: f64, z: f64, h: f64, sp: f64, sv: f64, n: usize) -> f64 {
    let (mut x, mut v) = (x0, 0.0);
    let (mut pxx, mut pxv, mut pvv) = ((2.0 * sp * h).powi(2), 0.0, (10.0 * sv * h).powi(2));
    let (q_pos, q_vel, r) = ((sp * h).powi(2), (sv * h).powi(2), (sp * h).powi(2));
    for _ in 0..n {
        x += v;
        let (a, b, c) = (pxx + 2.0 * pxv + pvv + q_pos, pxv + pvv, pvv + q_vel);
        let s = a + r;
        let (kx, kv) = (a / s, b / s);
        let innovation = z - x;
        x += kx * innovation;
        v += kv * innovation;
        pxx = (1.0 - kx) * a;
        pxv = (1.0 - kx) * b;
        pvv = c - kv * b;
    }
    x
}
