//! Similarity matrices, optimal and greedy assignment, and gating.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, BBox};

/// Rows are tracks (predictions), columns are detections.
pub type SimilarityMatrix = DMatrix<f64>;

/// Default similarity floor below which a track/detection pair is rejected.
pub const DEFAULT_GATE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssociationError {
    #[error("unknown similarity metric `{0}` (expected one of iou, giou, diou, tiou)")]
    UnknownMetric(String),
    #[error("unknown gate mode `{0}` (expected post or pre)")]
    UnknownGateMode(String),
    #[error("addend is {got_rows}x{got_cols} but the similarity matrix is {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, got_rows: usize, got_cols: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityMetricKind {
    IoU,
    GIoU,
    DIoU,
    TIoU,
}

impl SimilarityMetricKind {
    pub const ALL: [SimilarityMetricKind; 4] = [Self::IoU, Self::GIoU, Self::DIoU, Self::TIoU];

    pub fn score(self, a: &BBox, b: &BBox) -> f64 {
        match self {
            Self::IoU => geometry::iou(a, b),
            Self::GIoU => geometry::giou(a, b),
            Self::DIoU => geometry::diou(a, b),
            Self::TIoU => geometry::tiou(a, b),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::IoU => "iou",
            Self::GIoU => "giou",
            Self::DIoU => "diou",
            Self::TIoU => "tiou",
        }
    }
}

impl fmt::Display for SimilarityMetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SimilarityMetricKind {
    type Err = AssociationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| AssociationError::UnknownMetric(s.to_string()))
    }
}

/// When the gate is applied relative to the optimal solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateMode {
    /// Solve on the full matrix, then strike matched pairs below the gate.
    #[default]
    Post,
    /// Treat sub-gate pairs as forbidden during the solve, so the solver
    /// maximizes the number of admissible pairs first and their total
    /// similarity second.
    Pre,
}

impl FromStr for GateMode {
    type Err = AssociationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "post" => Ok(Self::Post),
            "pre" => Ok(Self::Pre),
            _ => Err(AssociationError::UnknownGateMode(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentResult {
    /// `(track_index, detection_index)`, sorted by track index.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

impl AssignmentResult {
    fn from_matches(mut matches: Vec<(usize, usize)>, n_tracks: usize, n_dets: usize) -> Self {
        matches.sort_unstable();
        let mut track_used = vec![false; n_tracks];
        let mut det_used = vec![false; n_dets];
        for &(t, d) in &matches {
            track_used[t] = true;
            det_used[d] = true;
        }
        Self {
            matches,
            unmatched_tracks: (0..n_tracks).filter(|&t| !track_used[t]).collect(),
            unmatched_detections: (0..n_dets).filter(|&d| !det_used[d]).collect(),
        }
    }

    /// Sum of the matched entries of `sim`, in track order.
    pub fn total_similarity(&self, sim: &SimilarityMatrix) -> f64 {
        self.matches.iter().map(|&(t, d)| sim[(t, d)]).sum()
    }
}

/// Entry `(i, j)` is `kind` applied to `preds[i]` and `dets[j]`.
pub fn similarity_matrix(preds: &[BBox], dets: &[BBox], kind: SimilarityMetricKind) -> SimilarityMatrix {
    SimilarityMatrix::from_fn(preds.len(), dets.len(), |i, j| kind.score(&preds[i], &dets[j]))
}

/// Adds an externally computed term (for instance an appearance affinity)
/// to a similarity matrix.
pub fn add_similarity(sim: &mut SimilarityMatrix, addend: &SimilarityMatrix) -> Result<(), AssociationError> {
    if sim.shape() != addend.shape() {
        return Err(AssociationError::ShapeMismatch {
            rows: sim.nrows(),
            cols: sim.ncols(),
            got_rows: addend.nrows(),
            got_cols: addend.ncols(),
        });
    }
    *sim += addend;
    Ok(())
}

/// Maximum-total-similarity one-to-one assignment with post-solve gating.
pub fn solve_assignment(sim: &SimilarityMatrix, gate: f64) -> AssignmentResult {
    solve_assignment_with(sim, gate, GateMode::Post)
}

/// Optimal assignment over `min(rows, cols)` pairs.
///
/// Among assignments with the same optimal total, the one whose sorted match
/// list is lexicographically smallest wins. Non-finite entries are never
/// matched.
pub fn solve_assignment_with(sim: &SimilarityMatrix, gate: f64, mode: GateMode) -> AssignmentResult {
    let (rows, cols) = sim.shape();
    if rows == 0 || cols == 0 {
        return AssignmentResult::from_matches(Vec::new(), rows, cols);
    }

    let admissible = |v: f64| v.is_finite() && (mode == GateMode::Post || v >= gate);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in sim.iter().filter(|v| admissible(**v)) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return AssignmentResult::from_matches(Vec::new(), rows, cols);
    }

    // Any assignment with one more forbidden pair loses to every assignment
    // with one fewer, whatever the admissible entries are.
    let k = rows.min(cols);
    let penalty = k as f64 * (hi - lo) + 1.0;
    let cost_of = |v: f64| if admissible(v) { hi - v } else { hi - lo + penalty };

    // The solver wants the short side as rows.
    let transposed = rows > cols;
    let m = rows.max(cols);
    let mut cost = vec![0.0; k * m];
    for i in 0..rows {
        for j in 0..cols {
            let (s, l) = if transposed { (j, i) } else { (i, j) };
            cost[s * m + l] = cost_of(sim[(i, j)]);
        }
    }

    let (short_to_long, u, v) = hungarian(&cost, k, m);
    let short_to_long = lexicographic_refine(&cost, k, m, short_to_long, &u, &v, transposed);

    let matches = short_to_long
        .iter()
        .enumerate()
        .map(|(s, &l)| if transposed { (l, s) } else { (s, l) })
        .filter(|&(i, j)| sim[(i, j)].is_finite() && sim[(i, j)] >= gate)
        .collect();
    AssignmentResult::from_matches(matches, rows, cols)
}

/// Repeatedly takes the largest remaining entry at or above `gate`.
/// Equal entries are taken in `(track, detection)` order.
pub fn greedy_assignment(sim: &SimilarityMatrix, gate: f64) -> AssignmentResult {
    let (rows, cols) = sim.shape();
    let mut candidates: Vec<(f64, usize, usize)> = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .filter_map(|(i, j)| {
            let v = sim[(i, j)];
            (v.is_finite() && v >= gate).then_some((v, i, j))
        })
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut row_used = vec![false; rows];
    let mut col_used = vec![false; cols];
    let mut matches = Vec::new();
    for (_, i, j) in candidates {
        if !row_used[i] && !col_used[j] {
            row_used[i] = true;
            col_used[j] = true;
            matches.push((i, j));
        }
    }
    AssignmentResult::from_matches(matches, rows, cols)
}

/// Shortest-augmenting-path Hungarian method on a dense `k x m` cost matrix
/// (row-major, `k <= m`). Every row is assigned. Returns the row-to-column
/// assignment with dual potentials satisfying `cost[i][j] - u[i] - v[j] >= 0`,
/// equality on assigned pairs, `v <= 0`, and `v = 0` on unassigned columns.
fn hungarian(cost: &[f64], k: usize, m: usize) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    // 1-based internally; index 0 is the virtual root.
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![f64::INFINITY; m + 1];
    let mut used = vec![false; m + 1];

    for i in 1..=k {
        owner[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let row = &cost[(i0 - 1) * m..i0 * m];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0; k];
    for j in 1..=m {
        if owner[j] != 0 {
            row_to_col[owner[j] - 1] = j - 1;
        }
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}

/// A short-side row, or the pool of interchangeable padding rows that absorb
/// the long-side columns left unassigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Row(usize),
    Pool,
}

/// Optimal-assignment bookkeeping over the tight subgraph of a fixed dual
/// solution. Every optimal assignment uses only tight edges and leaves only
/// zero-potential columns unassigned, so alternative optima are reached by
/// rotating alternating cycles, with the padding pool as a shared relay.
struct TightGraph<'a> {
    cost: &'a [f64],
    m: usize,
    u: &'a [f64],
    v: &'a [f64],
    eps: f64,
    row_to_col: Vec<usize>,
    col_to_row: Vec<Option<usize>>,
    row_fixed: Vec<bool>,
    col_fixed: Vec<bool>,
}

impl TightGraph<'_> {
    fn tight(&self, node: Node, col: usize) -> bool {
        match node {
            Node::Row(r) => self.cost[r * self.m + col] - self.u[r] - self.v[col] <= self.eps,
            Node::Pool => self.v[col] >= -self.eps,
        }
    }

    fn partner_of_col(&self, col: usize) -> Node {
        self.col_to_row[col].map_or(Node::Pool, Node::Row)
    }

    /// Tries to move to an optimal assignment containing `(node, col)` without
    /// touching fixed rows or columns.
    #[allow(clippy::needless_range_loop)]
    fn force(&mut self, node: Node, col: usize) -> bool {
        let start = self.partner_of_col(col);
        if start == node {
            return true;
        }
        // The cycle closes at the column `node` gives up; the pool gives up
        // whichever free column the search reaches first.
        let closes = |g: &Self, c: usize| match node {
            Node::Row(r) => g.row_to_col[r] == c,
            Node::Pool => g.col_to_row[c].is_none(),
        };

        let k = self.row_to_col.len();
        let mut parent: Vec<Option<Node>> = vec![None; self.m];
        let mut row_seen = vec![false; k];
        // The free column through which the search entered the pool.
        let mut pool_via: Option<usize> = None;
        match start {
            Node::Row(r) => row_seen[r] = true,
            Node::Pool => pool_via = Some(col),
        }
        if let Node::Row(r) = node {
            row_seen[r] = true;
        }

        let mut queue = std::collections::VecDeque::from([start]);
        let mut end = None;
        'bfs: while let Some(n) = queue.pop_front() {
            for c in 0..self.m {
                if c == col || self.col_fixed[c] || parent[c].is_some() || !self.tight(n, c) {
                    continue;
                }
                parent[c] = Some(n);
                if closes(self, c) {
                    end = Some(c);
                    break 'bfs;
                }
                let next = self.partner_of_col(c);
                let fresh = match next {
                    Node::Row(r) => !std::mem::replace(&mut row_seen[r], true),
                    Node::Pool => {
                        pool_via.is_none() && {
                            pool_via = Some(c);
                            true
                        }
                    }
                };
                if fresh {
                    queue.push_back(next);
                }
            }
        }
        let Some(mut c) = end else { return false };

        loop {
            let n = parent[c].expect("path column has a parent");
            // The column `n` held before, which is where the path came from.
            let prev = match n {
                Node::Row(r) => self.row_to_col[r],
                Node::Pool => pool_via.expect("pool reached through a free column"),
            };
            self.assign(n, c);
            if n == start {
                break;
            }
            c = prev;
        }
        self.assign(node, col);
        true
    }

    fn assign(&mut self, node: Node, col: usize) {
        match node {
            Node::Row(r) => {
                self.row_to_col[r] = col;
                self.col_to_row[col] = Some(r);
            }
            Node::Pool => self.col_to_row[col] = None,
        }
    }
}
/// Moves an optimal assignment to the one whose `(track, detection)` match
/// list is lexicographically smallest: tracks are settled in index order,
/// each taking the lowest detection it can keep in some optimum, and staying
/// unmatched only when no detection is possible. `transposed` says the short
/// side holds detections rather than tracks.
fn lexicographic_refine(
    cost: &[f64],
    k: usize,
    m: usize,
    row_to_col: Vec<usize>,
    u: &[f64],
    v: &[f64],
    transposed: bool,
) -> Vec<usize> {
    let scale = cost.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
    let mut col_to_row = vec![None; m];
    for (r, &c) in row_to_col.iter().enumerate() {
        col_to_row[c] = Some(r);
    }
    let mut g = TightGraph {
        cost,
        m,
        u,
        v,
        eps: 1e-10 * scale,
        row_to_col,
        col_to_row,
        row_fixed: vec![false; k],
        col_fixed: vec![false; m],
    };

    if transposed {
        for t in 0..m {
            let current = g.partner_of_col(t);
            let candidates: Vec<Node> =
                (0..k).filter(|&r| !g.row_fixed[r]).map(Node::Row).chain([Node::Pool]).collect();
            for node in candidates {
                if !g.tight(node, t) {
                    continue;
                }
                if node == current || g.force(node, t) {
                    break;
                }
            }
            g.col_fixed[t] = true;
            if let Some(r) = g.col_to_row[t] {
                g.row_fixed[r] = true;
            }
        }
    } else {
        for r in 0..k {
            for c in 0..m {
                if g.col_fixed[c] || !g.tight(Node::Row(r), c) {
                    continue;
                }
                if g.row_to_col[r] == c || g.force(Node::Row(r), c) {
                    break;
                }
            }
            g.row_fixed[r] = true;
            g.col_fixed[g.row_to_col[r]] = true;
        }
    }
    g.row_to_col
}
