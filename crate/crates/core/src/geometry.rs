//! Axis-aligned box arithmetic and the four box similarity scores.
//!
//! Boxes are stored as `(left, top, width, height)` in continuous pixel
//! coordinates, the same layout MOT17 files use. All scores are symmetric in
//! their arguments and invariant to a uniform rescaling of both boxes.
//!
//! | score  | range        | disjoint boxes            |
//! |--------|--------------|---------------------------|
//! | IoU    | `[0, 1]`     | always 0                  |
//! | GIoU   | `(-1, 1]`    | negative, enclosure-based |
//! | DIoU   | `(-1, 1]`    | negative, distance-based  |
//! | TIoU   | `(0, 1]`     | positive, shape-aware     |

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("box field `{field}` is not finite ({value})")]
    NonFinite { field: &'static str, value: f64 },
    #[error("box must have positive extent, got width {w} and height {h}")]
    Degenerate { w: f64, h: f64 },
}

/// Axis-aligned rectangle in pixel coordinates with strictly positive area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct BBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

impl TryFrom<RawBox> for BBox {
    type Error = GeometryError;

    fn try_from(raw: RawBox) -> Result<Self, Self::Error> {
        BBox::new(raw.x, raw.y, raw.w, raw.h)
    }
}

impl From<BBox> for RawBox {
    fn from(b: BBox) -> Self {
        RawBox { x: b.x, y: b.y, w: b.w, h: b.h }
    }
}

impl BBox {
    /// Builds a box from its top-left corner and size.
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        for (field, value) in [("x", x), ("y", y), ("w", w), ("h", h)] {
            if !value.is_finite() {
                return Err(GeometryError::NonFinite { field, value });
            }
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(GeometryError::Degenerate { w, h });
        }
        Ok(Self { x, y, w, h })
    }

    /// Builds a box from corner coordinates `(x1, y1)`-`(x2, y2)`.
    pub fn from_corners(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, GeometryError> {
        Self::new(x1, y1, x2 - x1, y2 - y1)
    }

    /// Builds a box from its center and size.
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        Self::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn width(&self) -> f64 {
        self.w
    }

    pub fn height(&self) -> f64 {
        self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    /// `(x1, y1, x2, y2)` view.
    pub fn corners(&self) -> [f64; 4] {
        [self.x, self.y, self.right(), self.bottom()]
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Width over height.
    pub fn aspect(&self) -> f64 {
        self.w / self.h
    }

    /// Same box moved by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Result<Self, GeometryError> {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    /// Every coordinate and dimension multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self, GeometryError> {
        Self::new(self.x * k, self.y * k, self.w * k, self.h * k)
    }

    /// Smallest axis-aligned box covering both inputs.
    pub fn enclosing(&self, other: &BBox) -> BBox {
        let (x, w) = cover((self.x, self.w), (other.x, other.w));
        let (y, h) = cover((self.y, self.h), (other.y, other.h));
        BBox { x, y, w, h }
    }

    /// Overlap area, zero when the boxes are disjoint or only touch.
    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let iw = overlap((self.x, self.w), (other.x, other.w));
        let ih = overlap((self.y, self.h), (other.y, other.h));
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }
}

/// Length of the overlap of two `(start, length)` intervals, possibly
/// negative. When the overlap is one of the inputs its stored length is
/// returned, so a box compared with itself gives exact results.
fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    let lo = a.0.max(b.0);
    let hi = (a.0 + a.1).min(b.0 + b.1);
    if lo == a.0 && hi == a.0 + a.1 {
        a.1
    } else if lo == b.0 && hi == b.0 + b.1 {
        b.1
    } else {
        hi - lo
    }
}

/// `(start, length)` of the smallest interval covering both inputs, exact
/// when one input already covers the other.
fn cover(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let lo = a.0.min(b.0);
    let hi = (a.0 + a.1).max(b.0 + b.1);
    if lo == a.0 && hi == a.0 + a.1 {
        a
    } else if lo == b.0 && hi == b.0 + b.1 {
        b
    } else {
        (lo, hi - lo)
    }
}

/// Free-function form of [`BBox::area`].
pub fn area(b: &BBox) -> f64 {
    b.area()
}

/// Areas involved in comparing two boxes against their enclosing box `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnclosureDecomposition {
    pub intersection_area: f64,
    pub union_area: f64,
    /// Area of the smallest enclosing box `C`.
    pub enclosure_area: f64,
    /// `enclosure_area - union_area`; for disjoint boxes this is the empty
    /// region left in `C` once both boxes are removed.
    pub residual_area: f64,
}

pub fn decompose(b1: &BBox, b2: &BBox) -> EnclosureDecomposition {
    let intersection_area = b1.intersection_area(b2);
    let union_area = b1.area() + b2.area() - intersection_area;
    let enclosure_area = b1.enclosing(b2).area();
    // C covers the union, but rounding can push the difference a hair below 0.
    let residual_area = (enclosure_area - union_area).max(0.0);
    EnclosureDecomposition { intersection_area, union_area, enclosure_area, residual_area }
}

/// Intersection over union.
pub fn iou(b1: &BBox, b2: &BBox) -> f64 {
    let d = decompose(b1, b2);
    d.intersection_area / d.union_area
}

/// IoU minus the fraction of the enclosing box not covered by the union.
pub fn giou(b1: &BBox, b2: &BBox) -> f64 {
    let d = decompose(b1, b2);
    d.intersection_area / d.union_area - d.residual_area / d.enclosure_area
}

/// IoU minus squared center distance over the squared diagonal of the
/// enclosing box.
pub fn diou(b1: &BBox, b2: &BBox) -> f64 {
    let (cx1, cy1) = b1.center();
    let (cx2, cy2) = b2.center();
    let rho2 = (cx1 - cx2).powi(2) + (cy1 - cy2).powi(2);
    let c = b1.enclosing(b2);
    let diag2 = c.w * c.w + c.h * c.h;
    iou(b1, b2) - rho2 / diag2
}

/// Tracking IoU: the smaller of the two boxes' shares of their enclosing box.
///
/// Stays positive for disjoint boxes (it decays with separation instead of
/// collapsing to zero) and drops when the boxes differ in shape, even at
/// equal overlap.
pub fn tiou(b1: &BBox, b2: &BBox) -> f64 {
    let c = b1.enclosing(b2).area();
    (b1.area() / c).min(b2.area() / c)
}
