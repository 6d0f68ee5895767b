//! Box regression codecs, coarse-box upsampling, score fusion, and NMS.
//!
//! Two encodings are used: the proposal head regresses stride-normalized
//! distances (l, t, r, b) from a feature point to the box sides; the
//! refinement head regresses stride-normalized corner offsets between a
//! coarse box and the ground truth, treating coarse boxes as dynamic anchors.

use serde::{Deserialize, Serialize};

use crate::geom::{iou, BBox, Detection, Point};
use crate::{Error, Result};

/// Regression target for one feature point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegressionTarget {
    /// Distances (l, t, r, b) from the point to the box sides, in strides.
    PointBox { l: f64, t: f64, r: f64, b: f64 },
    /// Corner offsets (dx0, dy0, dx1, dy1) from a coarse box, in strides.
    Cascade {
        dx0: f64,
        dy0: f64,
        dx1: f64,
        dy1: f64,
    },
}

impl RegressionTarget {
    /// Euclidean norm of the four components.
    pub fn norm(&self) -> f64 {
        let (a, b, c, d) = match *self {
            RegressionTarget::PointBox { l, t, r, b } => (l, t, r, b),
            RegressionTarget::Cascade { dx0, dy0, dx1, dy1 } => (dx0, dy0, dx1, dy1),
        };
        (a * a + b * b + c * c + d * d).sqrt()
    }
}

/// Row-major grid of boxes, one per feature-lattice point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGrid {
    pub rows: usize,
    pub cols: usize,
    pub boxes: Vec<BBox>,
}

impl BoxGrid {
    pub fn new(rows: usize, cols: usize, boxes: Vec<BBox>) -> Result<Self> {
        if rows == 0 || cols == 0 || boxes.len() != rows * cols {
            return Err(Error::invalid(format!(
                "box grid {}x{} with {} boxes",
                rows,
                cols,
                boxes.len()
            )));
        }
        Ok(BoxGrid { rows, cols, boxes })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &BBox {
        &self.boxes[i * self.cols + j]
    }
}

/// A decoded box plus a flag marking degenerate raw output that had to be
/// clamped to a zero-extent axis at the midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoded {
    pub bbox: BBox,
    pub clamped: bool,
}

/// Proposal-head target: ((x-x0)/s, (y-y0)/s, (x1-x)/s, (y1-y)/s).
pub fn encode_point_box(point: Point, gt: &BBox, stride: u32) -> RegressionTarget {
    let s = stride as f64;
    RegressionTarget::PointBox {
        l: (point.x - gt.x0) / s,
        t: (point.y - gt.y0) / s,
        r: (gt.x1 - point.x) / s,
        b: (gt.y1 - point.y) / s,
    }
}

/// Inverse of [`encode_point_box`]. A degenerate axis (negative extent from
/// free-form inputs) collapses to its midpoint.
pub fn decode_point_box(point: Point, target: &RegressionTarget, stride: u32) -> Result<BBox> {
    let (l, t, r, b) = match *target {
        RegressionTarget::PointBox { l, t, r, b } => (l, t, r, b),
        _ => return Err(Error::invalid("expected a point-box target")),
    };
    let s = stride as f64;
    let (x0, x1) = order_axis(point.x - l * s, point.x + r * s);
    let (y0, y1) = order_axis(point.y - t * s, point.y + b * s);
    Ok(BBox::new(x0, y0, x1, y1))
}

fn order_axis(lo: f64, hi: f64) -> (f64, f64) {
    if lo <= hi {
        (lo, hi)
    } else {
        let mid = (lo + hi) / 2.0;
        (mid, mid)
    }
}

/// Refinement-head target against a coarse box:
/// ((x0-cx0)/s, (y0-cy0)/s, (x1-cx1)/s, (y1-cy1)/s).
pub fn cascade_encode(gt: &BBox, coarse: &BBox, stride: u32) -> RegressionTarget {
    let s = stride as f64;
    RegressionTarget::Cascade {
        dx0: (gt.x0 - coarse.x0) / s,
        dy0: (gt.y0 - coarse.y0) / s,
        dx1: (gt.x1 - coarse.x1) / s,
        dy1: (gt.y1 - coarse.y1) / s,
    }
}

/// Inverse of [`cascade_encode`]; degenerate output axes are clamped to the
/// midpoint and flagged instead of erroring.
pub fn cascade_decode(coarse: &BBox, delta: &RegressionTarget, stride: u32) -> Result<Decoded> {
    let (dx0, dy0, dx1, dy1) = match *delta {
        RegressionTarget::Cascade { dx0, dy0, dx1, dy1 } => (dx0, dy0, dx1, dy1),
        _ => return Err(Error::invalid("expected a cascade target")),
    };
    let s = stride as f64;
    let rx0 = coarse.x0 + dx0 * s;
    let rx1 = coarse.x1 + dx1 * s;
    let ry0 = coarse.y0 + dy0 * s;
    let ry1 = coarse.y1 + dy1 * s;
    let clamped = rx0 > rx1 || ry0 > ry1;
    let (x0, x1) = order_axis(rx0, rx1);
    let (y0, y1) = order_axis(ry0, ry1);
    Ok(Decoded {
        bbox: BBox::new(x0, y0, x1, y1),
        clamped,
    })
}

/// Nearest-neighbor upsampling of a stride-2s box grid to a stride-s grid:
/// fine point (i, j) inherits the box of coarse cell (i/2, j/2). Grid dims
/// must be ceil-matched (coarse = ceil(fine/2) per axis).
pub fn upsample_boxes(coarse: &BoxGrid, fine_rows: usize, fine_cols: usize) -> Result<BoxGrid> {
    if coarse.rows != fine_rows.div_ceil(2) || coarse.cols != fine_cols.div_ceil(2) {
        return Err(Error::UpsampleMismatch {
            coarse_rows: coarse.rows,
            coarse_cols: coarse.cols,
            fine_rows,
            fine_cols,
        });
    }
    let mut boxes = Vec::with_capacity(fine_rows * fine_cols);
    for i in 0..fine_rows {
        for j in 0..fine_cols {
            boxes.push(*coarse.get(i / 2, j / 2));
        }
    }
    BoxGrid::new(fine_rows, fine_cols, boxes)
}

/// Final detection score: product of both heads' classification scores and
/// the predicted NoCo quality. Monotone in each argument, stays in [0, 1].
pub fn fuse_scores(cls_h: f64, cls_l: f64, noco_pred: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&cls_h));
    debug_assert!((0.0..=1.0).contains(&cls_l));
    debug_assert!((0.0..=1.0).contains(&noco_pred));
    cls_h * cls_l * noco_pred
}

/// Greedy non-maximum suppression: visit detections by (score desc, input
/// index asc), keep one unless it overlaps an already-kept box with
/// IoU > `iou_thresh`. Output is sorted by descending score.
pub fn nms(dets: &[Detection], iou_thresh: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .score
            .partial_cmp(&dets[a].score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut kept: Vec<Detection> = Vec::new();
    for idx in order {
        let cand = &dets[idx];
        if kept.iter().all(|k| iou(&k.bbox, &cand.bbox) <= iou_thresh) {
            kept.push(cand.clone());
        }
    }
    kept
}
