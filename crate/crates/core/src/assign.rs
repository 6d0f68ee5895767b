//! Label assignment schemes and coverage statistics.
//!
//! Three schemes are provided: plain center-inside-box assignment, the
//! all-scale pseudo-box scheme (tiny boxes are inflated to p x p for spatial
//! assignment only, p = pseudo_factor * stride, and every level labels every
//! target), and a patch-grid scheme that marks a patch positive when a target
//! centroid falls inside it.
//!
//! With p = s, a pseudo-box always covers exactly one lattice cell, and a
//! kept box (hw > p^2) that is square has both sides longer than s, so a
//! single square target fully inside the image is guaranteed at least one
//! positive point per level. A thin oblong can evade this at a fine level
//! (hw > p^2 keeps it, yet its short side slips between lattice rows); it is
//! still covered at any coarser level whose p^2 reaches its area. Two targets
//! competing for the same cell can also starve one of them; conflicts go to
//! the smaller spatial box (ties to the lower index).

use serde::{Deserialize, Serialize};

use crate::codec::{encode_point_box, RegressionTarget};
use crate::geom::{lattice_dims, BBox, GtTarget, Point};

/// One pyramid level: its stride and the pseudo-box scale factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub stride: u32,
    /// p = pseudo_factor * stride; must be >= 1 so p >= s.
    pub pseudo_factor: f64,
}

impl LevelSpec {
    pub fn new(stride: u32, pseudo_factor: f64) -> Self {
        debug_assert!(stride >= 1 && pseudo_factor >= 1.0);
        LevelSpec {
            stride,
            pseudo_factor,
        }
    }

    pub fn pseudo_size(&self) -> f64 {
        self.pseudo_factor * self.stride as f64
    }
}

/// Per-level assignment: for every lattice point (row-major), the positive
/// target index (or `None` for background) and the regression target against
/// the original ground-truth box.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    pub stride: u32,
    pub rows: usize,
    pub cols: usize,
    pub labels: Vec<Option<u32>>,
    pub reg_targets: Vec<Option<RegressionTarget>>,
    pub n_pos: usize,
}

impl AssignmentResult {
    /// Number of positive points assigned to the given target.
    pub fn positives_for(&self, target_idx: u32) -> usize {
        self.labels.iter().filter(|l| **l == Some(target_idx)).count()
    }
}

/// Patch-grid assignment: a patch is positive when some target centroid lies
/// inside it (half-open patches, lowest target index wins).
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleGridResult {
    pub patch: u32,
    pub rows: usize,
    pub cols: usize,
    pub labels: Vec<Option<u32>>,
    pub n_pos: usize,
}

/// Aggregate mislabeling statistics over one or more assignment results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageStats {
    pub targets_total: usize,
    pub targets_with_zero_positives: usize,
    pub positives_total: usize,
    pub negatives_total: usize,
}

/// The spatial assignment box for one target at one level: the ground truth
/// itself when h*w > p^2, otherwise a p x p box with the same center.
pub fn pseudo_box(gt: &BBox, level: &LevelSpec) -> BBox {
    let p = level.pseudo_size();
    if gt.height() * gt.width() > p * p {
        *gt
    } else {
        BBox::from_center(gt.center().x, gt.center().y, p, p)
    }
}

/// Lattice points inside a box, as half-open grid-index ranges.
/// Point (j + 0.5) * s lies in [x0, x1) iff ceil(x0/s - 0.5) <= j < ceil(x1/s - 0.5).
fn grid_range(lo: f64, hi: f64, stride: u32, cells: usize) -> std::ops::Range<usize> {
    let s = stride as f64;
    let a = (lo / s - 0.5).ceil().max(0.0) as usize;
    let b = ((hi / s - 0.5).ceil().max(0.0) as usize).min(cells);
    a.min(cells)..b
}

fn assign_boxes(
    spatial: &[BBox],
    original: &[BBox],
    level: &LevelSpec,
    img_h: usize,
    img_w: usize,
) -> AssignmentResult {
    let (rows, cols) = lattice_dims(level.stride, img_h, img_w);
    let mut labels: Vec<Option<u32>> = vec![None; rows * cols];
    let mut areas: Vec<f64> = vec![f64::INFINITY; rows * cols];
    let s = level.stride as f64;

    for (idx, sb) in spatial.iter().enumerate() {
        let area = sb.area();
        for i in grid_range(sb.y0, sb.y1, level.stride, rows) {
            for j in grid_range(sb.x0, sb.x1, level.stride, cols) {
                let k = i * cols + j;
                if area < areas[k] {
                    areas[k] = area;
                    labels[k] = Some(idx as u32);
                }
            }
        }
    }

    let mut reg_targets: Vec<Option<RegressionTarget>> = vec![None; rows * cols];
    let mut n_pos = 0usize;
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            if let Some(idx) = labels[k] {
                let point = Point::new((j as f64 + 0.5) * s, (i as f64 + 0.5) * s);
                reg_targets[k] = Some(encode_point_box(point, &original[idx as usize], level.stride));
                n_pos += 1;
            }
        }
    }

    AssignmentResult {
        stride: level.stride,
        rows,
        cols,
        labels,
        reg_targets,
        n_pos,
    }
}

/// Center-based baseline: a lattice point is positive for a target iff it
/// falls inside the raw ground-truth box.
pub fn center_assign(
    gts: &[GtTarget],
    level: &LevelSpec,
    img_h: usize,
    img_w: usize,
) -> AssignmentResult {
    let boxes: Vec<BBox> = gts.iter().map(|g| g.bbox).collect();
    assign_boxes(&boxes, &boxes, level, img_h, img_w)
}

/// All-scale pseudo-box assignment: every level assigns every target, with
/// spatial membership tested against the pseudo-box but regression targets
/// computed against the original box.
pub fn aspb_assign(
    gts: &[GtTarget],
    levels: &[LevelSpec],
    img_h: usize,
    img_w: usize,
) -> Vec<AssignmentResult> {
    let original: Vec<BBox> = gts.iter().map(|g| g.bbox).collect();
    levels
        .iter()
        .map(|level| {
            let spatial: Vec<BBox> = original.iter().map(|b| pseudo_box(b, level)).collect();
            assign_boxes(&spatial, &original, level, img_h, img_w)
        })
        .collect()
}

/// Patch-grid assignment on ceil(H/patch) x ceil(W/patch) half-open patches.
pub fn simplegrid_assign(
    gts: &[GtTarget],
    patch: u32,
    img_h: usize,
    img_w: usize,
) -> SimpleGridResult {
    let (rows, cols) = lattice_dims(patch, img_h, img_w);
    let p = patch as f64;
    let mut labels: Vec<Option<u32>> = vec![None; rows * cols];
    let mut n_pos = 0usize;
    for (idx, gt) in gts.iter().enumerate() {
        let c = gt.centroid_or_center();
        if c.x < 0.0 || c.y < 0.0 {
            continue;
        }
        let (i, j) = ((c.y / p) as usize, (c.x / p) as usize);
        if i < rows && j < cols {
            let k = i * cols + j;
            if labels[k].is_none() {
                labels[k] = Some(idx as u32);
                n_pos += 1;
            }
        }
    }
    SimpleGridResult {
        patch,
        rows,
        cols,
        labels,
        n_pos,
    }
}

/// Counts targets left without a single positive point across the given
/// (possibly multi-level) assignment results.
pub fn coverage_stats(gts: &[GtTarget], results: &[AssignmentResult]) -> CoverageStats {
    let mut covered = vec![false; gts.len()];
    let mut positives_total = 0usize;
    let mut negatives_total = 0usize;
    for res in results {
        for label in &res.labels {
            match label {
                Some(idx) => {
                    covered[*idx as usize] = true;
                    positives_total += 1;
                }
                None => negatives_total += 1,
            }
        }
    }
    CoverageStats {
        targets_total: gts.len(),
        targets_with_zero_positives: covered.iter().filter(|c| !**c).count(),
        positives_total,
        negatives_total,
    }
}
