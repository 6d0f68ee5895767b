//! Forward values of the training objective: focal loss for classification,
//! IoU loss for box regression, quality focal loss for the NoCo branch, and
//! the per-head aggregate normalized by the positive count.
//!
//! Only forward evaluation is provided; there are no gradients.

use serde::{Deserialize, Serialize};

use crate::assign::AssignmentResult;
use crate::geom::{iou, BBox};
use crate::{Error, Result};

/// Probability clamp applied inside logarithms.
const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub focal_alpha: f64,
    pub focal_gamma: f64,
    pub qfl_beta: f64,
    /// Weight of the NoCo quality term. The source text fixes 1.0 while its
    /// ablation table picks 1e3; both readings are legal, 1.0 is the default.
    pub lambda: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            focal_alpha: 0.25,
            focal_gamma: 2.0,
            qfl_beta: 2.0,
            lambda: 1.0,
        }
    }
}

/// Binary focal loss. The modulating factor uses the raw prediction so the
/// loss is exactly 0 at the optimum; only the logarithm argument is clamped.
pub fn focal_loss(pred: f64, label: bool, cfg: &LossConfig) -> f64 {
    let p = pred.clamp(EPS, 1.0 - EPS);
    if label {
        cfg.focal_alpha * (1.0 - pred).powf(cfg.focal_gamma) * -p.ln()
    } else {
        (1.0 - cfg.focal_alpha) * pred.powf(cfg.focal_gamma) * -(1.0 - p).ln()
    }
}

/// 1 - IoU.
pub fn iou_loss(pred: &BBox, gt: &BBox) -> f64 {
    1.0 - iou(pred, gt)
}

/// Quality focal loss against a soft quality target y in [0, 1]:
/// |y - p|^beta * BCE(p, y). Exactly 0 at p = y for beta > 0.
pub fn quality_focal_loss(pred: f64, y: f64, cfg: &LossConfig) -> f64 {
    let p = pred.clamp(EPS, 1.0 - EPS);
    let bce = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
    (y - pred).abs().powf(cfg.qfl_beta) * bce
}

/// Predictions of one head, aligned with its assignment grid.
#[derive(Debug, Clone)]
pub struct HeadInput<'a> {
    pub cls_preds: &'a [f64],
    pub box_preds: &'a [BBox],
    pub assign: &'a AssignmentResult,
}

/// NoCo-branch predictions and quality targets over the positive points.
#[derive(Debug, Clone, Default)]
pub struct NocoInput<'a> {
    pub preds: &'a [f64],
    pub targets: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub cls_h: f64,
    pub reg_h: f64,
    pub cls_l: f64,
    pub reg_l: f64,
    /// Lambda-weighted NoCo term.
    pub noco: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalLoss {
    pub total: f64,
    pub breakdown: LossBreakdown,
    pub n_pos_h: usize,
    pub n_pos_l: usize,
    /// Set when a head had no positive points and its normalizer fell back to 1.
    pub warn_no_positives: bool,
}

fn head_terms(head: &HeadInput, gt_boxes: &[BBox], cfg: &LossConfig) -> Result<(f64, f64, usize)> {
    let n = head.assign.rows * head.assign.cols;
    for (name, got) in [
        ("cls_preds", head.cls_preds.len()),
        ("box_preds", head.box_preds.len()),
        ("labels", head.assign.labels.len()),
    ] {
        if got != n {
            let _ = name;
            return Err(Error::GridMismatch { expected: n, got });
        }
    }
    let mut cls_sum = 0.0;
    let mut reg_sum = 0.0;
    for k in 0..n {
        let label = head.assign.labels[k];
        cls_sum += focal_loss(head.cls_preds[k], label.is_some(), cfg);
        if let Some(idx) = label {
            let gt = gt_boxes
                .get(idx as usize)
                .ok_or_else(|| Error::invalid(format!("target index {idx} out of range")))?;
            reg_sum += iou_loss(&head.box_preds[k], gt);
        }
    }
    let norm = head.assign.n_pos.max(1) as f64;
    Ok((cls_sum / norm, reg_sum / norm, head.assign.n_pos))
}

/// Aggregate objective: per head (1/N_pos) * (sum of focal + indicator IoU
/// losses), plus lambda times the mean quality focal loss of the NoCo branch.
pub fn total_loss(
    head_h: &HeadInput,
    head_l: &HeadInput,
    noco: &NocoInput,
    gt_boxes: &[BBox],
    cfg: &LossConfig,
) -> Result<TotalLoss> {
    if noco.preds.len() != noco.targets.len() {
        return Err(Error::GridMismatch {
            expected: noco.targets.len(),
            got: noco.preds.len(),
        });
    }
    let (cls_h, reg_h, n_pos_h) = head_terms(head_h, gt_boxes, cfg)?;
    let (cls_l, reg_l, n_pos_l) = head_terms(head_l, gt_boxes, cfg)?;

    let noco_mean = if noco.preds.is_empty() {
        0.0
    } else {
        let sum: f64 = noco
            .preds
            .iter()
            .zip(noco.targets)
            .map(|(p, y)| quality_focal_loss(*p, *y, cfg))
            .sum();
        sum / noco.preds.len() as f64
    };

    let breakdown = LossBreakdown {
        cls_h,
        reg_h,
        cls_l,
        reg_l,
        noco: cfg.lambda * noco_mean,
    };
    Ok(TotalLoss {
        total: cls_h + reg_h + cls_l + reg_l + breakdown.noco,
        breakdown,
        n_pos_h,
        n_pos_l,
        warn_no_positives: n_pos_h == 0 || n_pos_l == 0,
    })
}
