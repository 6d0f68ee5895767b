//! mNoCoAP evaluation: detections are matched to targets through the NoCo
//! lookup table, pooled over the dataset into one ranked list per threshold
//! delta, and scored with all-point interpolated average precision.
//!
//! A detection is a true positive at threshold delta iff the NoCo value at
//! its box center is at least delta and the target owning that pixel is not
//! already matched by a higher-scoring detection (COCO-style greedy, one
//! match per target). Ties in score rank by (image id, detection index) so
//! runs are deterministic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{Detection, GtTarget};
use crate::image::GrayImage;
use crate::noco::{image_noco_map_with_owners, noco_lookup, NoCoConfig, NoCoMap, OwnerMap};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// NoCo thresholds, each in (0, 1), strictly increasing.
    pub deltas: Vec<f64>,
    pub noco_cfg: NoCoConfig,
    /// Per-image cap on detections, applied by descending score.
    pub max_dets_per_image: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            deltas: (1..=9).map(|k| k as f64 / 10.0).collect(),
            noco_cfg: NoCoConfig::default(),
            max_dets_per_image: 100,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        self.noco_cfg.validate()?;
        if self.deltas.is_empty() {
            return Err(Error::invalid("deltas must be non-empty"));
        }
        for pair in self.deltas.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::invalid("deltas must be strictly increasing"));
            }
        }
        if self.deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
            return Err(Error::invalid("each delta must lie in (0, 1)"));
        }
        if self.max_dets_per_image == 0 {
            return Err(Error::invalid("max_dets_per_image must be positive"));
        }
        Ok(())
    }
}

/// One image with its annotations and the detections under evaluation.
#[derive(Debug, Clone)]
pub struct EvalItem {
    pub image_id: String,
    pub image: GrayImage,
    pub gts: Vec<GtTarget>,
    pub dets: Vec<Detection>,
}

/// Matching outcome for one image at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// True-positive flag per detection, in input order.
    pub tp: Vec<bool>,
    /// Matched flag per ground-truth target.
    pub gt_matched: Vec<bool>,
}

/// Per-threshold evaluation results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEval {
    pub delta: f64,
    pub ap: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// (recall, precision) after each rank of the pooled list.
    pub pr_curve: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mnocoap: f64,
    pub per_delta: Vec<DeltaEval>,
    pub num_images: usize,
    pub num_gts: usize,
    pub num_dets: usize,
    pub config: EvalConfig,
}

/// Greedy matcher: detections visit by (score desc, index asc); one match per
/// owning target. Returns flags in input order.
pub fn match_detections(
    dets: &[Detection],
    gts: &[GtTarget],
    map: &NoCoMap,
    owners: &OwnerMap,
    delta: f64,
) -> MatchResult {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .score
            .partial_cmp(&dets[a].score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut tp = vec![false; dets.len()];
    let mut gt_matched = vec![false; gts.len()];
    for idx in order {
        let center = dets[idx].bbox.center();
        let value = noco_lookup(map, center);
        if value < delta {
            continue;
        }
        if let Some(owner) = owners.lookup(center) {
            let owner = owner as usize;
            if !gt_matched[owner] {
                gt_matched[owner] = true;
                tp[idx] = true;
            }
        }
    }
    MatchResult { tp, gt_matched }
}

/// All-point interpolated AP of a ranked TP/FP list: the area under the
/// precision envelope. Errors when there are no targets at all.
pub fn average_precision(flags: &[bool], num_gt: usize) -> Result<f64> {
    if num_gt == 0 {
        return Err(Error::NoTargets);
    }
    let mut tp_precisions = Vec::new();
    let mut tp_count = 0usize;
    for (rank, flag) in flags.iter().enumerate() {
        if *flag {
            tp_count += 1;
            tp_precisions.push(tp_count as f64 / (rank + 1) as f64);
        }
    }
    // Precision envelope: running max from the right.
    let mut ap = 0.0;
    let mut best = 0.0f64;
    for p in tp_precisions.iter().rev() {
        best = best.max(*p);
        ap += best;
    }
    Ok(ap / num_gt as f64)
}

struct ImageFlags {
    image_id: String,
    scores: Vec<f64>,
    per_delta_tp: Vec<Vec<bool>>,
    num_gt: usize,
}

fn eval_one_image(item: &EvalItem, cfg: &EvalConfig) -> Result<ImageFlags> {
    let (map, owners) = image_noco_map_with_owners(&item.image, &item.gts, &cfg.noco_cfg)?;

    // Cap detections per image by (score desc, index asc).
    let mut order: Vec<usize> = (0..item.dets.len()).collect();
    order.sort_by(|&a, &b| {
        item.dets[b]
            .score
            .partial_cmp(&item.dets[a].score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(cfg.max_dets_per_image);
    order.sort_unstable();
    let dets: Vec<Detection> = order.iter().map(|&i| item.dets[i].clone()).collect();

    let per_delta_tp = cfg
        .deltas
        .iter()
        .map(|&delta| match_detections(&dets, &item.gts, &map, &owners, delta).tp)
        .collect();
    Ok(ImageFlags {
        image_id: item.image_id.clone(),
        scores: dets.iter().map(|d| d.score).collect(),
        per_delta_tp,
        num_gt: item.gts.len(),
    })
}

/// Evaluate a dataset: per-image NoCo maps and matches run in parallel, then
/// a deterministic pooled ranking per delta yields AP and the mean over
/// deltas. Requires at least one ground-truth target overall.
pub fn mnocoap(items: &[EvalItem], cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let results: Vec<Result<ImageFlags>> = items
        .par_iter()
        .map(|item| eval_one_image(item, cfg))
        .collect();
    let mut flags = Vec::with_capacity(results.len());
    for r in results {
        flags.push(r?);
    }

    let num_gts: usize = flags.iter().map(|f| f.num_gt).sum();
    if num_gts == 0 {
        return Err(Error::NoTargets);
    }
    let num_dets: usize = flags.iter().map(|f| f.scores.len()).sum();

    let mut per_delta = Vec::with_capacity(cfg.deltas.len());
    for (di, &delta) in cfg.deltas.iter().enumerate() {
        // Pool across images, ranked by (score desc, image_id asc, det asc).
        let mut pooled: Vec<(&str, usize, f64, bool)> = Vec::with_capacity(num_dets);
        for f in &flags {
            for (k, &score) in f.scores.iter().enumerate() {
                pooled.push((f.image_id.as_str(), k, score, f.per_delta_tp[di][k]));
            }
        }
        pooled.sort_by(|a, b| {
            b.2.partial_cmp(&a.2)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(b.0))
                .then_with(|| a.1.cmp(&b.1))
        });
        let ranked: Vec<bool> = pooled.iter().map(|p| p.3).collect();
        let ap = average_precision(&ranked, num_gts)?;

        let mut pr_curve = Vec::with_capacity(ranked.len());
        let mut tp_count = 0usize;
        for (rank, flag) in ranked.iter().enumerate() {
            if *flag {
                tp_count += 1;
            }
            pr_curve.push((
                tp_count as f64 / num_gts as f64,
                tp_count as f64 / (rank + 1) as f64,
            ));
        }
        per_delta.push(DeltaEval {
            delta,
            ap,
            tp: tp_count,
            fp: ranked.len() - tp_count,
            fn_: num_gts - tp_count,
            pr_curve,
        });
    }

    let mnocoap = per_delta.iter().map(|d| d.ap).sum::<f64>() / per_delta.len() as f64;
    Ok(EvalReport {
        mnocoap,
        per_delta,
        num_images: items.len(),
        num_gts,
        num_dets,
        config: cfg.clone(),
    })
}

/// Aligned plain-text rendering of a report.
pub fn render_table(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "images {}  targets {}  detections {}\n",
        report.num_images, report.num_gts, report.num_dets
    ));
    out.push_str(&format!("{:<10} {:>8} {:>6} {:>6} {:>6}\n", "metric", "AP", "TP", "FP", "FN"));
    out.push_str(&format!("{:<10} {:>8.3}\n", "mNoCoAP", report.mnocoap));
    for d in &report.per_delta {
        out.push_str(&format!(
            "{:<10} {:>8.3} {:>6} {:>6} {:>6}\n",
            format!("AP@{:.1}", d.delta),
            d.ap,
            d.tp,
            d.fp,
            d.fn_
        ));
    }
    out
}

/// PR curves as a standalone SVG document, one polyline per delta.
pub fn render_svg(report: &EvalReport) -> String {
    let (w, h, margin) = (480.0, 480.0, 40.0);
    let plot = w - 2.0 * margin;
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"{margin}\" y=\"{margin}\" width=\"{plot}\" height=\"{plot}\" fill=\"none\" stroke=\"black\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\">recall</text>\n",
        w / 2.0 - 18.0,
        h - 10.0
    ));
    out.push_str(&format!(
        "<text x=\"12\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 12 {})\">precision</text>\n",
        h / 2.0,
        h / 2.0
    ));
    for (i, d) in report.per_delta.iter().enumerate() {
        let hue = (i * 360) / report.per_delta.len().max(1);
        let mut points = format!("{},{}", margin, margin + plot);
        for (r, p) in &d.pr_curve {
            let x = margin + r * plot;
            let y = margin + (1.0 - p) * plot;
            points.push_str(&format!(" {x:.2},{y:.2}"));
        }
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"hsl({hue},70%,45%)\" points=\"{points}\"><title>delta {:.1}</title></polyline>\n",
            d.delta
        ));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{BBox, Point};
    use proptest::prelude::*;

    fn blob_scene(positions: &[(f64, f64)]) -> (GrayImage, Vec<GtTarget>) {
        let img = GrayImage::from_fn(96, 96, |r, c| {
            positions
                .iter()
                .map(|&(x, y)| {
                    let (dx, dy) = (c as f64 - x, r as f64 - y);
                    0.9 * (-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5)).exp()
                })
                .fold(0.05, f64::max)
        });
        let gts = positions
            .iter()
            .map(|&(x, y)| {
                GtTarget::with_centroid(BBox::from_center(x, y, 9.0, 9.0), Point::new(x, y))
            })
            .collect();
        (img, gts)
    }

    fn det(x: f64, y: f64, score: f64, id: &str) -> Detection {
        Detection::new(BBox::from_center(x, y, 3.0, 3.0), score, id)
    }

    #[test]
    fn exact_centroid_detection_is_tp_at_high_delta() {
        let (img, gts) = blob_scene(&[(40.0, 40.0)]);
        let (map, owners) =
            image_noco_map_with_owners(&img, &gts, &NoCoConfig::default()).unwrap();
        let dets = vec![det(40.0, 40.0, 0.9, "a")];
        let m = match_detections(&dets, &gts, &map, &owners, 0.9);
        assert_eq!(m.tp, vec![true]);
        assert_eq!(m.gt_matched, vec![true]);
    }

    #[test]
    fn duplicate_detection_is_fp() {
        let (img, gts) = blob_scene(&[(40.0, 40.0)]);
        let (map, owners) =
            image_noco_map_with_owners(&img, &gts, &NoCoConfig::default()).unwrap();
        let dets = vec![det(40.0, 40.0, 0.9, "a"), det(40.0, 41.0, 0.8, "a")];
        let m = match_detections(&dets, &gts, &map, &owners, 0.5);
        assert_eq!(m.tp, vec![true, false]);
    }

    /// Closed-form oracle: a target's match is its highest-scoring (lowest
    /// index on ties) detection whose center it owns with value >= delta.
    fn oracle_match(
        dets: &[Detection],
        num_gt: usize,
        map: &NoCoMap,
        owners: &OwnerMap,
        delta: f64,
    ) -> Vec<bool> {
        let mut tp = vec![false; dets.len()];
        for g in 0..num_gt {
            let mut best: Option<usize> = None;
            for (i, d) in dets.iter().enumerate() {
                let c = d.bbox.center();
                if noco_lookup(map, c) >= delta && owners.lookup(c) == Some(g as u32) {
                    best = match best {
                        None => Some(i),
                        Some(j) if dets[i].score > dets[j].score => Some(i),
                        Some(j) => Some(j),
                    };
                }
            }
            if let Some(i) = best {
                tp[i] = true;
            }
        }
        tp
    }

    #[test]
    fn mixed_detections_match_brute_force() {
        let (img, gts) = blob_scene(&[(30.0, 30.0), (66.0, 60.0)]);
        let (map, owners) =
            image_noco_map_with_owners(&img, &gts, &NoCoConfig::default()).unwrap();
        let dets = vec![
            det(30.0, 30.0, 0.7, "a"),
            det(66.0, 60.0, 0.9, "a"),
            det(31.0, 30.0, 0.8, "a"),
            det(5.0, 5.0, 0.95, "a"),
        ];
        for delta in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let m = match_detections(&dets, &gts, &map, &owners, delta);
            assert_eq!(m.tp, oracle_match(&dets, gts.len(), &map, &owners, delta));
        }
    }

    #[test]
    fn ap_hand_examples() {
        assert_eq!(average_precision(&[true], 1).unwrap(), 1.0);
        assert_eq!(average_precision(&[false, true], 1).unwrap(), 0.5);
        let ap = average_precision(&[true, false, true], 2).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert!(matches!(
            average_precision(&[true], 0),
            Err(Error::NoTargets)
        ));
    }

    #[test]
    fn ap_appending_tail_detections() {
        let base = average_precision(&[true, false, true], 2).unwrap();
        let with_fp = average_precision(&[true, false, true, false], 2).unwrap();
        assert!(with_fp <= base);
        let with_tp = average_precision(&[true, false, false, true], 2).unwrap();
        let without = average_precision(&[true, false, false], 2).unwrap();
        assert!(with_tp >= without);
    }

    fn perfect_items() -> Vec<EvalItem> {
        (0..3)
            .map(|i| {
                let pos = [(30.0 + i as f64, 40.0), (70.0, 55.0 + i as f64)];
                let (img, gts) = blob_scene(&pos);
                let id = format!("img{i}");
                let dets = pos
                    .iter()
                    .enumerate()
                    .map(|(k, &(x, y))| det(x, y, 0.9 - 0.1 * k as f64, &id))
                    .collect();
                EvalItem {
                    image_id: id,
                    image: img,
                    gts,
                    dets,
                }
            })
            .collect()
    }

    #[test]
    fn perfect_detections_score_one() {
        let report = mnocoap(&perfect_items(), &EvalConfig::default()).unwrap();
        assert!((report.mnocoap - 1.0).abs() <= 1e-12);
        assert!(report.per_delta.iter().all(|d| d.ap == 1.0));
    }

    #[test]
    fn no_detections_score_zero() {
        let mut items = perfect_items();
        for item in &mut items {
            item.dets.clear();
        }
        let report = mnocoap(&items, &EvalConfig::default()).unwrap();
        assert_eq!(report.mnocoap, 0.0);
    }

    #[test]
    fn no_targets_is_an_error() {
        let mut items = perfect_items();
        for item in &mut items {
            item.gts.clear();
        }
        assert!(matches!(
            mnocoap(&items, &EvalConfig::default()),
            Err(Error::NoTargets)
        ));
    }

    #[test]
    fn score_scale_invariance() {
        let items = perfect_items();
        let mut scaled = items.clone();
        for item in &mut scaled {
            for d in &mut item.dets {
                d.score *= 0.5;
            }
        }
        let a = mnocoap(&items, &EvalConfig::default()).unwrap();
        let b = mnocoap(&scaled, &EvalConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn detection_cap_applies() {
        let mut items = perfect_items();
        // Flood one image with low-score duplicates; cap keeps the good ones.
        let spam: Vec<Detection> = (0..300)
            .map(|k| det(5.0, 5.0, 0.01 + (k as f64) * 1e-5, "img0"))
            .collect();
        items[0].dets.extend(spam);
        let report = mnocoap(&items, &EvalConfig::default()).unwrap();
        // img0 keeps its 2 real detections plus 98 spam; the others keep 2 each.
        for d in &report.per_delta {
            assert_eq!(d.tp + d.fp, 104);
        }
        // Spam ranks below every true positive, so AP is untouched.
        assert!((report.mnocoap - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn render_outputs_contain_rows() {
        let report = mnocoap(&perfect_items(), &EvalConfig::default()).unwrap();
        let table = render_table(&report);
        assert!(table.contains("mNoCoAP"));
        assert!(table.contains("AP@0.1"));
        let svg = render_svg(&report);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 9);
    }

    proptest! {
        // AP can only fall as the threshold rises, whatever the detections.
        #[test]
        fn ap_nonincreasing_in_delta(
            centers in prop::collection::vec((10.0f64..86.0, 10.0f64..86.0), 1..4),
            jitter in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, 0.1f64..1.0), 1..8),
        ) {
            let (img, gts) = blob_scene(&centers);
            let dets: Vec<Detection> = jitter
                .iter()
                .enumerate()
                .map(|(k, &(dx, dy, s))| {
                    let (x, y) = centers[k % centers.len()];
                    det(x + dx, y + dy, s, "a")
                })
                .collect();
            let items = vec![EvalItem {
                image_id: "a".into(),
                image: img,
                gts,
                dets,
            }];
            let report = mnocoap(&items, &EvalConfig::default()).unwrap();
            for pair in report.per_delta.windows(2) {
                prop_assert!(pair[1].ap <= pair[0].ap + 1e-12);
            }
        }
    }
}
