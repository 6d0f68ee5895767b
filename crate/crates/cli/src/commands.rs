//! Implementations behind the CLI subcommands.

use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use sirstbench_core::assign::{
    aspb_assign, center_assign, coverage_stats, CoverageStats, LevelSpec,
};
use sirstbench_core::baselines::{
    ipi, lcm, mpcm, scoremap_to_detections, IpiConfig, MPCM_SCALES,
};
use sirstbench_core::eval::{mnocoap, render_svg, render_table, EvalConfig, EvalItem};
use sirstbench_core::geom::{iou, BBox, Detection, GtTarget};
use sirstbench_core::image::GrayImage;
use sirstbench_core::losses::{total_loss, HeadInput, LossConfig, NocoInput, TotalLoss};
use sirstbench_core::noco::{image_noco_map, NoCoConfig};

use crate::args::{
    AssignStatsArgs, DetectArgs, EvalArgs, Format, IouDemoArgs, LossEvalArgs, Method, NocoGenArgs,
    Scheme, SynthArgs,
};
use crate::dataset::{DatasetEntry, DatasetIndex};
use crate::detections::{read_detections, write_detections};
use crate::errors::{as_invalid, invalid};
use crate::synth::{synth_dataset, SynthSpec};

/// Writes `text` to `out`, or stdout when no path is given.
fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn noco_config(gamma: f64, sigma_scale: f64) -> Result<NoCoConfig> {
    let cfg = NoCoConfig {
        gamma,
        sigma_scale,
        ..NoCoConfig::default()
    };
    cfg.validate().map_err(|e| invalid(e.to_string()))?;
    Ok(cfg)
}

/// Loads every image up front so later stages can fan out without touching
/// the filesystem.
fn load_images(index: &DatasetIndex) -> Result<Vec<GrayImage>> {
    index
        .entries
        .iter()
        .map(|e| index.load_image(e))
        .collect()
}

pub fn noco_gen(args: &NocoGenArgs) -> Result<()> {
    let cfg = noco_config(args.gamma, args.sigma_scale)?;
    let index = DatasetIndex::load(&args.dataset)?;
    let images = load_images(&index)?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let results: Vec<Result<()>> = index
        .entries
        .par_iter()
        .zip(&images)
        .map(|(entry, img)| {
            let map = image_noco_map(img, &entry.targets, &cfg)
                .map_err(|e| invalid(format!("image {:?}: {e}", entry.image_id)))?;
            let path = args.out.join(format!("{}.noco", entry.image_id));
            let file = fs::File::create(&path)
                .with_context(|| format!("creating {}", path.display()))?;
            map.write_raster(BufWriter::new(file))
                .with_context(|| format!("writing {}", path.display()))?;
            Ok(())
        })
        .collect();
    for r in results {
        r?;
    }
    println!(
        "wrote {} noco maps to {}",
        index.entries.len(),
        args.out.display()
    );
    Ok(())
}

fn detect_one(entry: &DatasetEntry, img: &GrayImage, method: Method, k: f64) -> Result<Vec<Detection>> {
    let map = match method {
        Method::Lcm => lcm(img, 3),
        Method::Mpcm => mpcm(img, &MPCM_SCALES),
        Method::Ipi => ipi(img, &IpiConfig::default())
            .map_err(|e| invalid(format!("image {:?}: {e}", entry.image_id)))?
            .map,
    };
    Ok(scoremap_to_detections(&map, k, &entry.image_id))
}

pub fn detect(args: &DetectArgs) -> Result<()> {
    let k = args.k_sigma.unwrap_or(match args.method {
        Method::Lcm => 3.0,
        Method::Mpcm => 13.0,
        Method::Ipi => 10.0,
    });
    if !k.is_finite() {
        return Err(invalid("--k-sigma must be finite"));
    }
    let index = DatasetIndex::load(&args.dataset)?;
    let images = load_images(&index)?;

    let per_image: Vec<Result<Vec<Detection>>> = index
        .entries
        .par_iter()
        .zip(&images)
        .map(|(entry, img)| detect_one(entry, img, args.method, k))
        .collect();
    let mut dets = Vec::new();
    for r in per_image {
        dets.extend(r?);
    }
    write_detections(&args.out, &dets)?;
    println!("wrote {} detections to {}", dets.len(), args.out.display());
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let mut cfg = EvalConfig {
        noco_cfg: noco_config(args.gamma, args.sigma_scale)?,
        ..EvalConfig::default()
    };
    if let Some(deltas) = &args.deltas {
        cfg.deltas = deltas.clone();
    }
    cfg.validate().map_err(|e| invalid(e.to_string()))?;

    let index = DatasetIndex::load(&args.dataset)?;
    let images = load_images(&index)?;
    let mut by_image = read_detections(&args.detections)?;
    let items: Vec<EvalItem> = index
        .entries
        .iter()
        .zip(images)
        .map(|(entry, image)| EvalItem {
            image_id: entry.image_id.clone(),
            image,
            gts: entry.targets.clone(),
            dets: by_image.remove(&entry.image_id).unwrap_or_default(),
        })
        .collect();
    if let Some(unknown) = by_image.keys().next() {
        return Err(invalid(format!(
            "detections reference unknown image id {unknown:?}"
        )));
    }

    let report = mnocoap(&items, &cfg).map_err(|e| as_invalid(e.into()))?;
    let text = match args.format {
        Format::Json => to_json(&report)?,
        Format::Table => render_table(&report),
        Format::Svg => render_svg(&report),
    };
    emit(&args.out, &text)
}

#[derive(Debug, Serialize)]
struct AssignReport {
    scheme: String,
    strides: Vec<u32>,
    pseudo_factor: f64,
    stats: CoverageStats,
}

pub fn assign_stats(args: &AssignStatsArgs) -> Result<()> {
    if args.stride.is_empty() || args.stride.iter().any(|&s| s == 0) {
        return Err(invalid("--stride needs at least one positive value"));
    }
    if !(args.pseudo_factor >= 1.0) {
        return Err(invalid("--pseudo-factor must be >= 1"));
    }
    let index = DatasetIndex::load(&args.dataset)?;

    let mut total = CoverageStats {
        targets_total: 0,
        targets_with_zero_positives: 0,
        positives_total: 0,
        negatives_total: 0,
    };
    let levels: Vec<LevelSpec> = args
        .stride
        .iter()
        .map(|&s| LevelSpec::new(s, args.pseudo_factor))
        .collect();
    for entry in &index.entries {
        let results = match args.scheme {
            Scheme::Aspb => aspb_assign(&entry.targets, &levels, entry.height, entry.width),
            Scheme::Center => levels
                .iter()
                .map(|lv| center_assign(&entry.targets, lv, entry.height, entry.width))
                .collect(),
        };
        let s = coverage_stats(&entry.targets, &results);
        total.targets_total += s.targets_total;
        total.targets_with_zero_positives += s.targets_with_zero_positives;
        total.positives_total += s.positives_total;
        total.negatives_total += s.negatives_total;
    }

    let report = AssignReport {
        scheme: format!("{:?}", args.scheme).to_lowercase(),
        strides: args.stride.clone(),
        pseudo_factor: args.pseudo_factor,
        stats: total,
    };
    let text = match args.format {
        Format::Json => to_json(&report)?,
        Format::Table => format!(
            "scheme {}  strides {}  pseudo-factor {}\n\
             targets {}  zero-positive {}  positives {}  negatives {}\n",
            report.scheme,
            report
                .strides
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(","),
            report.pseudo_factor,
            total.targets_total,
            total.targets_with_zero_positives,
            total.positives_total,
            total.negatives_total
        ),
        Format::Svg => return Err(invalid("--format svg is not supported for assign-stats")),
    };
    emit(&args.out, &text)
}

#[derive(Debug, serde::Deserialize)]
struct HeadFixture {
    stride: u32,
    #[serde(default = "one")]
    pseudo_factor: f64,
    cls_preds: Vec<f64>,
    box_preds: Vec<[f64; 4]>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, serde::Deserialize)]
struct LossFixture {
    height: usize,
    width: usize,
    gt_boxes: Vec<[f64; 4]>,
    head_high: HeadFixture,
    head_low: HeadFixture,
    #[serde(default)]
    noco_preds: Vec<f64>,
    #[serde(default)]
    noco_targets: Vec<f64>,
    #[serde(default)]
    config: LossConfig,
}

fn fixture_boxes(raw: &[[f64; 4]], what: &str) -> Result<Vec<BBox>> {
    raw.iter()
        .map(|&[x0, y0, x1, y1]| {
            if !(x0.is_finite() && y0.is_finite() && x1 > x0 && y1 > y0) {
                return Err(invalid(format!("{what}: invalid box [{x0},{y0},{x1},{y1}]")));
            }
            Ok(BBox::new(x0, y0, x1, y1))
        })
        .collect()
}

pub fn loss_eval(args: &LossEvalArgs) -> Result<()> {
    let text = fs::read_to_string(&args.fixture)
        .map_err(|e| invalid(format!("cannot read {}: {e}", args.fixture.display())))?;
    let fx: LossFixture = serde_json::from_str(&text)
        .map_err(|e| invalid(format!("malformed {}: {e}", args.fixture.display())))?;

    let gt_boxes = fixture_boxes(&fx.gt_boxes, "gt_boxes")?;
    let gts: Vec<GtTarget> = gt_boxes.iter().map(|&b| GtTarget::new(b)).collect();
    let levels = [
        LevelSpec::new(fx.head_high.stride, fx.head_high.pseudo_factor),
        LevelSpec::new(fx.head_low.stride, fx.head_low.pseudo_factor),
    ];
    let assigns = aspb_assign(&gts, &levels, fx.height, fx.width);
    let box_h = fixture_boxes(&fx.head_high.box_preds, "head_high.box_preds")?;
    let box_l = fixture_boxes(&fx.head_low.box_preds, "head_low.box_preds")?;

    let result: TotalLoss = total_loss(
        &HeadInput {
            cls_preds: &fx.head_high.cls_preds,
            box_preds: &box_h,
            assign: &assigns[0],
        },
        &HeadInput {
            cls_preds: &fx.head_low.cls_preds,
            box_preds: &box_l,
            assign: &assigns[1],
        },
        &NocoInput {
            preds: &fx.noco_preds,
            targets: &fx.noco_targets,
        },
        &gt_boxes,
        &fx.config,
    )
    .map_err(|e| as_invalid(e.into()))?;

    let text = match args.format {
        Format::Json => to_json(&result)?,
        Format::Table => {
            let b = result.breakdown;
            let mut s = format!(
                "total {:.6}\ncls_h {:.6}  reg_h {:.6}  cls_l {:.6}  reg_l {:.6}  noco {:.6}\n\
                 n_pos_h {}  n_pos_l {}\n",
                result.total, b.cls_h, b.reg_h, b.cls_l, b.reg_l, b.noco,
                result.n_pos_h, result.n_pos_l
            );
            if result.warn_no_positives {
                s.push_str("warning: a head had no positive points\n");
            }
            s
        }
        Format::Svg => return Err(invalid("--format svg is not supported for loss-eval")),
    };
    emit(&args.out, &text)
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        height: args.height,
        width: args.width,
        n_targets: args.targets,
        sigma_range: (args.sigma_min, args.sigma_max),
        amplitude: args.amplitude,
        noise: args.noise,
        background: args.background,
        ..SynthSpec::default()
    };
    spec.validate()?;
    let specs = vec![spec; args.images];
    let index = synth_dataset(&args.out, &specs, args.seed)?;
    println!(
        "wrote {} images to {}",
        index.entries.len(),
        args.out.display()
    );
    Ok(())
}

pub fn iou_demo(args: &IouDemoArgs) -> Result<()> {
    // A 3x3-pixel box under diagonal shifts: 1 px leaves 4 of 14 units of
    // area shared, 3 px leaves none.
    let base = BBox::new(0.0, 0.0, 3.0, 3.0);
    let one = iou(&base, &BBox::new(1.0, 1.0, 4.0, 4.0));
    let three = iou(&base, &BBox::new(3.0, 3.0, 6.0, 6.0));
    let text = match args.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Demo {
                one_px_shift: f64,
                three_px_shift: f64,
            }
            to_json(&Demo {
                one_px_shift: one,
                three_px_shift: three,
            })?
        }
        Format::Table => format!(
            "3x3 box, 1-px diagonal shift: IoU = {one:.6}\n\
             3x3 box, 3-px diagonal shift: IoU = {three:.6}\n"
        ),
        Format::Svg => return Err(invalid("--format svg is not supported for iou-demo")),
    };
    emit(&args.out, &text)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}
