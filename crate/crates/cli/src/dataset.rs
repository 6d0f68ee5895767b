//! Dataset index: `annotations.json` plus gray images on disk.
//!
//! Schema:
//!
//! ```json
//! {"images": [{"id": "img_000", "file": "img_000.pgm",
//!              "height": 96, "width": 96,
//!              "targets": [{"bbox": [x0, y0, x1, y1],
//!                           "centroid": [x, y]}]}]}
//! ```
//!
//! `centroid` is optional and defaults to the box center downstream. Boxes
//! extending past the image are clipped with a warning; inverted or
//! fully-outside boxes are load errors naming the offending image id.
//! Images may be PGM (8/16-bit P5) or grayscale PNG (8/16-bit).

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use sirstbench_core::geom::{BBox, GtTarget, Point};
use sirstbench_core::image::{read_pgm, GrayImage};

use crate::errors::invalid;

pub const ANNOTATIONS_FILE: &str = "annotations.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetAnn {
    pub bbox: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centroid: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageAnn {
    pub id: String,
    pub file: String,
    pub height: u32,
    pub width: u32,
    pub targets: Vec<TargetAnn>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Annotations {
    pub images: Vec<ImageAnn>,
}

/// One validated dataset entry; `path` is resolved against the dataset root.
#[derive(Debug, Clone)]
pub struct DatasetEntry {
    pub image_id: String,
    pub path: PathBuf,
    pub height: usize,
    pub width: usize,
    pub targets: Vec<GtTarget>,
}

#[derive(Debug, Clone)]
pub struct DatasetIndex {
    pub root: PathBuf,
    pub entries: Vec<DatasetEntry>,
}

impl DatasetIndex {
    /// Loads and validates `root/annotations.json`.
    pub fn load(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let ann_path = root.join(ANNOTATIONS_FILE);
        let text = fs::read_to_string(&ann_path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", ann_path.display())))?;
        let anns: Annotations = serde_json::from_str(&text)
            .map_err(|e| invalid(format!("malformed {}: {e}", ann_path.display())))?;

        let mut seen = HashSet::new();
        let mut entries = Vec::with_capacity(anns.images.len());
        for img in &anns.images {
            if !seen.insert(img.id.clone()) {
                return Err(invalid(format!("duplicate image id {:?}", img.id)));
            }
            if img.height == 0 || img.width == 0 {
                return Err(invalid(format!("image {:?}: zero dimension", img.id)));
            }
            let path = root.join(&img.file);
            if !path.is_file() {
                return Err(invalid(format!(
                    "image {:?}: file {} not found",
                    img.id,
                    path.display()
                )));
            }
            let targets = validate_targets(img)?;
            entries.push(DatasetEntry {
                image_id: img.id.clone(),
                path,
                height: img.height as usize,
                width: img.width as usize,
                targets,
            });
        }
        Ok(DatasetIndex { root, entries })
    }

    /// Loads the pixel data for one entry, normalized to [0, 1].
    pub fn load_image(&self, entry: &DatasetEntry) -> Result<GrayImage> {
        let img = read_gray_image(&entry.path)?;
        if img.height != entry.height || img.width != entry.width {
            return Err(invalid(format!(
                "image {:?}: file is {}x{} but annotations say {}x{}",
                entry.image_id, img.height, img.width, entry.height, entry.width
            )));
        }
        Ok(img)
    }
}

fn validate_targets(img: &ImageAnn) -> Result<Vec<GtTarget>> {
    let (w, h) = (img.width as f64, img.height as f64);
    let mut targets = Vec::with_capacity(img.targets.len());
    for (k, t) in img.targets.iter().enumerate() {
        let [x0, y0, x1, y1] = t.bbox;
        if !t.bbox.iter().all(|v| v.is_finite()) || x1 <= x0 || y1 <= y0 {
            return Err(invalid(format!(
                "image {:?}: target {k} has invalid bbox {:?}",
                img.id, t.bbox
            )));
        }
        let clipped = BBox::new(x0.max(0.0), y0.max(0.0), x1.min(w), y1.min(h));
        if clipped.x1 <= clipped.x0 || clipped.y1 <= clipped.y0 {
            return Err(invalid(format!(
                "image {:?}: target {k} bbox {:?} lies outside the image",
                img.id, t.bbox
            )));
        }
        if clipped != BBox::new(x0, y0, x1, y1) {
            log::warn!(
                "image {:?}: target {k} bbox {:?} clipped to image bounds",
                img.id,
                t.bbox
            );
        }
        let centroid = match t.centroid {
            Some([x, y]) => {
                if !x.is_finite() || !y.is_finite() {
                    return Err(invalid(format!(
                        "image {:?}: target {k} has non-finite centroid",
                        img.id
                    )));
                }
                Some(Point::new(x, y))
            }
            None => None,
        };
        targets.push(GtTarget { bbox: clipped, centroid });
    }
    Ok(targets)
}

/// Writes `root/annotations.json` (pretty-printed, trailing newline).
pub fn save_annotations(root: impl AsRef<Path>, anns: &Annotations) -> Result<()> {
    let path = root.as_ref().join(ANNOTATIONS_FILE);
    let mut text = serde_json::to_string_pretty(anns)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Reads a grayscale image (PGM or PNG by extension), normalized to [0, 1].
pub fn read_gray_image(path: &Path) -> Result<GrayImage> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "pgm" => read_pgm(path).map_err(|e| invalid(format!("{}: {e}", path.display()))),
        "png" => read_png(path),
        other => Err(invalid(format!(
            "{}: unsupported image extension {other:?} (expected pgm or png)",
            path.display()
        ))),
    }
}

fn read_png(path: &Path) -> Result<GrayImage> {
    let dynimg = image::open(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let (w, h) = (dynimg.width() as usize, dynimg.height() as usize);
    let data: Vec<f64> = match dynimg {
        image::DynamicImage::ImageLuma8(buf) => {
            buf.into_raw().iter().map(|&v| v as f64 / 255.0).collect()
        }
        other => other
            .into_luma16()
            .into_raw()
            .iter()
            .map(|&v| v as f64 / 65535.0)
            .collect(),
    };
    GrayImage::new(h, w, data).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Writes a 16-bit grayscale PNG; values are clamped to [0, 1].
pub fn write_png(path: &Path, img: &GrayImage) -> Result<()> {
    let raw: Vec<u16> = img
        .data
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
        .collect();
    let buf = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(
        img.width as u32,
        img.height as u32,
        raw,
    )
    .expect("buffer sized from image dims");
    buf.save(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
