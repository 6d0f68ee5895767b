//! Detections interchange: JSON lines, one object per detection.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use sirstbench_core::geom::{BBox, Detection};

use crate::errors::invalid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetRecord {
    pub image_id: String,
    pub bbox: [f64; 4],
    pub score: f64,
}

impl DetRecord {
    pub fn from_detection(d: &Detection) -> Self {
        DetRecord {
            image_id: d.image_id.clone(),
            bbox: [d.bbox.x0, d.bbox.y0, d.bbox.x1, d.bbox.y1],
            score: d.score,
        }
    }

    pub fn to_detection(&self) -> Result<Detection> {
        let [x0, y0, x1, y1] = self.bbox;
        if !self.bbox.iter().all(|v| v.is_finite()) || x1 <= x0 || y1 <= y0 {
            return Err(invalid(format!(
                "detection for {:?} has invalid bbox {:?}",
                self.image_id, self.bbox
            )));
        }
        if !(self.score.is_finite() && (0.0..=1.0).contains(&self.score)) {
            return Err(invalid(format!(
                "detection for {:?} has score {} outside [0, 1]",
                self.image_id, self.score
            )));
        }
        Ok(Detection::new(
            BBox::new(x0, y0, x1, y1),
            self.score,
            self.image_id.clone(),
        ))
    }
}

pub fn write_detections(path: &Path, dets: &[Detection]) -> Result<()> {
    let mut text = String::new();
    for d in dets {
        text.push_str(&serde_json::to_string(&DetRecord::from_detection(d))?);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Reads a JSONL detections file grouped by image id, preserving line order
/// within each group.
pub fn read_detections(path: &Path) -> Result<HashMap<String, Vec<Detection>>> {
    let text = fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut by_image: HashMap<String, Vec<Detection>> = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: DetRecord = serde_json::from_str(line).map_err(|e| {
            invalid(format!("{}:{}: bad detection: {e}", path.display(), lineno + 1))
        })?;
        let det = rec.to_detection()?;
        by_image.entry(rec.image_id).or_default().push(det);
    }
    Ok(by_image)
}
