//! Classical model-driven detectors: local contrast (LCM), multiscale patch
//! contrast (MPCM), and the low-rank + sparse patch decomposition (IPI), plus
//! the shared score-map thresholding that turns any of them into detections.

mod contrast;
mod ipi;

pub use contrast::{lcm, mpcm, MPCM_SCALES};
pub use ipi::{ipi, IpiConfig, IpiOutcome};

use crate::geom::{BBox, Detection};

/// Per-pixel target salience raster, same dimensions as the input image.
/// Samples live at integer coordinates like [`crate::noco::NoCoMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl ScoreMap {
    pub fn zeros(height: usize, width: usize) -> Self {
        ScoreMap {
            height,
            width,
            values: vec![0.0; height * width],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.width + c]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn mean_std(&self) -> (f64, f64) {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let var = self
            .values
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / n;
        (mean, var.sqrt())
    }
}

/// Threshold a score map at mean + k * stddev and turn each 8-connected
/// super-threshold component into one detection. The component box spans the
/// member pixels plus a half-pixel margin, so a single pixel becomes a 1x1
/// box centered on its sample coordinate; the score is the component maximum
/// normalized by the global maximum. Output is sorted by descending score
/// (raster order on ties).
pub fn scoremap_to_detections(map: &ScoreMap, k: f64, image_id: &str) -> Vec<Detection> {
    let global_max = map.max_value();
    if !(global_max > 0.0) {
        return Vec::new();
    }
    let (mean, std) = map.mean_std();
    let threshold = mean + k * std;

    let mut visited = vec![false; map.values.len()];
    let mut dets = Vec::new();
    let mut stack = Vec::new();
    for start in 0..map.values.len() {
        if visited[start] || map.values[start] <= threshold {
            continue;
        }
        // Flood-fill one component.
        let (mut min_r, mut min_c) = (usize::MAX, usize::MAX);
        let (mut max_r, mut max_c) = (0usize, 0usize);
        let mut peak = f64::NEG_INFINITY;
        visited[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (r, c) = (i / map.width, i % map.width);
            min_r = min_r.min(r);
            min_c = min_c.min(c);
            max_r = max_r.max(r);
            max_c = max_c.max(c);
            peak = peak.max(map.values[i]);
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr < 0 || nc < 0 || nr >= map.height as i64 || nc >= map.width as i64 {
                        continue;
                    }
                    let j = nr as usize * map.width + nc as usize;
                    if !visited[j] && map.values[j] > threshold {
                        visited[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        dets.push(Detection::new(
            BBox::new(
                min_c as f64 - 0.5,
                min_r as f64 - 0.5,
                max_c as f64 + 0.5,
                max_r as f64 + 0.5,
            ),
            peak / global_max,
            image_id,
        ));
    }
    dets.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    dets
}
