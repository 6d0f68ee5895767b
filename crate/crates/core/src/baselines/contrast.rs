//! Local-contrast score maps: LCM and MPCM.
//!
//! Both filters slide a 3x3 grid of cells over the image with replicate
//! padding at the borders. LCM scores (max of center cell)^2 / (largest
//! neighbor-cell mean); MPCM scores the minimum over the four opposing
//! neighbor pairs of (m_T - m_i) * (m_T - m_{i+4}), maximized over cell
//! scales, which also responds to dark-on-bright targets.

use rayon::prelude::*;

use super::ScoreMap;
use crate::image::GrayImage;

/// Cell scales swept by [`mpcm`].
pub const MPCM_SCALES: [usize; 5] = [1, 3, 5, 7, 9];

/// Neighbor cell offsets in grid units, ordered so that index i and i+4 are
/// opposite directions.
const NEIGHBORS: [(i64, i64); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
];

#[inline]
fn clamped(img: &GrayImage, r: i64, c: i64) -> f64 {
    let r = r.clamp(0, img.height as i64 - 1) as usize;
    let c = c.clamp(0, img.width as i64 - 1) as usize;
    img.get(r, c)
}

/// Local contrast measure with a 3x3 grid of `cell` x `cell` cells centered
/// at each pixel: (max intensity of the center cell)^2 over the largest
/// neighbor-cell mean, the division guarded at 1e-12.
pub fn lcm(img: &GrayImage, cell: usize) -> ScoreMap {
    assert!(cell >= 1 && cell % 2 == 1, "cell size must be odd");
    let half = (cell / 2) as i64;
    let cs = cell as i64;
    let n = (cell * cell) as f64;

    let rows: Vec<Vec<f64>> = (0..img.height as i64)
        .into_par_iter()
        .map(|r| {
            let mut row = Vec::with_capacity(img.width);
            for c in 0..img.width as i64 {
                let mut center_max = f64::NEG_INFINITY;
                for i in -half..=half {
                    for j in -half..=half {
                        center_max = center_max.max(clamped(img, r + i, c + j));
                    }
                }
                let mut worst = f64::NEG_INFINITY;
                for (dr, dc) in NEIGHBORS {
                    let (cr, cc) = (r + dr * cs, c + dc * cs);
                    let mut sum = 0.0;
                    for i in -half..=half {
                        for j in -half..=half {
                            sum += clamped(img, cr + i, cc + j);
                        }
                    }
                    worst = worst.max(sum / n);
                }
                row.push(center_max * center_max / worst.max(1e-12));
            }
            row
        })
        .collect();

    ScoreMap {
        height: img.height,
        width: img.width,
        values: rows.into_iter().flatten().collect(),
    }
}

/// Multiscale patch-based contrast measure over [`MPCM_SCALES`].
///
/// Cell means are differenced pixel-by-pixel (the center cell against each
/// neighbor cell at the same within-cell offset) before dividing by the cell
/// area, so a constant intensity shift cancels term-by-term and the map is
/// exactly invariant under I -> I + b whenever the shifted intensities are
/// themselves exact. Negative responses are clamped to 0.
pub fn mpcm(img: &GrayImage, scales: &[usize]) -> ScoreMap {
    assert!(
        scales.iter().all(|s| *s >= 1 && *s % 2 == 1),
        "cell scales must be odd"
    );
    let rows: Vec<Vec<f64>> = (0..img.height as i64)
        .into_par_iter()
        .map(|r| {
            let mut row = Vec::with_capacity(img.width);
            for c in 0..img.width as i64 {
                let mut best = f64::NEG_INFINITY;
                for &cell in scales {
                    let half = (cell / 2) as i64;
                    let cs = cell as i64;
                    let n = (cell * cell) as f64;
                    let mut d = [0.0f64; 8];
                    for (k, (dr, dc)) in NEIGHBORS.iter().enumerate() {
                        let mut diff_sum = 0.0;
                        for i in -half..=half {
                            for j in -half..=half {
                                diff_sum += clamped(img, r + i, c + j)
                                    - clamped(img, r + dr * cs + i, c + dc * cs + j);
                            }
                        }
                        d[k] = diff_sum / n;
                    }
                    let contrast = (0..4)
                        .map(|k| d[k] * d[k + 4])
                        .fold(f64::INFINITY, f64::min);
                    best = best.max(contrast);
                }
                row.push(best.max(0.0));
            }
            row
        })
        .collect();

    ScoreMap {
        height: img.height,
        width: img.width,
        values: rows.into_iter().flatten().collect(),
    }
}
