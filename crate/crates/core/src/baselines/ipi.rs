//! Infrared patch-image decomposition: sliding patches are vectorized into
//! the columns of a matrix D, which is split into a low-rank background B and
//! a sparse target part T by solving min ||B||_* + lambda ||T||_1 subject to
//! D = B + T with the inexact augmented Lagrange multiplier method. The
//! sparse part is folded back to image space by averaging overlapping
//! patches.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ScoreMap;
use crate::image::GrayImage;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpiConfig {
    /// Side length of the square sliding patch.
    pub patch: usize,
    /// Sliding stride; the last window is snapped to the image edge.
    pub stride: usize,
    /// lambda = l_scale / sqrt(min(rows, cols) of D).
    pub l_scale: f64,
    /// Stop when ||D - B - T||_F / ||D||_F falls to this value.
    pub eps: f64,
    pub max_iters: usize,
    /// Initial penalty; defaults to 1.25 / sigma_1(D) when unset.
    pub mu0: Option<f64>,
    /// Penalty growth factor per iteration.
    pub rho: f64,
}

impl Default for IpiConfig {
    fn default() -> Self {
        IpiConfig {
            patch: 50,
            stride: 20,
            l_scale: 2.5,
            eps: 1e-7,
            max_iters: 500,
            mu0: None,
            rho: 1.5,
        }
    }
}

impl IpiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride < 1 || self.patch < self.stride {
            return Err(Error::invalid("patch must be at least the stride, stride at least 1"));
        }
        if !(self.l_scale > 0.0 && self.eps > 0.0 && self.rho > 1.0) {
            return Err(Error::invalid("l_scale and eps must be positive, rho above 1"));
        }
        Ok(())
    }
}

/// Decomposition result: the folded sparse target map plus solver telemetry.
#[derive(Debug, Clone)]
pub struct IpiOutcome {
    pub map: ScoreMap,
    pub iterations: usize,
    /// ||D - B - T||_F / ||D||_F after each iteration.
    pub residuals: Vec<f64>,
    /// False when max_iters elapsed before reaching eps.
    pub converged: bool,
}

/// Window start offsets: multiples of the stride plus a final edge-snapped
/// window so the whole extent is covered.
fn window_starts(extent: usize, patch: usize, stride: usize) -> Vec<usize> {
    let last = extent - patch;
    let mut starts: Vec<usize> = (0..).map(|k| k * stride).take_while(|s| *s < last).collect();
    starts.push(last);
    starts
}

fn soft_threshold(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Singular-value thresholding: shrink every singular value by tau and
/// reconstruct. Returns the result and the nuclear norm after shrinkage.
pub(crate) fn svt(m: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let mut shrunk = svd.singular_values.clone();
    for s in shrunk.iter_mut() {
        *s = (*s - tau).max(0.0);
    }
    let mut scaled = u.clone();
    for (j, s) in shrunk.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*s);
    }
    &scaled * v_t
}

/// Solve the patch-image decomposition and fold the sparse part into a score
/// map (overlaps averaged, negatives clamped to 0).
pub fn ipi(img: &GrayImage, cfg: &IpiConfig) -> Result<IpiOutcome> {
    cfg.validate()?;
    if img.height < cfg.patch || img.width < cfg.patch {
        return Err(Error::invalid(format!(
            "image {}x{} smaller than patch {}",
            img.height, img.width, cfg.patch
        )));
    }
    let row_starts = window_starts(img.height, cfg.patch, cfg.stride);
    let col_starts = window_starts(img.width, cfg.patch, cfg.stride);
    let m = cfg.patch * cfg.patch;
    let n = row_starts.len() * col_starts.len();

    // Column k holds the row-major vectorized patch at (r0, c0).
    let mut d = DMatrix::<f64>::zeros(m, n);
    {
        let mut k = 0;
        for &r0 in &row_starts {
            for &c0 in &col_starts {
                for i in 0..cfg.patch {
                    for j in 0..cfg.patch {
                        d[(i * cfg.patch + j, k)] = img.get(r0 + i, c0 + j);
                    }
                }
                k += 1;
            }
        }
    }

    let lambda = cfg.l_scale / (m.min(n) as f64).sqrt();
    let d_fro = d.norm();
    if d_fro == 0.0 {
        return Ok(IpiOutcome {
            map: ScoreMap::zeros(img.height, img.width),
            iterations: 0,
            residuals: Vec::new(),
            converged: true,
        });
    }
    let sigma1 = {
        let svd = d.clone().svd(false, false);
        svd.singular_values[0]
    };
    let d_inf = d.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    // Dual-feasible scaling for the initial multiplier.
    let j_d = sigma1.max(d_inf / lambda);
    let mut y = &d / j_d;
    let mut mu = cfg.mu0.unwrap_or(1.25 / sigma1);

    let mut t = DMatrix::<f64>::zeros(m, n);
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        iterations += 1;
        let gb = &d - &t + &y / mu;
        let b = svt(&gb, 1.0 / mu);
        let gt = &d - &b + &y / mu;
        t = gt.map(|x| soft_threshold(x, lambda / mu));
        let z = &d - &b - &t;
        let res = z.norm() / d_fro;
        residuals.push(res);
        y += &z * mu;
        mu *= cfg.rho;
        if res <= cfg.eps {
            converged = true;
            break;
        }
    }

    // Fold T back to image space, averaging overlapping windows.
    let mut sum = vec![0.0f64; img.height * img.width];
    let mut count = vec![0u32; img.height * img.width];
    let mut k = 0;
    for &r0 in &row_starts {
        for &c0 in &col_starts {
            for i in 0..cfg.patch {
                for j in 0..cfg.patch {
                    let idx = (r0 + i) * img.width + (c0 + j);
                    sum[idx] += t[(i * cfg.patch + j, k)];
                    count[idx] += 1;
                }
            }
            k += 1;
        }
    }
    let values = sum
        .iter()
        .zip(&count)
        .map(|(s, c)| (s / *c as f64).max(0.0))
        .collect();

    Ok(IpiOutcome {
        map: ScoreMap {
            height: img.height,
            width: img.width,
            values,
        },
        iterations,
        residuals,
        converged,
    })
}
