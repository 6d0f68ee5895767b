//! Synthetic scene generator: Gaussian blobs on procedural backgrounds.
//!
//! Each target is an isotropic Gaussian of amplitude `amplitude` and width
//! `sigma`; its ground-truth box is the 3-sigma extent and its annotated
//! centroid is the exact injection center. Placement rejects overlapping
//! boxes and resamples, up to a retry cap. Everything is drawn from a caller
//! seeded RNG in a fixed order, so scenes are bit-identical across runs.

use std::path::Path;

use anyhow::Result;
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use rand_distr::{Distribution, Normal};

use sirstbench_core::geom::{BBox, GtTarget, Point};
use sirstbench_core::image::{write_pgm, GrayImage};

use crate::dataset::{save_annotations, Annotations, DatasetIndex, ImageAnn, TargetAnn};
use crate::errors::invalid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Background {
    Flat,
    Gradient,
    Clouds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub height: usize,
    pub width: usize,
    pub n_targets: usize,
    pub sigma_range: (f64, f64),
    pub amplitude: f64,
    /// Standard deviation of additive Gaussian pixel noise (0 disables it).
    pub noise: f64,
    pub background: Background,
    /// Placement attempts per target before giving up.
    pub max_tries: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            height: 96,
            width: 96,
            n_targets: 3,
            sigma_range: (0.8, 1.6),
            amplitude: 0.6,
            noise: 0.01,
            background: Background::Flat,
            max_tries: 1000,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.sigma_range;
        if self.height < 16 || self.width < 16 {
            return Err(invalid("scene must be at least 16x16"));
        }
        if !(lo > 0.0 && hi >= lo) {
            return Err(invalid("sigma range must satisfy 0 < lo <= hi"));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(invalid("amplitude must be positive"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(invalid("noise must be non-negative"));
        }
        if 2.0 * (3.0 * hi + 2.0) >= self.width.min(self.height) as f64 {
            return Err(invalid("targets too large for the scene dimensions"));
        }
        Ok(())
    }
}

fn background(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> GrayImage {
    let (h, w) = (spec.height, spec.width);
    match spec.background {
        Background::Flat => GrayImage::from_fn(h, w, |_, _| 0.25),
        Background::Gradient => GrayImage::from_fn(h, w, |r, c| {
            let t = (r as f64 / (h - 1) as f64 + c as f64 / (w - 1) as f64) / 2.0;
            0.15 + 0.25 * t
        }),
        Background::Clouds => {
            let bumps: Vec<(f64, f64, f64, f64)> = (0..6)
                .map(|_| {
                    let cx = rng.gen_range(0.0..w as f64);
                    let cy = rng.gen_range(0.0..h as f64);
                    let sigma = rng.gen_range(8.0..24.0);
                    let amp = rng.gen_range(0.05..0.18);
                    (cx, cy, sigma, amp)
                })
                .collect();
            GrayImage::from_fn(h, w, |r, c| {
                let mut v = 0.2;
                for &(cx, cy, sigma, amp) in &bumps {
                    let d2 = (c as f64 - cx).powi(2) + (r as f64 - cy).powi(2);
                    v += amp * (-d2 / (2.0 * sigma * sigma)).exp();
                }
                v
            })
        }
    }
}

/// Generates one scene. Draw order is background, then targets, then noise,
/// so a fixed seed reproduces the scene exactly.
pub fn synth_scene(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<(GrayImage, Vec<GtTarget>)> {
    spec.validate()?;
    let mut img = background(spec, rng);
    let (h, w) = (spec.height as f64, spec.width as f64);

    let mut targets: Vec<GtTarget> = Vec::with_capacity(spec.n_targets);
    for k in 0..spec.n_targets {
        let mut placed = false;
        for _ in 0..spec.max_tries {
            let sigma = rng.gen_range(spec.sigma_range.0..=spec.sigma_range.1);
            let margin = 3.0 * sigma + 2.0;
            let cx = rng.gen_range(margin..w - margin);
            let cy = rng.gen_range(margin..h - margin);
            let bbox = BBox::new(cx - 3.0 * sigma, cy - 3.0 * sigma, cx + 3.0 * sigma, cy + 3.0 * sigma);
            if targets.iter().any(|t| t.bbox.intersect(&bbox).is_some()) {
                continue;
            }
            paint_blob(&mut img, cx, cy, sigma, spec.amplitude);
            targets.push(GtTarget {
                bbox,
                centroid: Some(Point::new(cx, cy)),
            });
            placed = true;
            break;
        }
        if !placed {
            return Err(invalid(format!(
                "could not place target {k} without overlap after {} tries",
                spec.max_tries
            )));
        }
    }

    if spec.noise > 0.0 {
        let normal = Normal::new(0.0, spec.noise).expect("validated noise");
        for v in &mut img.data {
            *v += normal.sample(rng);
        }
    }
    for v in &mut img.data {
        *v = v.clamp(0.0, 1.0);
    }
    Ok((img, targets))
}

fn paint_blob(img: &mut GrayImage, cx: f64, cy: f64, sigma: f64, amplitude: f64) {
    let reach = (4.0 * sigma).ceil();
    let r0 = ((cy - reach).floor().max(0.0)) as usize;
    let r1 = ((cy + reach).ceil() as usize).min(img.height - 1);
    let c0 = ((cx - reach).floor().max(0.0)) as usize;
    let c1 = ((cx + reach).ceil() as usize).min(img.width - 1);
    for r in r0..=r1 {
        for c in c0..=c1 {
            let d2 = (c as f64 - cx).powi(2) + (r as f64 - cy).powi(2);
            let v = img.get(r, c) + amplitude * (-d2 / (2.0 * sigma * sigma)).exp();
            img.set(r, c, v);
        }
    }
}

/// Generates one scene per spec, writes PGM images plus `annotations.json`
/// under `root`, and returns the corresponding index.
pub fn synth_dataset(root: &Path, specs: &[SynthSpec], seed: u64) -> Result<DatasetIndex> {
    std::fs::create_dir_all(root)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut anns = Annotations::default();
    for (i, spec) in specs.iter().enumerate() {
        let (img, targets) = synth_scene(spec, &mut rng)?;
        let id = format!("img_{i:03}");
        let file = format!("{id}.pgm");
        write_pgm(root.join(&file), &img)?;
        anns.images.push(ImageAnn {
            id,
            file,
            height: spec.height as u32,
            width: spec.width as u32,
            targets: targets
                .iter()
                .map(|t| TargetAnn {
                    bbox: [t.bbox.x0, t.bbox.y0, t.bbox.x1, t.bbox.y1],
                    centroid: t.centroid.map(|p| [p.x, p.y]),
                })
                .collect(),
        });
    }
    save_annotations(root, &anns)?;
    DatasetIndex::load(root)
}
