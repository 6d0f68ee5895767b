//! Grayscale raster type and dependency-free PGM (P5) serialization.
//!
//! Intensities are stored as `f64` in [0, 1] regardless of source bit depth;
//! integer samples are normalized by the format's maxval on load.

use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// Row-major 2-D grayscale intensity raster.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl GrayImage {
    /// Build from raw data, validating shape and finiteness.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("image dimensions must be at least 1x1"));
        }
        if data.len() != height * width {
            return Err(Error::invalid(format!(
                "data length {} does not match {}x{}",
                data.len(),
                height,
                width
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite intensity {v}")));
        }
        Ok(GrayImage {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        GrayImage {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    /// Fill from a function of (row, col).
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        GrayImage {
            height,
            width,
            data,
        }
    }

    #[inline]
    pub fn idx(&self, r: usize, c: usize) -> usize {
        debug_assert!(r < self.height && c < self.width);
        r * self.width + c
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[self.idx(r, c)]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        let i = self.idx(r, c);
        self.data[i] = v;
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population standard deviation.
    pub fn stddev(&self) -> f64 {
        let mu = self.mean();
        let var = self.data.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / self.data.len() as f64;
        var.sqrt()
    }
}

/// Write as binary PGM (P5). Values are clamped to [0, 1] and quantized to
/// 16-bit big-endian samples with maxval 65535.
pub fn write_pgm(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "P5\n{} {}\n65535\n", img.width, img.height)?;
    for v in &img.data {
        let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.write_all(&q.to_be_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Read a binary PGM (P5), normalizing samples to [0, 1] by the file's maxval.
/// Handles both 8-bit and 16-bit (big-endian) sample widths and `#` comments.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_pgm(&bytes)
}

fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;

    // Reads the next whitespace-delimited token, skipping '#' comment lines.
    let next_token = |pos: &mut usize| -> Result<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::invalid("truncated PGM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = next_token(&mut pos)?;
    if magic != "P5" {
        return Err(Error::invalid(format!("unsupported PGM magic {magic:?}")));
    }
    let width: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| Error::invalid("bad PGM width"))?;
    let height: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| Error::invalid("bad PGM height"))?;
    let maxval: u32 = next_token(&mut pos)?
        .parse()
        .map_err(|_| Error::invalid("bad PGM maxval"))?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::invalid(format!("PGM maxval {maxval} out of range")));
    }
    // Exactly one whitespace byte separates the header from the samples.
    pos += 1;

    let n = height * width;
    let wide = maxval > 255;
    let need = n * if wide { 2 } else { 1 };
    if bytes.len() < pos + need {
        return Err(Error::invalid("truncated PGM sample data"));
    }
    let scale = 1.0 / maxval as f64;
    let mut data = Vec::with_capacity(n);
    if wide {
        for i in 0..n {
            let hi = bytes[pos + 2 * i] as u16;
            let lo = bytes[pos + 2 * i + 1] as u16;
            data.push(((hi << 8) | lo) as f64 * scale);
        }
    } else {
        for i in 0..n {
            data.push(bytes[pos + i] as f64 * scale);
        }
    }
    GrayImage::new(height, width, data)
}
