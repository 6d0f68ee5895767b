//! Core algorithms for single-frame infrared small target detection benchmarking.
//!
//! The crate is organized around a small set of building blocks:
//!
//! - [`geom`] – box geometry, IoU, feature lattices, annotation and detection records.
//! - [`image`] – grayscale rasters with PGM I/O.
//! - [`noco`] – normalized-contrast map generation and lookup.
//! - [`eval`] – NoCo-based detection matching, PR curves, AP and mNoCoAP.
//! - [`assign`] – label assignment schemes (center-based, all-scale pseudo-box, grid).
//! - [`codec`] – box regression encodings, coarse-box upsampling, score fusion, NMS.
//! - [`losses`] – forward values of the detection loss terms.
//! - [`baselines`] – classical detectors (LCM, MPCM, IPI) producing score maps.
//!
//! Everything is a pure function over immutable values; there is no shared
//! mutable state and all entry points are safe to call concurrently.

pub mod assign;
pub mod baselines;
pub mod codec;
mod error;
pub mod eval;
pub mod geom;
pub mod image;
pub mod losses;
pub mod noco;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
