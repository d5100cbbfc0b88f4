//! Text-detection core built around differentiable binarization.
//!
//! The crate covers the full non-neural pipeline of a segmentation-based
//! text detector:
//!
//! * [`geometry`]: polygons, polygon offsetting by the area/perimeter
//!   formulas, distances, and raster IoU;
//! * [`maps`]: dense float/binary rasters, polygon scan conversion, and
//!   the FMAP/PNG file formats;
//! * [`labelgen`]: shrunk probability labels, boundary-distance
//!   threshold labels, and training masks from polygon annotations;
//! * [`db`]: the soft binarization function, its analytic gradients, and
//!   the three-term training loss with hard-negative mining;
//! * [`boxform`]: inference post-processing from a probability map to
//!   scored detection polygons;
//! * [`eval`]: IoU-matched precision/recall/F-measure;
//! * [`synth`]: deterministic synthetic scenes for end-to-end testing.
//!
//! Raster convention everywhere: pixel `(row, col)` is the unit square
//! whose center sits at `(col + 0.5, row + 0.5)`; a pixel belongs to a
//! polygon when its center does.

pub mod boxform;
pub mod db;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod labelgen;
pub mod maps;
pub mod synth;

pub use error::{Error, Result};
