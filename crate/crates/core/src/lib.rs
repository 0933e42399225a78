//! Allocation-only core of the absolute-position toolkit.
//!
//! Grid geometry, the stimulus rasterizer, synthetic and COCO dataset
//! construction, answer parsing, scoring, dual-encoder retrieval selection
//! and layer-wise linear probing. Nothing here touches the filesystem; the
//! `posgrid` crate adds IO, file formats and the command line.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod answer;
pub mod coco;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod hsd;
pub mod probe;
pub mod raster;
pub mod retrieval;
pub mod score;
pub mod seed;
pub mod synth;

pub use error::Error;
pub use geometry::{Cell, Color, ImageGeometry, PositionLabel, Region, Shape, Size};

/// Version string stamped into every manifest.
pub const GENERATOR_VERSION: &str = concat!("posgrid/", env!("CARGO_PKG_VERSION"));
