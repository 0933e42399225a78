//! File formats, IO and the command line for the absolute-position toolkit.
//!
//! The algorithms live in `posgrid-core`; this crate reads and writes dataset
//! directories, COCO annotation files, prediction files, reports and HSD1
//! dumps, and wires everything into the `posgrid` executable.

pub mod cli;
pub mod coco_json;
pub mod dataset_io;
pub mod error;
pub mod fsutil;
pub mod hsd_io;
pub mod png_io;
pub mod predictions;
pub mod report;

pub use error::{PosgridError, Result};
