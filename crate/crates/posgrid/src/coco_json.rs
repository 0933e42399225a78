//! Reader for the public COCO instances annotation schema.

use std::path::Path;

use posgrid_core::coco::{AnnotationIndex, RawCategory, RawImage, RawInstance};
use serde::Deserialize;

use crate::error::{json_error, Result};
use crate::fsutil;

#[derive(Deserialize)]
struct CocoFile {
    images: Vec<CocoImage>,
    #[serde(default)]
    annotations: Vec<CocoAnnotation>,
    categories: Vec<CocoCategory>,
}

#[derive(Deserialize)]
struct CocoImage {
    id: u64,
    file_name: String,
    width: Option<u32>,
    height: Option<u32>,
}

#[derive(Deserialize)]
struct CocoAnnotation {
    image_id: u64,
    category_id: u64,
    bbox: [f64; 4],
    #[serde(default)]
    iscrowd: u8,
}

#[derive(Deserialize)]
struct CocoCategory {
    id: u64,
    name: String,
}

pub fn parse_annotations(text: &str, path: &Path) -> Result<AnnotationIndex> {
    let file: CocoFile = serde_json::from_str(text).map_err(|e| json_error(path, text, e))?;
    Ok(AnnotationIndex::build(
        file.images
            .into_iter()
            .map(|i| RawImage {
                id: i.id,
                file_name: i.file_name,
                width: i.width,
                height: i.height,
            })
            .collect(),
        file.categories
            .into_iter()
            .map(|c| RawCategory {
                id: c.id,
                name: c.name,
            })
            .collect(),
        file.annotations
            .into_iter()
            .map(|a| RawInstance {
                image_id: a.image_id,
                category_id: a.category_id,
                bbox: a.bbox,
                iscrowd: a.iscrowd != 0,
            })
            .collect(),
    ))
}

/// Reads and indexes an annotation file.
pub fn ingest_annotations(path: &Path) -> Result<AnnotationIndex> {
    let text = fsutil::read_to_string(path)?;
    parse_annotations(&text, path)
}
