//! COCO-derived absolute-position datasets.
//!
//! The std crate parses the annotation JSON into [`RawImage`], [`RawCategory`]
//! and [`RawInstance`] records; [`AnnotationIndex::build`] validates them and
//! the functions below turn the index into samples, an image-disjoint split
//! and a region-balanced subset.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{shuffled_options, CocoMeta, Dataset, RegionDeficit, SampleMeta, VqaSample};
use crate::error::Error;
use crate::geometry::{cell_of_point, region_of_point, ImageGeometry, PositionLabel};
use crate::seed;

#[derive(Clone, Debug, PartialEq)]
pub struct RawImage {
    pub id: u64,
    pub file_name: String,
    pub width: Option<u32>,
    pub height: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawCategory {
    pub id: u64,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawInstance {
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: [f64; 4],
    pub iscrowd: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageInfo {
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub category: String,
    pub bbox: [f64; 4],
    pub iscrowd: bool,
}

/// Counts reported after ingest.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub images: usize,
    pub instances: usize,
    pub categories: usize,
    pub skipped_missing_dims: usize,
    pub skipped_unknown_image: usize,
    pub skipped_unknown_category: usize,
    pub clamped_bboxes: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnnotationIndex {
    pub images: BTreeMap<u64, ImageInfo>,
    pub instances: BTreeMap<u64, Vec<Instance>>,
    pub stats: IngestStats,
}

fn clamp_bbox(bbox: [f64; 4], w: u32, h: u32) -> ([f64; 4], bool) {
    let (w, h) = (f64::from(w), f64::from(h));
    let [x, y, bw, bh] = bbox;
    let x0 = x.clamp(0.0, w);
    let y0 = y.clamp(0.0, h);
    let x1 = (x + bw).clamp(x0, w);
    let y1 = (y + bh).clamp(y0, h);
    let clamped = [x0, y0, x1 - x0, y1 - y0];
    (clamped, clamped != bbox)
}

impl AnnotationIndex {
    /// Indexes raw records. Images without dimensions and instances that
    /// reference unknown images or categories are skipped and counted; boxes
    /// reaching outside their image are clamped and counted.
    pub fn build(
        images: Vec<RawImage>,
        categories: Vec<RawCategory>,
        instances: Vec<RawInstance>,
    ) -> AnnotationIndex {
        let mut idx = AnnotationIndex::default();
        for img in images {
            match (img.width, img.height) {
                (Some(width), Some(height)) if width > 0 && height > 0 => {
                    idx.images.insert(
                        img.id,
                        ImageInfo {
                            file_name: img.file_name,
                            width,
                            height,
                        },
                    );
                }
                _ => idx.stats.skipped_missing_dims += 1,
            }
        }
        let names: BTreeMap<u64, String> = categories.into_iter().map(|c| (c.id, c.name)).collect();
        for inst in instances {
            let Some(info) = idx.images.get(&inst.image_id) else {
                idx.stats.skipped_unknown_image += 1;
                continue;
            };
            let Some(name) = names.get(&inst.category_id) else {
                idx.stats.skipped_unknown_category += 1;
                continue;
            };
            let (bbox, clamped) = clamp_bbox(inst.bbox, info.width, info.height);
            if clamped {
                idx.stats.clamped_bboxes += 1;
            }
            idx.instances
                .entry(inst.image_id)
                .or_default()
                .push(Instance {
                    category: name.clone(),
                    bbox,
                    iscrowd: inst.iscrowd,
                });
            idx.stats.instances += 1;
        }
        idx.stats.images = idx.images.len();
        idx.stats.categories = names.len();
        idx
    }
}

/// One sample per (image, category) whose category occurs exactly once in
/// the image. Crowd regions count toward the occurrence total and are never
/// targets themselves.
pub fn build_coco_set(idx: &AnnotationIndex, split: &str, seed: u64) -> Dataset {
    let tag = format!("coco-{split}");
    let mut samples = Vec::new();
    for (image_id, instances) in &idx.instances {
        let info = &idx.images[image_id];
        let geom = ImageGeometry {
            width: info.width,
            height: info.height,
        };
        let mut per_category: BTreeMap<&str, Vec<&Instance>> = BTreeMap::new();
        for inst in instances {
            per_category
                .entry(inst.category.as_str())
                .or_default()
                .push(inst);
        }
        for (category, found) in per_category {
            if found.len() != 1 || found[0].iscrowd {
                continue;
            }
            let [x, y, w, h] = found[0].bbox;
            let (cx, cy) = (x + w / 2.0, y + h / 2.0);
            // clamped boxes always have their centre inside the image
            let (Ok(region), Ok(cell)) =
                (region_of_point(cx, cy, geom), cell_of_point(cx, cy, geom))
            else {
                continue;
            };
            let id = seed::content_id(format!("{tag}|{image_id}|{category}").as_bytes());
            samples.push(VqaSample {
                image_path: info.file_name.clone(),
                question: format!("Where is the {category}?"),
                options: shuffled_options(seed, &id),
                gold: region.label(),
                target_cell: cell,
                target_region: region,
                width: info.width,
                height: info.height,
                meta: SampleMeta {
                    tag: tag.clone(),
                    color: None,
                    shape: None,
                    size: None,
                    distractor_count: 0,
                    distractors: Vec::new(),
                    coco: Some(CocoMeta {
                        image_id: *image_id,
                        category: String::from(category),
                        bbox: found[0].bbox,
                        source_split: String::from(split),
                    }),
                },
                id,
            });
        }
    }
    Dataset::new(tag, seed, samples)
}

fn image_key(s: &VqaSample) -> String {
    match &s.meta.coco {
        Some(c) => format!("{}", c.image_id),
        None => s.image_path.clone(),
    }
}

/// Image-disjoint split: images are visited in seeded order and go to the
/// held-out side while they fit under `round(N * val_fraction)` questions.
pub fn split_train_val(d: &Dataset, val_fraction: f64, seed: u64) -> (Dataset, Dataset) {
    let mut by_image: BTreeMap<String, usize> = BTreeMap::new();
    for s in &d.samples {
        *by_image.entry(image_key(s)).or_default() += 1;
    }
    let mut images: Vec<(String, usize)> = by_image.into_iter().collect();
    images.shuffle(&mut seed::stream("coco-split", seed, &d.name));
    let target = libm::round(d.samples.len() as f64 * val_fraction) as usize;
    let mut val_images = BTreeSet::new();
    let mut val_count = 0;
    for (image, n) in images {
        if val_count + n <= target {
            val_count += n;
            val_images.insert(image);
        }
        if val_count == target {
            break;
        }
    }
    let (val, train): (Vec<_>, Vec<_>) = d
        .samples
        .iter()
        .cloned()
        .partition(|s| val_images.contains(&image_key(s)));
    (
        Dataset::new(format!("{}-train", d.name), seed, train),
        Dataset::new(format!("{}-val", d.name), seed, val),
    )
}

/// Selects `n` samples with an equal share per region (the remainder of
/// `n / 9` goes to the first regions in canonical order).
///
/// Within a region, categories are visited round-robin in order of ascending
/// availability and then name, one sample per visit, so as many distinct
/// categories as possible are represented. Regions that run out of supply
/// are recorded as deficits.
pub fn balanced_subset(d: &Dataset, n: usize, seed: u64) -> Result<Dataset, Error> {
    if n > d.samples.len() {
        return Err(Error::Config(format!(
            "requested {n} samples from a dataset of {}",
            d.samples.len()
        )));
    }
    let mut by_region: Vec<BTreeMap<String, Vec<usize>>> =
        (0..9).map(|_| BTreeMap::new()).collect();
    for (i, s) in d.samples.iter().enumerate() {
        by_region[s.target_region.index()]
            .entry(s.category_key())
            .or_default()
            .push(i);
    }
    let mut selected = Vec::with_capacity(n);
    let mut deficits = Vec::new();
    for (r, categories) in by_region.into_iter().enumerate() {
        let label = PositionLabel::ALL[r];
        let quota = n / 9 + usize::from(r < n % 9);
        let mut queues: Vec<(String, Vec<usize>)> = categories.into_iter().collect();
        for (name, members) in queues.iter_mut() {
            members.sort_by(|a, b| d.samples[*a].id.cmp(&d.samples[*b].id));
            members.shuffle(&mut seed::stream("balanced", seed, &format!("{r}|{name}")));
            members.reverse();
        }
        queues.sort_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| a.0.cmp(&b.0)));
        let mut taken = 0;
        while taken < quota {
            let mut progressed = false;
            for (_, members) in queues.iter_mut() {
                if taken == quota {
                    break;
                }
                if let Some(i) = members.pop() {
                    selected.push(i);
                    taken += 1;
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
        if taken < quota {
            deficits.push(RegionDeficit {
                label,
                requested: quota,
                selected: taken,
            });
        }
    }
    let mut out = Dataset::new(
        format!("{}-balanced{n}", d.name),
        seed,
        selected.into_iter().map(|i| d.samples[i].clone()).collect(),
    );
    out.deficits = deficits;
    Ok(out)
}
