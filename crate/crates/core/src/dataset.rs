//! VQA sample and dataset types shared by the synthetic and COCO pipelines.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::geometry::{Cell, Color, ImageGeometry, PositionLabel, Region, Shape, Size};
use crate::raster::{SceneObject, StimulusSpec};
use crate::seed::{self, sha256_hex};
use crate::GENERATOR_VERSION;

/// COCO provenance of a sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocoMeta {
    pub image_id: u64,
    pub category: String,
    /// `[x, y, w, h]` in native pixels, after clamping to the image.
    pub bbox: [f64; 4],
    pub source_split: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Color>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Shape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<Size>,
    pub distractor_count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub distractors: Vec<SceneObject>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coco: Option<CocoMeta>,
}

/// One image/question/options/answer record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqaSample {
    pub id: String,
    pub image_path: String,
    pub question: String,
    pub options: [PositionLabel; 9],
    pub gold: PositionLabel,
    pub target_cell: Cell,
    pub target_region: Region,
    pub width: u32,
    pub height: u32,
    pub meta: SampleMeta,
}

impl VqaSample {
    pub fn geometry(&self) -> ImageGeometry {
        ImageGeometry {
            width: self.width,
            height: self.height,
        }
    }

    /// Rebuilds the scene of a synthetic sample. `None` for COCO samples.
    pub fn scene(&self) -> Option<StimulusSpec> {
        Some(StimulusSpec {
            target: SceneObject {
                shape: self.meta.shape?,
                color: self.meta.color?,
                size: self.meta.size?,
                cell: self.target_cell,
            },
            distractors: self.meta.distractors.clone(),
            geom: self.geometry(),
        })
    }

    /// Category used to spread balanced subsets: the COCO category, or
    /// `"<color> <shape>"` for synthetic samples.
    pub fn category_key(&self) -> String {
        match (&self.meta.coco, self.meta.color, self.meta.shape) {
            (Some(c), _, _) => c.category.clone(),
            (None, Some(color), Some(shape)) => format!("{} {}", color.as_str(), shape.as_str()),
            _ => String::new(),
        }
    }

    /// Index of the gold label within the option list.
    pub fn gold_index(&self) -> usize {
        self.options
            .iter()
            .position(|l| *l == self.gold)
            .unwrap_or(usize::MAX)
    }

    /// Checks the structural invariants of a sample.
    pub fn is_consistent(&self) -> bool {
        let mut seen = [false; 9];
        for l in self.options {
            seen[l.index()] = true;
        }
        seen.iter().all(|s| *s)
            && self.gold == self.target_region.label()
            && (self.meta.coco.is_some() || self.target_region == self.target_cell.region())
    }
}

/// Option order for a sample, drawn from a stream keyed by the sample id.
pub fn shuffled_options(seed: u64, sample_id: &str) -> [PositionLabel; 9] {
    let mut options = PositionLabel::ALL;
    options.shuffle(&mut seed::stream("options", seed, sample_id));
    options
}

/// Per-region shortfall recorded by balanced subset selection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionDeficit {
    pub label: PositionLabel,
    pub requested: usize,
    pub selected: usize,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Dataset {
    pub name: String,
    pub seed: u64,
    pub samples: Vec<VqaSample>,
    pub deficits: Vec<RegionDeficit>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCount {
    pub label: PositionLabel,
    pub count: usize,
}

/// Self-describing summary written next to the samples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub seed: u64,
    pub generator_version: String,
    pub total: usize,
    /// 9×9 sample counts by target cell, row-major.
    pub counts_per_cell: Vec<Vec<usize>>,
    pub counts_per_label: Vec<LabelCount>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub region_deficits: Vec<RegionDeficit>,
    pub content_hash: String,
}

impl Dataset {
    pub fn new(name: impl Into<String>, seed: u64, samples: Vec<VqaSample>) -> Dataset {
        Dataset {
            name: name.into(),
            seed,
            samples,
            deficits: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn cell_counts(&self) -> [[usize; 9]; 9] {
        let mut counts = [[0; 9]; 9];
        for s in &self.samples {
            counts[usize::from(s.target_cell.row)][usize::from(s.target_cell.col)] += 1;
        }
        counts
    }

    pub fn label_counts(&self) -> [usize; 9] {
        let mut counts = [0; 9];
        for s in &self.samples {
            counts[s.gold.index()] += 1;
        }
        counts
    }

    /// Hash over the ordered sample ids, options and answers.
    pub fn content_hash(&self) -> String {
        let mut buf = Vec::new();
        for s in &self.samples {
            buf.extend_from_slice(s.id.as_bytes());
            for o in s.options {
                buf.push(o.index() as u8);
            }
            buf.push(s.gold.index() as u8);
            buf.push(b'\n');
        }
        sha256_hex(&buf)
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            name: self.name.clone(),
            seed: self.seed,
            generator_version: String::from(GENERATOR_VERSION),
            total: self.samples.len(),
            counts_per_cell: self.cell_counts().iter().map(|r| r.to_vec()).collect(),
            counts_per_label: PositionLabel::ALL
                .iter()
                .zip(self.label_counts())
                .map(|(label, count)| LabelCount {
                    label: *label,
                    count,
                })
                .collect(),
            region_deficits: self.deficits.clone(),
            content_hash: self.content_hash(),
        }
    }

    /// True when sample ids are pairwise distinct.
    pub fn ids_unique(&self) -> bool {
        let mut ids: Vec<&str> = self.samples.iter().map(|s| s.id.as_str()).collect();
        ids.sort_unstable();
        ids.windows(2).all(|w| w[0] != w[1])
    }
}

/// Splits samples into `(keep, held_out)` by stratum: each stratum holds out
/// `round(len * held_out_fraction)` samples chosen by a seeded shuffle.
/// Original order is preserved on both sides.
pub fn stratified_split<K: Ord + Clone>(
    samples: &[VqaSample],
    held_out_fraction: f64,
    seed: u64,
    purpose: &str,
    key: impl Fn(&VqaSample) -> (K, String),
) -> (Vec<VqaSample>, Vec<VqaSample>) {
    use alloc::collections::BTreeMap;

    let mut strata: BTreeMap<K, (String, Vec<usize>)> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let (k, name) = key(s);
        strata
            .entry(k)
            .or_insert_with(|| (name, Vec::new()))
            .1
            .push(i);
    }
    let mut held = alloc::vec![false; samples.len()];
    for (name, mut members) in strata.into_values() {
        let n_held = libm::round(members.len() as f64 * held_out_fraction) as usize;
        members.shuffle(&mut seed::stream(purpose, seed, &name));
        for i in members.into_iter().take(n_held) {
            held[i] = true;
        }
    }
    let mut keep = Vec::new();
    let mut out = Vec::new();
    for (s, h) in samples.iter().zip(held) {
        if h {
            out.push(s.clone());
        } else {
            keep.push(s.clone());
        }
    }
    (keep, out)
}
