//! Synthetic dataset construction: the exhaustive evaluation set, the
//! attribute-disjoint training set with its stratified split, distractor
//! augmentation and nested scaling subsets.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::{shuffled_options, stratified_split, Dataset, SampleMeta, VqaSample};
use crate::error::Error;
use crate::geometry::{region_of_cell, Cell, Color, Shape, Size};
use crate::raster::{SceneObject, StimulusSpec};
use crate::seed;

pub const EVAL_TAG: &str = "synth-eval";
pub const TRAIN_TAG: &str = "synth-train";

/// Default scaling ladder, in percent.
pub const DEFAULT_LADDER: [f64; 7] = [1.0, 2.0, 5.0, 10.0, 25.0, 50.0, 100.0];

/// Fraction of each cell's training samples held out for validation.
pub const VAL_FRACTION: f64 = 0.2;

fn spec_key(spec: &StimulusSpec, tag: &str) -> String {
    let mut key = format!("{tag}|{}x{}", spec.geom.width, spec.geom.height);
    for o in spec.objects() {
        key.push_str(&format!(
            "|{}:{}:{}:{},{}",
            o.shape.as_str(),
            o.color.as_str(),
            o.size.as_str(),
            o.cell.row,
            o.cell.col
        ));
    }
    key
}

/// Builds the VQA record of a synthetic scene. The id hashes the full scene
/// and the dataset tag; the option order is drawn from a stream keyed by
/// `(seed, id)`.
pub fn make_vqa_sample(spec: &StimulusSpec, tag: &str, seed: u64) -> VqaSample {
    let id = seed::content_id(spec_key(spec, tag).as_bytes());
    let t = spec.target;
    let region = region_of_cell(t.cell);
    VqaSample {
        image_path: format!("images/{id}.png"),
        question: format!("Where is the {} {}?", t.color.as_str(), t.shape.as_str()),
        options: shuffled_options(seed, &id),
        gold: region.label(),
        target_cell: t.cell,
        target_region: region,
        width: spec.geom.width,
        height: spec.geom.height,
        meta: SampleMeta {
            tag: String::from(tag),
            color: Some(t.color),
            shape: Some(t.shape),
            size: Some(t.size),
            distractor_count: spec.distractors.len(),
            distractors: spec.distractors.clone(),
            coco: None,
        },
        id,
    }
}

fn exhaustive(
    tag: &str,
    seed: u64,
    combos: impl Iterator<Item = (Color, Shape)>,
) -> Vec<VqaSample> {
    let mut samples = Vec::new();
    for (color, shape) in combos {
        for size in Size::ALL {
            for cell in Cell::all() {
                let spec = StimulusSpec::single(SceneObject {
                    shape,
                    color,
                    size,
                    cell,
                });
                samples.push(make_vqa_sample(&spec, tag, seed));
            }
        }
    }
    samples
}

/// Color-shape combinations of the evaluation set.
pub fn eval_combos() -> impl Iterator<Item = (Color, Shape)> {
    Color::CHROMATIC
        .into_iter()
        .flat_map(|c| Shape::BASIC.into_iter().map(move |s| (c, s)))
}

/// Color-shape combinations of the training set: colored plusses, then white
/// basic shapes.
pub fn train_combos() -> impl Iterator<Item = (Color, Shape)> {
    Color::CHROMATIC
        .into_iter()
        .map(|c| (c, Shape::Plus))
        .chain(Shape::BASIC.into_iter().map(|s| (Color::White, s)))
}

/// Every (color, shape, size) at every cell: 6 × 4 × 2 × 81 samples.
pub fn build_eval_set(seed: u64) -> Dataset {
    Dataset::new(EVAL_TAG, seed, exhaustive(EVAL_TAG, seed, eval_combos()))
}

/// The full training pool before splitting: 972 colored plusses and 648
/// white shapes.
pub fn build_train_pool(seed: u64) -> Dataset {
    Dataset::new(TRAIN_TAG, seed, exhaustive(TRAIN_TAG, seed, train_combos()))
}

/// Training pool split 80/20 within each target cell.
pub fn build_train_set(seed: u64) -> (Dataset, Dataset) {
    let pool = build_train_pool(seed);
    let (train, val) = stratified_split(&pool.samples, VAL_FRACTION, seed, "train-split", |s| {
        (
            s.target_cell,
            format!("{},{}", s.target_cell.row, s.target_cell.col),
        )
    });
    (
        Dataset::new(TRAIN_TAG, seed, train),
        Dataset::new("synth-val", seed, val),
    )
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DistractorOptions {
    /// Accept distractor counts other than 1, 3 and 5.
    pub allow_any_k: bool,
    /// Let white targets receive plus-shaped distractors.
    pub allow_plus: bool,
}

/// Attribute choices available to a distractor of `target`, as
/// `(shapes, colors)`. White targets keep the color and vary the shape;
/// colored targets keep the shape and vary the color.
pub fn distractor_palette(target: &SceneObject, allow_plus: bool) -> (Vec<Shape>, Vec<Color>) {
    if target.color == Color::White {
        let mut shapes: Vec<Shape> = Shape::BASIC.to_vec();
        if allow_plus {
            shapes.push(Shape::Plus);
        }
        shapes.retain(|s| *s != target.shape);
        (shapes, alloc::vec![Color::White])
    } else {
        let colors = Color::CHROMATIC
            .into_iter()
            .filter(|c| *c != target.color)
            .collect();
        (alloc::vec![target.shape], colors)
    }
}

/// Adds `k` distractors to every sample in cells drawn without replacement
/// from the 80 non-target cells. `k = 0` returns the dataset unchanged.
pub fn add_distractors(
    d: &Dataset,
    k: usize,
    seed: u64,
    opts: DistractorOptions,
) -> Result<Dataset, Error> {
    if k == 0 {
        return Ok(d.clone());
    }
    if !opts.allow_any_k && ![1, 3, 5].contains(&k) {
        return Err(Error::Config(format!(
            "distractor count {k} is not one of 1, 3, 5"
        )));
    }
    if k + 1 > 81 {
        return Err(Error::Config(format!(
            "{k} distractors do not fit in 80 free cells"
        )));
    }
    let mut out = Vec::with_capacity(d.samples.len());
    for s in &d.samples {
        let mut spec = s.scene().ok_or_else(|| {
            Error::Config(format!("sample {} has no synthetic scene to augment", s.id))
        })?;
        spec.distractors.clear();
        let mut rng = seed::stream("distractors", seed, &s.id);
        let mut free: Vec<Cell> = Cell::all().filter(|c| *c != spec.target.cell).collect();
        let (picked, _) = free.partial_shuffle(&mut rng, k);
        let cells = picked.to_vec();
        let (shapes, colors) = distractor_palette(&spec.target, opts.allow_plus);
        for cell in cells {
            let shape = shapes[rng.gen_range(0..shapes.len())];
            let color = colors[rng.gen_range(0..colors.len())];
            let size = Size::ALL[rng.gen_range(0..Size::ALL.len())];
            spec.distractors.push(SceneObject {
                shape,
                color,
                size,
                cell,
            });
        }
        let tag = format!("{}+d{k}", s.meta.tag);
        out.push(make_vqa_sample(&spec, &tag, seed));
    }
    Ok(Dataset::new(format!("{}+d{k}", d.name), seed, out))
}

fn percent_label(f: f64) -> String {
    format!("{f}")
}

/// Nested subsets stratified by target cell.
///
/// Every cell's samples are put in a seeded order; sample `j` of a cell with
/// `n` samples gets priority `(2j + 1) / 2n`, and the subset for `f` percent
/// is the `round(N * f / 100)` highest-priority samples. Smaller subsets are
/// prefixes of larger ones and per-cell counts stay within one of the
/// proportional share.
pub fn scale_subsets(d: &Dataset, fractions: &[f64], seed: u64) -> Result<Vec<Dataset>, Error> {
    for f in fractions {
        if !(*f > 0.0 && *f <= 100.0) {
            return Err(Error::Config(format!("fraction {f} outside (0, 100]")));
        }
    }
    let mut strata: BTreeMap<Cell, Vec<usize>> = BTreeMap::new();
    for (i, s) in d.samples.iter().enumerate() {
        strata.entry(s.target_cell).or_default().push(i);
    }
    let mut order: Vec<Cell> = strata.keys().copied().collect();
    order.shuffle(&mut seed::stream("scale-strata", seed, ""));
    let mut priority = alloc::vec![0usize; 81];
    for (p, c) in order.iter().enumerate() {
        priority[c.index()] = p;
    }

    // (position in stratum, stratum size, stratum priority, sample index)
    let mut ranked: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(d.samples.len());
    for (cell, members) in strata.iter_mut() {
        members.shuffle(&mut seed::stream(
            "scale",
            seed,
            &format!("{},{}", cell.row, cell.col),
        ));
        let n = members.len();
        for (j, i) in members.iter().enumerate() {
            ranked.push((j, n, priority[cell.index()], *i));
        }
    }
    ranked.sort_by(|a, b| {
        let lhs = (2 * a.0 as u64 + 1) * b.1 as u64;
        let rhs = (2 * b.0 as u64 + 1) * a.1 as u64;
        match lhs.cmp(&rhs) {
            Ordering::Equal => a.2.cmp(&b.2),
            o => o,
        }
    });

    let total = d.samples.len();
    let mut out = Vec::with_capacity(fractions.len());
    for f in fractions {
        let take = libm::floor(total as f64 * f / 100.0 + 0.5) as usize;
        if take == 0 {
            return Err(Error::Config(format!(
                "{f}% of {total} samples selects nothing"
            )));
        }
        let mut keep = alloc::vec![false; total];
        for r in ranked.iter().take(take) {
            keep[r.3] = true;
        }
        let samples = d
            .samples
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(s, _)| s.clone())
            .collect();
        let name = format!("{}@{}pct", d.name, percent_label(*f));
        out.push(Dataset::new(name, seed, samples));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PositionLabel;
    use alloc::collections::BTreeSet;

    #[test]
    fn red_square_sample() {
        let spec = StimulusSpec::single(SceneObject {
            shape: Shape::Square,
            color: Color::Red,
            size: Size::Regular,
            cell: Cell { row: 4, col: 4 },
        });
        let s = make_vqa_sample(&spec, EVAL_TAG, 3);
        assert_eq!(s.gold, PositionLabel::Center);
        assert_eq!(s.question, "Where is the red square?");
        assert!(s.is_consistent());
        assert_eq!(make_vqa_sample(&spec, EVAL_TAG, 3), s);
        assert_eq!(s.image_path, format!("images/{}.png", s.id));
    }

    #[test]
    fn white_targets_are_spoken() {
        let spec = StimulusSpec::single(SceneObject {
            shape: Shape::Circle,
            color: Color::White,
            size: Size::Small,
            cell: Cell { row: 0, col: 0 },
        });
        assert_eq!(
            make_vqa_sample(&spec, TRAIN_TAG, 0).question,
            "Where is the white circle?"
        );
    }

    #[test]
    fn eval_counts() {
        let d = build_eval_set(0);
        assert_eq!(d.len(), 3888);
        assert!(d.ids_unique());
        assert!(d.cell_counts().iter().flatten().all(|c| *c == 48));
        assert_eq!(d.label_counts(), [432; 9]);
    }

    #[test]
    fn train_counts_and_split() {
        let pool = build_train_pool(0);
        assert_eq!(pool.len(), 1620);
        let plus = pool
            .samples
            .iter()
            .filter(|s| s.meta.shape == Some(Shape::Plus))
            .count();
        assert_eq!(plus, 972);
        assert_eq!(pool.len() - plus, 648);
        let (train, val) = build_train_set(0);
        assert_eq!((train.len(), val.len()), (1296, 324));
        assert!(train.cell_counts().iter().flatten().all(|c| *c == 16));
        assert!(val.cell_counts().iter().flatten().all(|c| *c == 4));
        let train_ids: BTreeSet<_> = train.samples.iter().map(|s| &s.id).collect();
        assert!(val.samples.iter().all(|s| !train_ids.contains(&s.id)));
    }

    #[test]
    fn combos_are_disjoint() {
        let eval: BTreeSet<_> = eval_combos().collect();
        let train: BTreeSet<_> = train_combos().collect();
        assert!(eval.is_disjoint(&train));
        assert!(eval.iter().all(|(_, s)| *s != Shape::Plus));
        assert!(train
            .iter()
            .all(|(c, s)| *c == Color::White || *s == Shape::Plus));
    }

    #[test]
    fn white_star_palette() {
        let t = SceneObject {
            shape: Shape::Star,
            color: Color::White,
            size: Size::Regular,
            cell: Cell { row: 0, col: 0 },
        };
        let (shapes, colors) = distractor_palette(&t, false);
        assert_eq!(shapes, [Shape::Circle, Shape::Triangle, Shape::Square]);
        assert_eq!(colors, [Color::White]);
        let (shapes, _) = distractor_palette(&t, true);
        assert_eq!(
            shapes,
            [Shape::Circle, Shape::Triangle, Shape::Square, Shape::Plus]
        );
    }

    #[test]
    fn distractor_k_validation() {
        let (train, _) = build_train_set(0);
        let small = Dataset::new("x", 0, train.samples[..5].to_vec());
        assert!(add_distractors(&small, 2, 0, DistractorOptions::default()).is_err());
        assert!(add_distractors(
            &small,
            2,
            0,
            DistractorOptions {
                allow_any_k: true,
                ..Default::default()
            }
        )
        .is_ok());
        assert!(add_distractors(
            &small,
            81,
            0,
            DistractorOptions {
                allow_any_k: true,
                ..Default::default()
            }
        )
        .is_err());
        assert_eq!(
            add_distractors(&small, 0, 9, DistractorOptions::default()).unwrap(),
            small
        );
    }

    #[test]
    fn scale_ten_percent_of_train() {
        let (train, _) = build_train_set(0);
        let subsets = scale_subsets(&train, &[5.0, 10.0, 100.0], 4).unwrap();
        let ten = &subsets[1];
        assert!(ten.len() == 129 || ten.len() == 130);
        let counts = ten.cell_counts();
        assert!(counts.iter().flatten().all(|c| *c == 1 || *c == 2));
        assert_eq!(subsets[2].samples, train.samples);
        let ids: BTreeSet<_> = ten.samples.iter().map(|s| &s.id).collect();
        assert!(subsets[0].samples.iter().all(|s| ids.contains(&s.id)));
    }

    #[test]
    fn scale_rejects_empty_and_out_of_range() {
        let d = Dataset::new("tiny", 0, build_eval_set(0).samples[..10].to_vec());
        assert!(scale_subsets(&d, &[1.0], 0).is_err());
        assert!(scale_subsets(&d, &[0.0], 0).is_err());
        assert!(scale_subsets(&d, &[101.0], 0).is_err());
    }
}
