use posgrid_core::answer::{normalize, parse_answer};
use posgrid_core::dataset::Dataset;
use posgrid_core::geometry::{cell_center, cell_of_pixel, region_of_cell, region_of_point};
use posgrid_core::hsd::{HiddenDump, HiddenRecord};
use posgrid_core::probe::{stratified_folds, train_linear_svm, ProbeConfig, Standardizer};
use posgrid_core::retrieval::retrieval_select;
use posgrid_core::score::{score, Prediction};
use posgrid_core::synth::{
    add_distractors, build_eval_set, build_train_set, distractor_palette, DistractorOptions,
};
use posgrid_core::{Cell, ImageGeometry, PositionLabel};
use proptest::prelude::*;
use proptest::sample::select;

fn eval_slice(n: usize) -> Dataset {
    let d = build_eval_set(1);
    Dataset::new(
        "slice",
        1,
        d.samples.into_iter().step_by(3888 / n).take(n).collect(),
    )
}

const WORDS: [&str; 12] = [
    "top", "bottom", "center", "left", "right", "the", "is", "in", "middle", ",", "-", "!",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pixel_assignment_matches_rectangles(w in 1u32..2000, h in 1u32..2000, fx in 0.0f64..1.0, fy in 0.0f64..1.0) {
        let g = ImageGeometry::new(w, h).unwrap();
        let x = ((f64::from(w) * fx) as u32).min(w - 1);
        let y = ((f64::from(h) * fy) as u32).min(h - 1);
        let c = cell_of_pixel(x, y, g).unwrap();
        // integer rectangle membership: col*w <= 9x < (col+1)*w
        let col = (0..9u64).find(|k| k * u64::from(w) <= 9 * u64::from(x) && 9 * u64::from(x) < (k + 1) * u64::from(w)).unwrap();
        let row = (0..9u64).find(|k| k * u64::from(h) <= 9 * u64::from(y) && 9 * u64::from(y) < (k + 1) * u64::from(h)).unwrap();
        prop_assert_eq!((u64::from(c.row), u64::from(c.col)), (row, col));
    }

    #[test]
    fn cell_centers_round_trip(w in 18u32..3000, h in 18u32..3000, idx in 0usize..81) {
        let g = ImageGeometry::new(w, h).unwrap();
        let c = Cell::from_index(idx).unwrap();
        let (x, y) = cell_center(c, g);
        prop_assert_eq!(cell_of_pixel(x, y, g).unwrap(), c);
        prop_assert_eq!(region_of_point(f64::from(x), f64::from(y), g).unwrap(), region_of_cell(c));
    }

    #[test]
    fn parser_is_idempotent(words in prop::collection::vec(select(WORDS.to_vec()), 0..8)) {
        let text = words.join(" ");
        prop_assert_eq!(parse_answer(&normalize(&text)), parse_answer(&text));
        let p = parse_answer(&text);
        prop_assert_eq!(p.valid, p.label.is_some());
    }

    #[test]
    fn retrieval_is_scale_invariant(
        vals in prop::collection::vec(-1.0f32..1.0, 80),
        scale in prop::collection::vec(0.01f32..100.0, 10),
    ) {
        let image = &vals[..8];
        let cands: Vec<Vec<f32>> = vals[8..].chunks(8).map(<[f32]>::to_vec).collect();
        prop_assume!(image.iter().any(|v| *v != 0.0) && cands.iter().all(|c| c.iter().any(|v| *v != 0.0)));
        let base = retrieval_select(image, &cands).unwrap();
        let scaled_image: Vec<f32> = image.iter().map(|v| v * scale[9]).collect();
        let scaled: Vec<Vec<f32>> = cands.iter().zip(&scale).map(|(c, s)| c.iter().map(|v| v * s).collect()).collect();
        prop_assert_eq!(retrieval_select(&scaled_image, &scaled).unwrap(), base);
    }

    #[test]
    fn hsd_round_trip(dim in 0u32..6, labels in prop::collection::vec(0usize..9, 0..20), layer in any::<u16>()) {
        let dump = HiddenDump {
            layer_index: layer,
            dim,
            records: labels.iter().enumerate().map(|(i, l)| HiddenRecord {
                sample_id: format!("s{i}"),
                label: PositionLabel::ALL[*l],
                features: (0..dim).map(|k| (i as f32) * 0.5 - k as f32).collect(),
            }).collect(),
        };
        prop_assert_eq!(HiddenDump::decode(&dump.encode().unwrap()).unwrap(), dump);
    }

    #[test]
    fn folds_partition_and_stratify(labels in prop::collection::vec(0usize..9, 1..200), folds in 2usize..6, seed in any::<u64>()) {
        let labels: Vec<_> = labels.into_iter().map(|l| PositionLabel::ALL[l]).collect();
        let a = stratified_folds(&labels, folds, seed);
        prop_assert_eq!(a.len(), labels.len());
        prop_assert!(a.iter().all(|f| *f < folds));
        for l in PositionLabel::ALL {
            let mut per = vec![0usize; folds];
            for (i, f) in a.iter().enumerate() {
                if labels[i] == l { per[*f] += 1; }
            }
            prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn score_ignores_option_order(seed in any::<u64>(), answers in prop::collection::vec(0usize..10, 81)) {
        let d = eval_slice(81);
        let preds: Vec<_> = d.samples.iter().zip(&answers).map(|(s, a)| {
            let text = PositionLabel::from_index(*a).map_or("no idea", |l| l.as_str());
            Prediction::text(s.id.clone(), text)
        }).collect();
        let base = score(&d, &preds).unwrap();
        let mut shuffled = d.clone();
        for s in shuffled.samples.iter_mut() {
            s.options = posgrid_core::dataset::shuffled_options(seed, &s.id);
        }
        prop_assert_eq!(score(&shuffled, &preds).unwrap(), base);
    }

    #[test]
    fn accuracy_decomposes(answers in prop::collection::vec(0usize..10, 162)) {
        let d = eval_slice(162);
        let preds: Vec<_> = d.samples.iter().zip(&answers).filter(|(_, a)| **a != 9).map(|(s, a)| {
            Prediction::text(s.id.clone(), PositionLabel::ALL[*a].as_str())
        }).collect();
        let r = score(&d, &preds).unwrap();
        let correct: usize = r.cell_accuracy.iter().flatten().map(|e| e.correct).sum();
        let support: usize = r.cell_accuracy.iter().flatten().map(|e| e.support).sum();
        prop_assert_eq!(correct, r.n.correct);
        prop_assert_eq!(support, r.n.total);
        prop_assert!((r.overall_accuracy - correct as f64 / support as f64).abs() < 1e-12);
        for (ri, row) in r.region_accuracy.iter().enumerate() {
            for (ci, e) in row.iter().enumerate() {
                let (mut c, mut s) = (0, 0);
                for cell in Cell::all().filter(|c| usize::from(c.row / 3) == ri && usize::from(c.col / 3) == ci) {
                    let ce = r.cell_accuracy[usize::from(cell.row)][usize::from(cell.col)];
                    c += ce.correct;
                    s += ce.support;
                }
                prop_assert_eq!((e.correct, e.support), (c, s));
            }
        }
    }

    #[test]
    fn distractors_are_legal(seed in any::<u64>(), k in select(vec![1usize, 3, 5])) {
        let (train, _) = build_train_set(0);
        let d = Dataset::new("t", 0, train.samples.into_iter().step_by(37).collect());
        let aug = add_distractors(&d, k, seed, DistractorOptions::default()).unwrap();
        prop_assert_eq!(aug.len(), d.len());
        for (before, after) in d.samples.iter().zip(&aug.samples) {
            let scene = after.scene().unwrap();
            prop_assert_eq!(scene.distractors.len(), k);
            prop_assert!(scene.overlapping_cell().is_none());
            prop_assert_eq!(scene.target.cell, before.target_cell);
            let (shapes, colors) = distractor_palette(&scene.target, false);
            for o in &scene.distractors {
                prop_assert!(shapes.contains(&o.shape) && colors.contains(&o.color));
            }
            prop_assert!(after.is_consistent());
        }
        prop_assert_eq!(add_distractors(&d, k, seed, DistractorOptions::default()).unwrap(), aug);
    }

    #[test]
    fn probe_predictions_absorb_feature_scale(scale in 0.01f64..100.0, seed in any::<u64>()) {
        let mut rng = posgrid_core::seed::stream("prop", seed, "");
        use rand::Rng;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for l in PositionLabel::ALL {
            for _ in 0..4 {
                let mut v: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
                v[l.index() % 6] += 3.0 + l.index() as f64;
                x.push(v);
                y.push(l);
            }
        }
        let cfg = ProbeConfig { seed, epochs: 5, ..Default::default() };
        let fit_predict = |rows: &[Vec<f64>]| {
            let st = Standardizer::fit(rows).unwrap();
            let z: Vec<_> = rows.iter().map(|r| st.apply(r).unwrap()).collect();
            let svm = train_linear_svm(&z, &y, &cfg).unwrap();
            z.iter().map(|r| svm.predict(r)).collect::<Vec<_>>()
        };
        let scaled: Vec<Vec<f64>> = x.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
        let a = fit_predict(&x);
        let b = fit_predict(&scaled);
        prop_assert_eq!(a, b);
    }
}
