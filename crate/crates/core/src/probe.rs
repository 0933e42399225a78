//! Layer-wise linear probing.
//!
//! A one-vs-rest linear SVM (hinge loss, L2 penalty `λ = 1 / (C·n)`) is fitted
//! by Pegasos-style stochastic subgradient descent with step `1 / (λ·t)` and
//! scored with stratified k-fold cross-validation. Features are standardized
//! with statistics of the training fold only.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::PositionLabel;
use crate::hsd::HiddenDump;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub folds: usize,
    /// Regularization strength; larger means weaker regularization.
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Cross-validation runs per layer, with seeds `seed..seed + repeats`.
    pub repeats: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            folds: 3,
            c: 1.0,
            epochs: 20,
            seed: 0,
            repeats: 1,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.folds < 2 {
            return Err(Error::Config(format!(
                "folds must be at least 2, got {}",
                self.folds
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if self.epochs == 0 || self.repeats == 0 {
            return Err(Error::Config("epochs and repeats must be positive".into()));
        }
        Ok(())
    }
}

/// Per-dimension mean and standard deviation of a training fold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Standardizer, Error> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Config("cannot standardize an empty training set".into()))?;
        let dim = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| libm::sqrt(s / n)).collect();
        Ok(Standardizer { mean, std })
    }

    /// Zero-variance dimensions pass through untouched.
    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>, Error> {
        if row.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { *v })
            .collect())
    }
}

/// Fits statistics on `train` and applies them to `apply_to`.
pub fn standardize(
    train: &[Vec<f64>],
    apply_to: &[Vec<f64>],
) -> Result<(Vec<Vec<f64>>, Standardizer), Error> {
    let st = Standardizer::fit(train)?;
    let out = apply_to
        .iter()
        .map(|r| st.apply(r))
        .collect::<Result<_, _>>()?;
    Ok((out, st))
}

/// One weight row per label; the last entry of each row is the bias,
/// learned as the weight of a constant feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub dim: usize,
    pub weights: Vec<Vec<f64>>,
}

impl LinearSvm {
    pub fn scores(&self, x: &[f64]) -> [f64; 9] {
        let mut out = [0.0; 9];
        for (o, w) in out.iter_mut().zip(&self.weights) {
            *o = w[..self.dim].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[self.dim];
        }
        out
    }

    /// Highest-scoring label; ties go to canonical order.
    pub fn predict(&self, x: &[f64]) -> PositionLabel {
        let s = self.scores(x);
        let mut best = 0;
        for k in 1..9 {
            if s[k] > s[best] {
                best = k;
            }
        }
        PositionLabel::ALL[best]
    }
}

/// Scaled weight vector `w = scale * v` so the shrink step is O(1).
struct ScaledRow {
    v: Vec<f64>,
    scale: f64,
    norm_sq: f64,
}

impl ScaledRow {
    fn dot(&self, x: &[f64]) -> f64 {
        self.v[..x.len()]
            .iter()
            .zip(x)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + self.v[x.len()]
    }

    fn fold_scale(&mut self) {
        for w in self.v.iter_mut() {
            *w *= self.scale;
        }
        self.norm_sq *= self.scale * self.scale;
        self.scale = 1.0;
    }

    fn into_weights(mut self) -> Vec<f64> {
        self.fold_scale();
        self.v
    }
}

/// Trains a one-vs-rest linear SVM on standardized features.
pub fn train_linear_svm(
    x: &[Vec<f64>],
    y: &[PositionLabel],
    config: &ProbeConfig,
) -> Result<LinearSvm, Error> {
    config.validate()?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let classes: BTreeSet<PositionLabel> = y.iter().copied().collect();
    if classes.len() < 2 {
        return Err(Error::Config(
            "linear SVM needs at least two classes".into(),
        ));
    }
    let dim = x[0].len();
    if let Some(bad) = x.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    let n = x.len();
    let lambda = 1.0 / (config.c * n as f64);
    let radius = 1.0 / libm::sqrt(lambda);
    let mut rows: Vec<ScaledRow> = (0..9)
        .map(|_| ScaledRow {
            v: vec![0.0; dim + 1],
            scale: 1.0,
            norm_sq: 0.0,
        })
        .collect();
    let x_norm_sq: Vec<f64> = x
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>() + 1.0)
        .collect();

    let mut rng = seed::stream("probe-order", config.seed, "");
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0u64;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let shrink = 1.0 - 1.0 / t as f64;
            for (k, row) in rows.iter_mut().enumerate() {
                let target = if y[i].index() == k { 1.0 } else { -1.0 };
                let mut dot_v = row.dot(&x[i]);
                let margin = target * row.scale * dot_v;
                row.scale *= shrink;
                if row.scale == 0.0 {
                    row.v.iter_mut().for_each(|w| *w = 0.0);
                    row.scale = 1.0;
                    row.norm_sq = 0.0;
                    dot_v = 0.0;
                }
                if margin < 1.0 {
                    let a = eta * target / row.scale;
                    for (w, xv) in row.v[..dim].iter_mut().zip(&x[i]) {
                        *w += a * xv;
                    }
                    row.v[dim] += a;
                    row.norm_sq = (row.norm_sq + 2.0 * a * dot_v + a * a * x_norm_sq[i]).max(0.0);
                }
                let norm = row.scale * libm::sqrt(row.norm_sq);
                if norm > radius {
                    row.scale *= radius / norm;
                }
                if row.scale < 1e-6 {
                    row.fold_scale();
                }
            }
        }
    }
    Ok(LinearSvm {
        dim,
        weights: rows.into_iter().map(ScaledRow::into_weights).collect(),
    })
}

/// Fold index per record. Each label's records are shuffled and dealt
/// round-robin, continuing the deal across labels so fold sizes differ by at
/// most one overall and per label.
pub fn stratified_folds(labels: &[PositionLabel], folds: usize, seed: u64) -> Vec<usize> {
    let mut assignment = vec![0; labels.len()];
    let mut offset = 0;
    for label in PositionLabel::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|i| labels[*i] == label).collect();
        members.shuffle(&mut seed::stream("probe-folds", seed, label.as_str()));
        for (j, i) in members.iter().enumerate() {
            assignment[*i] = (offset + j) % folds;
        }
        offset += members.len();
    }
    assignment
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub mean_accuracy: f64,
    pub per_fold: Vec<f64>,
}

pub fn cross_validate_features(
    x: &[Vec<f64>],
    y: &[PositionLabel],
    config: &ProbeConfig,
) -> Result<CvResult, Error> {
    config.validate()?;
    let mut support = [0usize; 9];
    for l in y {
        support[l.index()] += 1;
    }
    for (label, n) in PositionLabel::ALL.iter().zip(support) {
        if n > 0 && n < config.folds {
            return Err(Error::Config(format!(
                "label {label} has {n} examples, fewer than {} folds",
                config.folds
            )));
        }
    }
    let assignment = stratified_folds(y, config.folds, config.seed);
    let mut per_fold = Vec::with_capacity(config.folds);
    for fold in 0..config.folds {
        let (mut train_x, mut train_y, mut test_x, mut test_y) = (vec![], vec![], vec![], vec![]);
        for (i, f) in assignment.iter().enumerate() {
            if *f == fold {
                test_x.push(x[i].clone());
                test_y.push(y[i]);
            } else {
                train_x.push(x[i].clone());
                train_y.push(y[i]);
            }
        }
        let st = Standardizer::fit(&train_x)?;
        let train_x = train_x
            .iter()
            .map(|r| st.apply(r))
            .collect::<Result<Vec<_>, _>>()?;
        let svm = train_linear_svm(&train_x, &train_y, config)?;
        let mut correct = 0;
        for (r, l) in test_x.iter().zip(&test_y) {
            if svm.predict(&st.apply(r)?) == *l {
                correct += 1;
            }
        }
        per_fold.push(if test_y.is_empty() {
            0.0
        } else {
            correct as f64 / test_y.len() as f64
        });
    }
    let mean_accuracy = per_fold.iter().sum::<f64>() / per_fold.len() as f64;
    Ok(CvResult {
        mean_accuracy,
        per_fold,
    })
}

fn dump_features(dump: &HiddenDump) -> Result<(Vec<Vec<f64>>, Vec<PositionLabel>), Error> {
    dump.validate()?;
    Ok(dump
        .records
        .iter()
        .map(|r| (r.features.iter().map(|v| f64::from(*v)).collect(), r.label))
        .unzip())
}

pub fn cross_validate(dump: &HiddenDump, config: &ProbeConfig) -> Result<CvResult, Error> {
    let (x, y) = dump_features(dump)?;
    cross_validate_features(&x, &y, config)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerScore {
    pub layer: u16,
    pub mean: f64,
    /// Standard deviation of the mean accuracy across repeated runs.
    pub std: f64,
    pub runs: Vec<f64>,
}

/// Cross-validates every layer, ordered by layer index.
pub fn layer_sweep(dumps: &[HiddenDump], config: &ProbeConfig) -> Result<Vec<LayerScore>, Error> {
    if dumps.is_empty() {
        return Err(Error::Config("no hidden-state dumps to probe".into()));
    }
    let mut layers: Vec<&HiddenDump> = dumps.iter().collect();
    layers.sort_by_key(|d| d.layer_index);
    if let Some(w) = layers
        .windows(2)
        .find(|w| w[0].layer_index == w[1].layer_index)
    {
        return Err(Error::Config(format!(
            "layer {} appears twice",
            w[0].layer_index
        )));
    }
    layers
        .into_iter()
        .map(|dump| {
            let (x, y) = dump_features(dump)?;
            let runs = (0..config.repeats)
                .map(|r| {
                    let cfg = ProbeConfig {
                        seed: config.seed.wrapping_add(r as u64),
                        ..*config
                    };
                    cross_validate_features(&x, &y, &cfg).map(|cv| cv.mean_accuracy)
                })
                .collect::<Result<Vec<f64>, Error>>()?;
            let mean = runs.iter().sum::<f64>() / runs.len() as f64;
            let var = runs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / runs.len() as f64;
            Ok(LayerScore {
                layer: dump.layer_index,
                mean,
                std: libm::sqrt(var),
                runs,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn constant_column_unchanged() {
        let rows = vec![vec![5.0, 1.0], vec![5.0, 3.0]];
        let (out, st) = standardize(&rows, &rows).unwrap();
        assert_eq!(out[0][0], 5.0);
        assert_eq!(out[1][0], 5.0);
        assert_eq!(st.std[0], 0.0);
    }

    #[test]
    fn four_point_hand_oracle() {
        // column 0: 1, 2, 3, 6 -> mean 3, population variance (4+1+0+9)/4 = 3.5
        let rows = vec![vec![1.0], vec![2.0], vec![3.0], vec![6.0]];
        let st = Standardizer::fit(&rows).unwrap();
        assert_eq!(st.mean, vec![3.0]);
        assert!((st.std[0] - libm::sqrt(3.5)).abs() < 1e-12);
        let z = st.apply(&[6.0]).unwrap();
        assert!((z[0] - 3.0 / libm::sqrt(3.5)).abs() < 1e-12);
    }

    #[test]
    fn standardized_is_near_identity() {
        let rows = vec![vec![-1.0, 1.0], vec![1.0, -1.0]];
        let (out, _) = standardize(&rows, &rows).unwrap();
        for (a, b) in out.iter().flatten().zip(rows.iter().flatten()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn standardize_errors() {
        assert!(Standardizer::fit(&[]).is_err());
        assert!(Standardizer::fit(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        let st = Standardizer::fit(&[vec![1.0]]).unwrap();
        assert!(st.apply(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![1.0], vec![2.0]];
        let y = vec![PositionLabel::Center; 2];
        assert!(train_linear_svm(&x, &y, &ProbeConfig::default()).is_err());
    }

    #[test]
    fn folds_of_27() {
        let labels: Vec<_> = PositionLabel::ALL.iter().flat_map(|l| [*l; 3]).collect();
        let a = stratified_folds(&labels, 3, 11);
        let mut sizes = [0; 3];
        for f in &a {
            sizes[*f] += 1;
        }
        assert_eq!(sizes, [9, 9, 9]);
        for l in PositionLabel::ALL {
            let mut per = [0; 3];
            for (i, f) in a.iter().enumerate() {
                if labels[i] == l {
                    per[*f] += 1;
                }
            }
            assert_eq!(per, [1, 1, 1]);
        }
    }

    #[test]
    fn insufficient_support() {
        let mut labels: Vec<_> = PositionLabel::ALL.iter().flat_map(|l| [*l; 3]).collect();
        labels.pop();
        let x: Vec<Vec<f64>> = labels.iter().map(|l| vec![l.index() as f64]).collect();
        assert!(cross_validate_features(&x, &labels, &ProbeConfig::default()).is_err());
    }

    #[test]
    fn separable_one_hot_is_perfect() {
        let mut rng = seed::stream("test", 0, "");
        let mut x = Vec::new();
        let mut y = Vec::new();
        for l in PositionLabel::ALL {
            for _ in 0..6 {
                let mut v = vec![0.0; 9];
                v[l.index()] = 1.0 + rng.gen_range(-0.01..0.01);
                x.push(v);
                y.push(l);
            }
        }
        let svm = train_linear_svm(&x, &y, &ProbeConfig::default()).unwrap();
        assert!(x.iter().zip(&y).all(|(r, l)| svm.predict(r) == *l));
    }

    #[test]
    fn sweep_rejects_empty_and_duplicates() {
        assert!(layer_sweep(&[], &ProbeConfig::default()).is_err());
        let d = HiddenDump {
            layer_index: 1,
            dim: 1,
            records: vec![],
        };
        assert!(layer_sweep(&[d.clone(), d], &ProbeConfig::default()).is_err());
    }
}
