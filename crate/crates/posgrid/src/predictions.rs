//! Prediction files: one JSON record per line, either
//! `{"sample_id", "raw_text"}` or
//! `{"sample_id", "image_emb": [...], "candidate_embs": [[...] × 9]}`.

use std::path::Path;

use posgrid_core::dataset::Dataset;
use posgrid_core::retrieval::build_retrieval_candidates;
use posgrid_core::score::{Prediction, PredictionBody};
use posgrid_core::{seed, PositionLabel};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PosgridError, Result};
use crate::fsutil;

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub sample_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_emb: Option<Vec<f32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_embs: Option<Vec<Vec<f32>>>,
}

impl PredictionRecord {
    fn into_prediction(self) -> std::result::Result<Prediction, String> {
        let body = match (self.raw_text, self.image_emb, self.candidate_embs) {
            (Some(text), None, None) => PredictionBody::Text(text),
            (None, Some(image), Some(candidates)) => {
                if candidates.len() != 9 {
                    return Err(format!(
                        "expected 9 candidate embeddings, got {}",
                        candidates.len()
                    ));
                }
                PredictionBody::Embeddings { image, candidates }
            }
            (Some(_), _, _) => return Err("record mixes raw_text with embeddings".into()),
            _ => return Err("record needs raw_text or both image_emb and candidate_embs".into()),
        };
        Ok(Prediction {
            sample_id: self.sample_id,
            body,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Text,
    Retrieval,
}

pub fn parse_predictions(text: &str, path: &Path, mode: Mode) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for (n, line) in text.split_inclusive('\n').enumerate() {
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            let rec: PredictionRecord =
                serde_json::from_str(trimmed).map_err(|e| PosgridError::Json {
                    path: path.to_path_buf(),
                    offset: offset + e.column().saturating_sub(1),
                    message: e.to_string(),
                })?;
            let p = rec
                .into_prediction()
                .map_err(|m| PosgridError::format(path, format!("line {}: {m}", n + 1)))?;
            let is_text = matches!(p.body, PredictionBody::Text(_));
            if is_text != (mode == Mode::Text) {
                let want = if mode == Mode::Text {
                    "text"
                } else {
                    "embedding"
                };
                return Err(PosgridError::format(
                    path,
                    format!("line {}: expected a {want} record", n + 1),
                ));
            }
            out.push(p);
        }
        offset += line.len();
    }
    Ok(out)
}

pub fn read_predictions(path: &Path, mode: Mode) -> Result<Vec<Prediction>> {
    let text = fsutil::read_to_string(path)?;
    parse_predictions(&text, path, mode)
}

pub fn write_records(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| PosgridError::Input(e.to_string()))?);
        out.push('\n');
    }
    fsutil::write_atomic(path, out.as_bytes())
}

/// Reference predictors used to exercise the scorer without a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stub {
    /// Echoes the gold label as a sentence.
    Gold,
    /// Always answers the same label.
    Constant(PositionLabel),
    /// Uniformly random label per sample.
    Random,
    /// Embeddings whose nearest candidate is the gold option.
    RetrievalGold,
}

pub fn stub_predictions(d: &Dataset, stub: Stub, seed: u64) -> Vec<PredictionRecord> {
    d.samples
        .iter()
        .map(|s| {
            let text = |t: String| PredictionRecord {
                sample_id: s.id.clone(),
                raw_text: Some(t),
                ..Default::default()
            };
            match stub {
                Stub::Gold => text(format!(
                    "The {} is in the {}.",
                    s.question
                        .trim_start_matches("Where is the ")
                        .trim_end_matches('?'),
                    s.gold
                )),
                Stub::Constant(l) => text(l.as_str().to_string()),
                Stub::Random => {
                    let i = seed::stream("stub-random", seed, &s.id).gen_range(0..9);
                    text(PositionLabel::ALL[i].as_str().to_string())
                }
                Stub::RetrievalGold => {
                    let candidates: Vec<Vec<f32>> = build_retrieval_candidates(s)
                        .iter()
                        .enumerate()
                        .map(|(i, _)| {
                            let mut v = vec![0.05; 10];
                            v[i] = 1.0;
                            v
                        })
                        .collect();
                    PredictionRecord {
                        sample_id: s.id.clone(),
                        image_emb: Some(
                            candidates[s.gold_index()].iter().map(|v| v * 2.0).collect(),
                        ),
                        candidate_embs: Some(candidates),
                        ..Default::default()
                    }
                }
            }
        })
        .collect()
}
