//! Scoring of model predictions against a dataset: overall, per-label, per
//! cell and per region accuracy plus majority-vote maps.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::answer::parse_answer;
use crate::dataset::Dataset;
use crate::error::Error;
use crate::geometry::PositionLabel;
use crate::retrieval::retrieval_select;

#[derive(Clone, Debug, PartialEq)]
pub enum PredictionBody {
    Text(String),
    Embeddings {
        image: Vec<f32>,
        candidates: Vec<Vec<f32>>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub sample_id: String,
    pub body: PredictionBody,
}

impl Prediction {
    pub fn text(sample_id: impl Into<String>, raw: impl Into<String>) -> Prediction {
        Prediction {
            sample_id: sample_id.into(),
            body: PredictionBody::Text(raw.into()),
        }
    }
}

/// What a single sample's prediction resolved to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Outcome {
    /// `None` for invalid or missing predictions.
    pub predicted: Option<PositionLabel>,
    pub correct: bool,
    pub missing: bool,
}

/// Resolves each dataset sample to an outcome, in dataset order.
pub fn outcomes(d: &Dataset, preds: &[Prediction]) -> Result<Vec<Outcome>, Error> {
    let index: BTreeMap<&str, usize> = d
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    let mut assigned: Vec<Option<&Prediction>> = alloc::vec![None; d.samples.len()];
    for p in preds {
        let i = *index
            .get(p.sample_id.as_str())
            .ok_or_else(|| Error::UnknownSample(p.sample_id.clone()))?;
        if assigned[i].replace(p).is_some() {
            return Err(Error::DuplicateSample(p.sample_id.clone()));
        }
    }
    d.samples
        .iter()
        .zip(assigned)
        .map(|(s, p)| {
            let predicted = match p.map(|p| &p.body) {
                None => None,
                Some(PredictionBody::Text(raw)) => parse_answer(raw).label,
                Some(PredictionBody::Embeddings { image, candidates }) => {
                    Some(s.options[retrieval_select(image, candidates)?])
                }
            };
            Ok(Outcome {
                predicted,
                correct: predicted == Some(s.gold),
                missing: p.is_none(),
            })
        })
        .collect()
}

/// Winner of a majority vote.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Vote {
    Label(PositionLabel),
    Invalid,
    NoData,
}

impl Vote {
    pub fn as_str(&self) -> &'static str {
        match self {
            Vote::Label(l) => l.as_str(),
            Vote::Invalid => "invalid",
            Vote::NoData => "no-data",
        }
    }
}

impl fmt::Display for Vote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<Vote> for String {
    fn from(v: Vote) -> String {
        v.as_str().to_string()
    }
}

impl TryFrom<String> for Vote {
    type Error = Error;

    fn try_from(s: String) -> Result<Vote, Error> {
        s.parse()
    }
}

impl FromStr for Vote {
    type Err = Error;

    fn from_str(s: &str) -> Result<Vote, Error> {
        match s {
            "invalid" => Ok(Vote::Invalid),
            "no-data" => Ok(Vote::NoData),
            _ => s.parse().map(Vote::Label),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityEntry {
    pub winner: Vote,
    pub votes: usize,
    pub support: usize,
}

/// Vote counts for nine labels plus an invalid bucket (index 9).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Ballot([usize; 10]);

impl Ballot {
    fn add(&mut self, predicted: Option<PositionLabel>) {
        self.0[predicted.map_or(9, PositionLabel::index)] += 1;
    }

    fn merge(&mut self, other: &Ballot) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }

    fn winner(&self) -> MajorityEntry {
        let support = self.0.iter().sum();
        if support == 0 {
            return MajorityEntry {
                winner: Vote::NoData,
                votes: 0,
                support,
            };
        }
        // strict comparison in canonical order; the invalid bucket comes last
        let mut best = 0;
        for i in 1..10 {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        MajorityEntry {
            winner: PositionLabel::from_index(best).map_or(Vote::Invalid, Vote::Label),
            votes: self.0[best],
            support,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyEntry {
    /// `None` when there is no support.
    pub accuracy: Option<f64>,
    pub correct: usize,
    pub support: usize,
}

impl AccuracyEntry {
    fn add(&mut self, correct: bool) {
        self.support += 1;
        self.correct += usize::from(correct);
    }

    fn merge(&mut self, other: &AccuracyEntry) {
        self.support += other.support;
        self.correct += other.correct;
    }

    fn finish(mut self) -> AccuracyEntry {
        self.accuracy = (self.support > 0).then(|| self.correct as f64 / self.support as f64);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelAccuracy {
    pub label: PositionLabel,
    #[serde(flatten)]
    pub entry: AccuracyEntry,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub correct: usize,
    pub valid: usize,
    pub missing: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub n: Counts,
    /// Correct over all samples; invalid and missing predictions count as wrong.
    pub overall_accuracy: f64,
    pub valid_rate: f64,
    /// Accuracy grouped by gold label, canonical order.
    pub per_label_accuracy: Vec<LabelAccuracy>,
    /// 9×9, row-major by target cell.
    pub cell_accuracy: Vec<Vec<AccuracyEntry>>,
    /// 3×3, row-major by target region.
    pub region_accuracy: Vec<Vec<AccuracyEntry>>,
    pub cell_majority: Vec<Vec<MajorityEntry>>,
    pub region_majority: Vec<Vec<MajorityEntry>>,
}

fn grid<T: Clone>(cells: &[T], side: usize) -> Vec<Vec<T>> {
    cells.chunks(side).map(<[T]>::to_vec).collect()
}

fn ballots(d: &Dataset, outs: &[Outcome]) -> ([Ballot; 81], [Ballot; 9]) {
    let mut cells = [Ballot::default(); 81];
    for (s, o) in d.samples.iter().zip(outs) {
        cells[s.target_cell.index()].add(o.predicted);
    }
    let mut regions = [Ballot::default(); 9];
    for (i, b) in cells.iter().enumerate() {
        let region = crate::geometry::Cell::from_index(i).unwrap().region();
        regions[region.index()].merge(b);
    }
    (cells, regions)
}

/// Row-major grid of majority entries.
pub type MajorityMap = Vec<Vec<MajorityEntry>>;

/// Modal predicted label per cell and per region. Regions aggregate the
/// samples of their nine cells. Ties go to the earlier label in canonical
/// order and the invalid bucket loses every tie.
pub fn majority_vote_maps(
    d: &Dataset,
    preds: &[Prediction],
) -> Result<(MajorityMap, MajorityMap), Error> {
    let outs = outcomes(d, preds)?;
    let (cells, regions) = ballots(d, &outs);
    Ok((
        grid(&cells.map(|b| b.winner()), 9),
        grid(&regions.map(|b| b.winner()), 3),
    ))
}

/// Builds the full report from resolved outcomes.
pub fn report_from_outcomes(d: &Dataset, outs: &[Outcome]) -> EvalReport {
    let mut n = Counts::default();
    let mut per_label = [AccuracyEntry::default(); 9];
    let mut cells = [AccuracyEntry::default(); 81];
    for (s, o) in d.samples.iter().zip(outs) {
        n.total += 1;
        n.correct += usize::from(o.correct);
        n.valid += usize::from(o.predicted.is_some());
        n.missing += usize::from(o.missing);
        per_label[s.gold.index()].add(o.correct);
        cells[s.target_cell.index()].add(o.correct);
    }
    let mut regions = [AccuracyEntry::default(); 9];
    for (i, c) in cells.iter().enumerate() {
        let region = crate::geometry::Cell::from_index(i).unwrap().region();
        regions[region.index()].merge(c);
    }
    let (cell_votes, region_votes) = ballots(d, outs);
    let frac = |a: usize| {
        if n.total == 0 {
            0.0
        } else {
            a as f64 / n.total as f64
        }
    };
    EvalReport {
        dataset: d.name.clone(),
        overall_accuracy: frac(n.correct),
        valid_rate: frac(n.valid),
        per_label_accuracy: PositionLabel::ALL
            .iter()
            .zip(per_label)
            .map(|(label, e)| LabelAccuracy {
                label: *label,
                entry: e.finish(),
            })
            .collect(),
        cell_accuracy: grid(&cells.map(AccuracyEntry::finish), 9),
        region_accuracy: grid(&regions.map(AccuracyEntry::finish), 3),
        cell_majority: grid(&cell_votes.map(|b| b.winner()), 9),
        region_majority: grid(&region_votes.map(|b| b.winner()), 3),
        n,
    }
}

/// Scores predictions against a dataset. Samples without a prediction count
/// as invalid; a prediction for an unknown sample is an error.
pub fn score(d: &Dataset, preds: &[Prediction]) -> Result<EvalReport, Error> {
    let outs = outcomes(d, preds)?;
    Ok(report_from_outcomes(d, &outs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::build_eval_set;
    use alloc::vec;

    fn small() -> Dataset {
        let d = build_eval_set(0);
        // two samples per cell
        let mut seen = [0; 81];
        let samples = d
            .samples
            .into_iter()
            .filter(|s| {
                seen[s.target_cell.index()] += 1;
                seen[s.target_cell.index()] <= 2
            })
            .collect();
        Dataset::new("small", 0, samples)
    }

    #[test]
    fn gold_echo_is_perfect() {
        let d = small();
        let preds: Vec<_> = d
            .samples
            .iter()
            .map(|s| Prediction::text(s.id.clone(), s.gold.as_str()))
            .collect();
        let r = score(&d, &preds).unwrap();
        assert_eq!(r.overall_accuracy, 1.0);
        assert_eq!(r.valid_rate, 1.0);
        assert_eq!(r.n.missing, 0);
    }

    #[test]
    fn missing_predictions_count_invalid() {
        let d = small();
        let r = score(&d, &[]).unwrap();
        assert_eq!(r.overall_accuracy, 0.0);
        assert_eq!(r.n.missing, d.len());
        assert!(r
            .cell_majority
            .iter()
            .flatten()
            .all(|e| e.winner == Vote::Invalid));
    }

    #[test]
    fn unknown_and_duplicate_ids() {
        let d = small();
        assert_eq!(
            score(&d, &[Prediction::text("nope", "center")]),
            Err(Error::UnknownSample("nope".into()))
        );
        let id = d.samples[0].id.clone();
        assert!(matches!(
            score(
                &d,
                &[
                    Prediction::text(id.clone(), "center"),
                    Prediction::text(id, "center")
                ]
            ),
            Err(Error::DuplicateSample(_))
        ));
    }

    #[test]
    fn tie_goes_to_canonical_order() {
        let mut b = Ballot::default();
        b.add(Some(PositionLabel::BottomRight));
        b.add(Some(PositionLabel::TopCenter));
        assert_eq!(b.winner().winner, Vote::Label(PositionLabel::TopCenter));
        let mut b = Ballot::default();
        b.add(None);
        b.add(Some(PositionLabel::BottomRight));
        assert_eq!(b.winner().winner, Vote::Label(PositionLabel::BottomRight));
        b.add(None);
        assert_eq!(b.winner().winner, Vote::Invalid);
        assert_eq!(Ballot::default().winner().winner, Vote::NoData);
    }

    #[test]
    fn retrieval_predictions() {
        let d = small();
        let s = &d.samples[0];
        let gold_slot = s.gold_index();
        let candidates: Vec<Vec<f32>> = (0..9)
            .map(|i| {
                let mut v = vec![0.1f32; 9];
                v[i] = 1.0;
                v
            })
            .collect();
        let p = Prediction {
            sample_id: s.id.clone(),
            body: PredictionBody::Embeddings {
                image: candidates[gold_slot].clone(),
                candidates,
            },
        };
        let r = score(&d, &[p]).unwrap();
        assert_eq!(r.n.correct, 1);
        assert_eq!(r.n.valid, 1);
    }

    #[test]
    fn vote_strings_round_trip() {
        for v in [
            Vote::Invalid,
            Vote::NoData,
            Vote::Label(PositionLabel::Center),
        ] {
            assert_eq!(v.as_str().parse::<Vote>().unwrap(), v);
        }
    }
}
