//! Dual-encoder scoring: the task becomes image-to-text retrieval over nine
//! candidate sentences, one per option.

use alloc::format;
use alloc::string::String;

use crate::dataset::VqaSample;
use crate::error::Error;

/// `"<question> <label>"` for each option, in option order.
pub fn build_retrieval_candidates(sample: &VqaSample) -> [String; 9] {
    sample
        .options
        .map(|label| format!("{} {}", sample.question, label.as_str()))
}

fn norm(v: &[f32]) -> f64 {
    libm::sqrt(v.iter().map(|x| f64::from(*x) * f64::from(*x)).sum())
}

pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64, Error> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 || !na.is_finite() || !nb.is_finite() {
        return Err(Error::ZeroNorm);
    }
    let dot: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| f64::from(*x) * f64::from(*y))
        .sum();
    Ok(dot / (na * nb))
}

/// Index of the candidate with the highest cosine similarity to the image;
/// ties go to the lowest index.
pub fn retrieval_select<C: AsRef<[f32]>>(image: &[f32], candidates: &[C]) -> Result<usize, Error> {
    if candidates.len() != 9 {
        return Err(Error::DimensionMismatch {
            expected: 9,
            got: candidates.len(),
        });
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, c) in candidates.iter().enumerate() {
        let sim = cosine(image, c.as_ref())?;
        if sim > best.1 {
            best = (i, sim);
        }
    }
    Ok(best.0)
}
