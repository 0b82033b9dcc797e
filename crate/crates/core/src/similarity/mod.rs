//! Cosine similarity, random-hyperplane LSH and neighbor retrieval.

mod lsh;
mod neighbors;

pub use lsh::LshIndex;
pub use neighbors::{NeighborIndex, NeighborStrategy};

use crate::error::{Error, Result};
use crate::types::ContextVector;

/// A cosine similarity value. Raw scores live in `[-1, 1]`, clamped ones in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn clamped(self) -> Self {
        Self(self.0.max(0.0))
    }
}

impl From<SimilarityScore> for f64 {
    fn from(s: SimilarityScore) -> f64 {
        s.0
    }
}

/// Cosine of the angle between `x` and `y`. Zero-norm inputs yield 0.
pub fn cosine(x: &ContextVector, y: &ContextVector) -> Result<SimilarityScore> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            actual: y.dim(),
        });
    }
    Ok(SimilarityScore(cosine_unchecked(x.values(), y.values())))
}

/// `max(0, cosine(x, y))`.
pub fn clamped_similarity(x: &ContextVector, y: &ContextVector) -> Result<SimilarityScore> {
    cosine(x, y).map(SimilarityScore::clamped)
}

#[inline]
pub(crate) fn cosine_unchecked(x: &[f64], y: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut xx = 0.0;
    let mut yy = 0.0;
    for (a, b) in x.iter().zip(y) {
        dot += a * b;
        xx += a * a;
        yy += b * b;
    }
    let mut denom = (xx * yy).sqrt();
    if !denom.is_finite() {
        denom = xx.sqrt() * yy.sqrt();
    }
    if denom == 0.0 {
        return 0.0;
    }
    (dot / denom).clamp(-1.0, 1.0)
}

#[inline]
pub(crate) fn clamped_unchecked(x: &[f64], y: &[f64]) -> f64 {
    cosine_unchecked(x, y).max(0.0)
}

/// Per-dimension median of the clickers' contexts, used as an ad's context.
///
/// Even counts take the midpoint of the two central values. No clickers gives
/// the zero vector of length `dim`.
pub fn ad_context_from_clicks(clickers: &[ContextVector], dim: usize) -> Result<ContextVector> {
    if clickers.is_empty() {
        return Ok(ContextVector::zeros(dim));
    }
    if let Some(bad) = clickers.iter().find(|c| c.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.dim(),
        });
    }
    let mut column = Vec::with_capacity(clickers.len());
    let mut out = Vec::with_capacity(dim);
    for d in 0..dim {
        column.clear();
        column.extend(clickers.iter().map(|c| c.values()[d]));
        column.sort_by(f64::total_cmp);
        let n = column.len();
        let m = if n % 2 == 1 {
            column[n / 2]
        } else {
            0.5 * (column[n / 2 - 1] + column[n / 2])
        };
        out.push(m);
    }
    ContextVector::new(out)
}
