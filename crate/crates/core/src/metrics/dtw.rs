//! Banded dynamic time warping over cosine distance.
//!
//! The band is the Sakoe-Chiba constraint `|i - j| <= w` on raw indices with
//! `w = max(1, ceil(band_fraction * m))`, `m` being the reference length. When
//! `|n - m| > w` no in-band path exists; the pair is then reported infeasible
//! with distance `m`. The metric is therefore not symmetric.

use alloc::vec;
use alloc::vec::Vec;

use super::{check_pair, cosine_similarity_with, frame_norms, MetricError};
use crate::trace::{norm, Embedding};

/// Band fraction used when none is configured.
pub const DEFAULT_BAND_FRACTION: f64 = 0.10;

/// Cosine distance `1 - cos(a, b)`, in `[0, 2]`.
pub fn cosine_distance(a: &Embedding, b: &Embedding) -> Result<f64, MetricError> {
    if a.dim() != b.dim() {
        return Err(MetricError::DimensionMismatch {
            candidate: a.dim(),
            reference: b.dim(),
        });
    }
    let (na, nb) = (norm(a.as_slice()), norm(b.as_slice()));
    if na == 0.0 || nb == 0.0 {
        return Err(MetricError::ZeroVector);
    }
    Ok(1.0 - cosine_similarity_with(a.as_slice(), na, b.as_slice(), nb))
}

/// Zero-based `(candidate, reference)` index pairs of a warping path.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct AlignmentPath(Vec<(usize, usize)>);

impl AlignmentPath {
    /// Steps from `(0, 0)` to `(n - 1, m - 1)`.
    pub fn steps(&self) -> &[(usize, usize)] {
        &self.0
    }

    /// Number of matched pairs.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Never true for a path produced by [`dtw`].
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Outcome of [`dtw`].
#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult {
    /// Sum of cosine distances along the optimal path, or `m` when infeasible.
    pub distance: f64,
    /// Optimal path, absent when infeasible.
    pub path: Option<AlignmentPath>,
    /// No monotone path fits in the band.
    pub infeasible: bool,
}

/// Band half-width `max(1, ceil(band_fraction * m))`.
///
/// The product is rounded down by `1e-9` before the ceiling so that, for
/// example, `0.1 * 30` (which is `3.0000000000000004` in binary) gives 3.
pub fn band_width(reference_len: usize, band_fraction: f64) -> usize {
    let raw = libm::ceil(band_fraction * reference_len as f64 - 1e-9);
    (raw.max(1.0)) as usize
}

/// Minimum-cost monotone alignment of `candidate` onto `reference`.
///
/// Ties between equal-cost predecessors are broken diagonal first, then the
/// step that advanced the reference, then the step that advanced the
/// candidate. Only the reported path depends on this order.
pub fn dtw(candidate: &[Embedding], reference: &[Embedding], band_fraction: f64) -> Result<DtwResult, MetricError> {
    check_pair(candidate, reference)?;
    if !(band_fraction > 0.0 && band_fraction <= 1.0) {
        return Err(MetricError::BandFraction(band_fraction));
    }
    let cn = frame_norms(candidate)?;
    let rn = frame_norms(reference)?;
    let (n, m) = (candidate.len(), reference.len());
    let w = band_width(m, band_fraction);
    if n.abs_diff(m) > w {
        return Ok(DtwResult {
            distance: m as f64,
            path: None,
            infeasible: true,
        });
    }

    let in_band = |i: usize, j: usize| i.abs_diff(j) <= w;
    let idx = |i: usize, j: usize| i * m + j;
    let mut acc = vec![f64::INFINITY; n * m];
    for i in 0..n {
        let lo = i.saturating_sub(w);
        let hi = (i + w + 1).min(m);
        for j in lo..hi {
            let cost = 1.0 - cosine_similarity_with(candidate[i].as_slice(), cn[i], reference[j].as_slice(), rn[j]);
            let best_prev = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 && j > 0 {
                    best = best.min(acc[idx(i - 1, j - 1)]);
                }
                if j > 0 && in_band(i, j - 1) {
                    best = best.min(acc[idx(i, j - 1)]);
                }
                if i > 0 && in_band(i - 1, j) {
                    best = best.min(acc[idx(i - 1, j)]);
                }
                best
            };
            acc[idx(i, j)] = best_prev + cost;
        }
    }

    let mut steps = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while (i, j) != (0, 0) {
        let diag = if i > 0 && j > 0 {
            acc[idx(i - 1, j - 1)]
        } else {
            f64::INFINITY
        };
        let down = if j > 0 { acc[idx(i, j - 1)] } else { f64::INFINITY };
        let right = if i > 0 { acc[idx(i - 1, j)] } else { f64::INFINITY };
        (i, j) = if diag <= down && diag <= right {
            (i - 1, j - 1)
        } else if down <= right {
            (i, j - 1)
        } else {
            (i - 1, j)
        };
        steps.push((i, j));
    }
    steps.reverse();

    Ok(DtwResult {
        distance: acc[idx(n - 1, m - 1)],
        path: Some(AlignmentPath(steps)),
        infeasible: false,
    })
}
