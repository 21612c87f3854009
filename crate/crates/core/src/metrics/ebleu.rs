//! Embedding-space BLEU.
//!
//! The order-k soft precision is the mean, over candidate k-grams, of the best
//! similarity to any reference k-gram. Two k-grams are compared offset by
//! offset with clipped cosine similarity `max(0, cos)` and the offsets are
//! averaged. Orders longer than either trace are dropped and the remaining
//! weights renormalized; a length penalty applies once the lengths differ by
//! more than `length_tolerance` of the reference length.

use alloc::vec;
use alloc::vec::Vec;

use super::{check_pair, cosine_similarity_with, frame_norms, MetricError};
use crate::trace::Embedding;

/// eBLEU parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EbleuConfig {
    max_order: usize,
    weights: Vec<f64>,
    length_tolerance: f64,
}

impl EbleuConfig {
    /// Validates `weights` (one per order, non-negative, summing to 1).
    pub fn new(max_order: usize, weights: Vec<f64>, length_tolerance: f64) -> Result<Self, MetricError> {
        if max_order == 0 {
            return Err(MetricError::Config("max order must be at least 1"));
        }
        if weights.len() != max_order {
            return Err(MetricError::Config("need exactly one weight per order"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(MetricError::Config("weights must be finite and non-negative"));
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(MetricError::Config("weights must sum to 1"));
        }
        if !(length_tolerance.is_finite() && length_tolerance >= 0.0) {
            return Err(MetricError::Config("length tolerance must be non-negative"));
        }
        Ok(Self {
            max_order,
            weights,
            length_tolerance,
        })
    }

    /// Uniform weights `1/K` with the default length tolerance.
    pub fn uniform(max_order: usize) -> Result<Self, MetricError> {
        if max_order == 0 {
            return Err(MetricError::Config("max order must be at least 1"));
        }
        Self::new(max_order, vec![1.0 / max_order as f64; max_order], 0.5)
    }

    /// Replaces the length tolerance.
    pub fn with_length_tolerance(self, length_tolerance: f64) -> Result<Self, MetricError> {
        Self::new(self.max_order, self.weights, length_tolerance)
    }

    /// Highest k-gram order `K`.
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Order weights `w_1..w_K`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Relative length difference tolerated without penalty.
    pub fn length_tolerance(&self) -> f64 {
        self.length_tolerance
    }
}

impl Default for EbleuConfig {
    fn default() -> Self {
        Self {
            max_order: 4,
            weights: vec![0.25; 4],
            length_tolerance: 0.5,
        }
    }
}

/// Outcome of [`ebleu`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EbleuResult {
    /// Penalized geometric mean of the used precisions, in `[0, 1]`.
    pub score: f64,
    /// `P_1..P_K`; `None` for dropped orders.
    pub precisions: Vec<Option<f64>>,
    /// Length penalty in `(0, 1]`.
    pub penalty: f64,
    /// Orders that entered the score.
    pub orders_used: Vec<usize>,
}

/// Clipped cosine similarity of every (candidate, reference) frame pair, row-major.
fn clipped_similarities(candidate: &[Embedding], reference: &[Embedding]) -> Result<Vec<f64>, MetricError> {
    let cn = frame_norms(candidate)?;
    let rn = frame_norms(reference)?;
    let mut sims = Vec::with_capacity(candidate.len() * reference.len());
    for (x, nx) in candidate.iter().zip(&cn) {
        for (y, ny) in reference.iter().zip(&rn) {
            sims.push(cosine_similarity_with(x.as_slice(), *nx, y.as_slice(), *ny).max(0.0));
        }
    }
    Ok(sims)
}

fn precision_from(sims: &[f64], n: usize, m: usize, k: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..=n - k {
        let mut best = 0.0f64;
        for j in 0..=m - k {
            let s: f64 = (0..k).map(|t| sims[(i + t) * m + j + t]).sum::<f64>() / k as f64;
            best = best.max(s);
        }
        total += best;
    }
    total / (n - k + 1) as f64
}

/// Order-`k` soft precision of `candidate` against `reference`.
pub fn soft_precision(candidate: &[Embedding], reference: &[Embedding], k: usize) -> Result<f64, MetricError> {
    check_pair(candidate, reference)?;
    let (n, m) = (candidate.len(), reference.len());
    if k == 0 || k > n || k > m {
        return Err(MetricError::OrderTooLarge {
            k,
            candidate: n,
            reference: m,
        });
    }
    let sims = clipped_similarities(candidate, reference)?;
    Ok(precision_from(&sims, n, m, k))
}

/// Length penalty: 1 within tolerance, otherwise `exp(1 - L/S)`.
pub fn length_penalty(candidate_len: usize, reference_len: usize, tolerance: f64) -> f64 {
    let diff = candidate_len.abs_diff(reference_len) as f64;
    if diff <= tolerance * reference_len as f64 {
        return 1.0;
    }
    let long = candidate_len.max(reference_len) as f64;
    let short = candidate_len.min(reference_len) as f64;
    libm::exp(1.0 - long / short)
}

/// eBLEU score of `candidate` against `reference`; higher is better.
pub fn ebleu(
    candidate: &[Embedding],
    reference: &[Embedding],
    config: &EbleuConfig,
) -> Result<EbleuResult, MetricError> {
    check_pair(candidate, reference)?;
    let (n, m) = (candidate.len(), reference.len());
    let sims = clipped_similarities(candidate, reference)?;
    let usable = config.max_order.min(n).min(m);

    let mut precisions = vec![None; config.max_order];
    let mut orders_used = Vec::new();
    let mut weight_sum = 0.0;
    for k in 1..=usable {
        precisions[k - 1] = Some(precision_from(&sims, n, m, k));
        if config.weights[k - 1] > 0.0 {
            orders_used.push(k);
            weight_sum += config.weights[k - 1];
        }
    }
    if orders_used.is_empty() {
        return Err(MetricError::Config("every usable order has zero weight"));
    }

    let penalty = length_penalty(n, m, config.length_tolerance);
    let mut log_sum = 0.0;
    let mut zero = false;
    for &k in &orders_used {
        let p = precisions[k - 1].unwrap_or(0.0);
        if p <= 0.0 {
            zero = true;
            break;
        }
        log_sum += config.weights[k - 1] / weight_sum * libm::log(p);
    }
    let score = if zero {
        0.0
    } else {
        (penalty * libm::exp(log_sum)).min(1.0)
    };
    Ok(EbleuResult {
        score,
        precisions,
        penalty,
        orders_used,
    })
}
