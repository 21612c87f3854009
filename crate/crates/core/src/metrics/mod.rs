//! Trace similarity metrics.
//!
//! Every metric compares a candidate trace (from a generated UI) against a
//! reference trace and works on slices of [`Embedding`]s:
//!
//! | metric | family | orientation |
//! |--------|--------|-------------|
//! | [`dtw`] | alignment, cosine ground cost | lower is better |
//! | [`ebleu`] | soft k-gram overlap | higher is better |
//! | [`wmd`] | exact optimal transport, Euclidean ground cost | lower is better |

use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::trace::{dot, norm, Embedding};

pub mod dtw;
pub mod ebleu;
mod transport;
pub mod wmd;

pub use dtw::{cosine_distance, dtw, AlignmentPath, DtwResult};
pub use ebleu::{ebleu, soft_precision, EbleuConfig, EbleuResult};
pub use wmd::{wmd, wmd_bruteforce, TransportPlan, WmdResult};

/// Metric evaluation failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    /// One of the traces has no frames.
    #[error("trace is empty")]
    EmptyTrace,
    /// Frames of the two traces have different dimensions.
    #[error("dimension mismatch: candidate {candidate}, reference {reference}")]
    DimensionMismatch {
        /// Candidate dimension.
        candidate: usize,
        /// Reference dimension.
        reference: usize,
    },
    /// Cosine quantities are undefined for the zero vector.
    #[error("zero vector has no direction")]
    ZeroVector,
    /// DTW band fraction outside `(0, 1]`.
    #[error("band fraction {0} outside (0, 1]")]
    BandFraction(f64),
    /// Bad eBLEU configuration.
    #[error("invalid eBLEU configuration: {0}")]
    Config(&'static str),
    /// k-gram order longer than a trace.
    #[error("order {k} exceeds trace lengths ({candidate}, {reference})")]
    OrderTooLarge {
        /// Requested order.
        k: usize,
        /// Candidate length.
        candidate: usize,
        /// Reference length.
        reference: usize,
    },
    /// Brute-force oracle called outside its domain.
    #[error("brute force needs equal lengths of at most 4, got {candidate} and {reference}")]
    BruteForceDomain {
        /// Candidate length.
        candidate: usize,
        /// Reference length.
        reference: usize,
    },
    /// The transport solver did not reach an optimal plan.
    #[error("transport solver failed: {0}")]
    Solver(&'static str),
}

/// Which direction of a metric value is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Orientation {
    /// Distances.
    LowerBetter,
    /// Similarities.
    HigherBetter,
}

impl Orientation {
    /// Compares `a` against `b`; `Greater` means `a` is better.
    pub fn compare(self, a: f64, b: f64) -> Ordering {
        let ord = a.partial_cmp(&b).unwrap_or(Ordering::Equal);
        match self {
            Orientation::LowerBetter => ord.reverse(),
            Orientation::HigherBetter => ord,
        }
    }

    /// `true` when `a` is strictly better than `b`.
    pub fn is_better(self, a: f64, b: f64) -> bool {
        self.compare(a, b) == Ordering::Greater
    }
}

/// The three trace metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MetricKind {
    /// Banded dynamic time warping.
    Dtw,
    /// Embedding-space BLEU.
    Ebleu,
    /// Word Mover's Distance.
    Wmd,
}

impl MetricKind {
    /// All metrics in canonical order.
    pub const ALL: [MetricKind; 3] = [MetricKind::Dtw, MetricKind::Ebleu, MetricKind::Wmd];

    /// Better direction.
    pub fn orientation(self) -> Orientation {
        match self {
            MetricKind::Dtw | MetricKind::Wmd => Orientation::LowerBetter,
            MetricKind::Ebleu => Orientation::HigherBetter,
        }
    }

    /// Lowercase name.
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Dtw => "dtw",
            MetricKind::Ebleu => "ebleu",
            MetricKind::Wmd => "wmd",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dtw" => Ok(MetricKind::Dtw),
            "ebleu" => Ok(MetricKind::Ebleu),
            "wmd" => Ok(MetricKind::Wmd),
            _ => Err("unknown metric, expected dtw, ebleu or wmd"),
        }
    }
}

/// Checks that both traces are non-empty and share a dimension.
pub(crate) fn check_pair(candidate: &[Embedding], reference: &[Embedding]) -> Result<usize, MetricError> {
    let (Some(c), Some(r)) = (candidate.first(), reference.first()) else {
        return Err(MetricError::EmptyTrace);
    };
    let (cd, rd) = (c.dim(), r.dim());
    if cd != rd || candidate.iter().any(|e| e.dim() != cd) || reference.iter().any(|e| e.dim() != rd) {
        return Err(MetricError::DimensionMismatch {
            candidate: cd,
            reference: rd,
        });
    }
    Ok(rd)
}

/// Cosine similarity given precomputed norms; identical vectors give exactly 1.
pub(crate) fn cosine_similarity_with(a: &[f64], na: f64, b: &[f64], nb: f64) -> f64 {
    if a == b {
        return 1.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Norms of every frame, failing on a zero vector.
pub(crate) fn frame_norms(frames: &[Embedding]) -> Result<alloc::vec::Vec<f64>, MetricError> {
    frames
        .iter()
        .map(|e| {
            let n = norm(e.as_slice());
            if n == 0.0 {
                Err(MetricError::ZeroVector)
            } else {
                Ok(n)
            }
        })
        .collect()
}
