//! Reference-based evaluation of generated user interfaces.
//!
//! An interaction trace is the ordered list of screenshot embeddings captured
//! while an agent completes one task on a UI. This crate compares traces of a
//! generated UI against traces of a known-good reference UI and turns those
//! comparisons into model rankings:
//!
//! - [`trace`]: embeddings, traces, run bundles and validated corpora.
//! - [`featurize`]: the embedder interface and a deterministic toy embedder.
//! - [`metrics`]: banded DTW, embedding-space BLEU and exact optimal transport (WMD).
//! - [`scoring`]: best-of-pairings task scores, site means, binary labels, medians.
//! - [`ranking`]: Bradley-Terry maximum likelihood fits reported on the Elo scale.
//! - [`stats`]: Spearman's rho, Cohen's kappa and raw agreement against ground truth.
//! - [`rng`]: the portable xorshift generator used for reproducible fixtures.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and the
//! arena HTTP service live in the `uitrace` companion crate.
#![no_std]
#![forbid(unsafe_code)]
#![warn(missing_docs)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod featurize;
mod linalg;
pub mod metrics;
pub mod ranking;
pub mod rng;
pub mod scoring;
pub mod stats;
pub mod trace;

pub use featurize::{embed_trace, toy_embed, Embedder, EmbedderSpec, GrayImage, ToyEmbedder};
pub use metrics::{MetricError, MetricKind, Orientation};
pub use ranking::{fit_leaderboard, ComparisonRecord, FitConfig, Leaderboard, Rater, Verdict};
pub use trace::{BundleKey, CorpusOptions, Embedding, RunBundle, Source, Trace, TraceCorpus, TraceMeta};
