//! Traces, run bundles and corpora.
//!
//! A [`Trace`] is one agent run on one task: an ordered, non-empty list of
//! equally sized [`Embedding`]s. Runs of the same (site, task, source, model)
//! are grouped into a [`RunBundle`], and a [`TraceCorpus`] holds the bundles
//! after every invariant has been checked.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Default cap on frames per trace.
pub const DEFAULT_MAX_FRAMES: usize = 50;

/// Maximum number of runs per bundle; run indices are `0..MAX_RUNS`.
pub const MAX_RUNS: u32 = 3;

/// Norm deviation below which a vector is treated as already unit length.
const UNIT_TOLERANCE: f64 = 1e-12;

/// Errors raised while building or validating traces and corpora.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    /// An embedding with no components.
    #[error("embedding has dimension 0")]
    EmptyEmbedding,
    /// NaN or infinite component.
    #[error("embedding component {index} is not finite")]
    NonFinite {
        /// Offending component.
        index: usize,
    },
    /// Normalization of an all-zero vector.
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    /// A zero frame in a trace that must be normalized.
    #[error("trace `{trace_id}` frame {frame} is a zero vector")]
    ZeroFrame {
        /// Trace id.
        trace_id: String,
        /// Frame index.
        frame: usize,
    },
    /// Trace without frames.
    #[error("trace `{trace_id}` has no frames")]
    EmptyTrace {
        /// Trace id.
        trace_id: String,
    },
    /// Frame count above the configured cap.
    #[error("trace `{trace_id}` has {frames} frames, cap is {cap}")]
    TooManyFrames {
        /// Trace id.
        trace_id: String,
        /// Frames found.
        frames: usize,
        /// Configured cap.
        cap: usize,
    },
    /// A frame whose dimension differs from the trace or corpus dimension.
    #[error("trace `{trace_id}`: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        /// Trace id.
        trace_id: String,
        /// Expected dimension.
        expected: usize,
        /// Dimension found.
        found: usize,
    },
    /// Run index outside `0..MAX_RUNS`.
    #[error("trace `{trace_id}`: run index {run_index} out of range 0..{MAX_RUNS}")]
    RunIndexOutOfRange {
        /// Trace id.
        trace_id: String,
        /// Offending index.
        run_index: u32,
    },
    /// Generated trace without a model id, or reference trace with one.
    #[error("trace `{trace_id}`: {reason}")]
    BadModelId {
        /// Trace id.
        trace_id: String,
        /// What is wrong.
        reason: &'static str,
    },
    /// Two traces with the same id.
    #[error("duplicate trace id `{trace_id}`")]
    DuplicateTraceId {
        /// Trace id.
        trace_id: String,
    },
    /// Two runs of one bundle share a run index.
    #[error("trace `{trace_id}` repeats run index {run_index} of bundle {key}")]
    DuplicateRun {
        /// Trace id of the second occurrence.
        trace_id: String,
        /// Bundle key.
        key: BundleKey,
        /// Repeated run index.
        run_index: u32,
    },
    /// A generated bundle with no reference bundle for its (site, task).
    #[error("generated bundle {key} has no reference traces")]
    MissingReference {
        /// Key of the orphan bundle.
        key: BundleKey,
    },
    /// Embedding flagged normalized whose norm is not 1.
    #[error("trace `{trace_id}` frame {frame} has norm {norm}, expected 1")]
    NotNormalized {
        /// Trace id.
        trace_id: String,
        /// Frame index.
        frame: usize,
        /// Observed norm.
        norm: f64,
    },
    /// A corpus with no traces at all.
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// A fixed-length vector of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Wraps `values`, rejecting empty vectors and non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self, TraceError> {
        if values.is_empty() {
            return Err(TraceError::EmptyEmbedding);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(TraceError::NonFinite { index });
        }
        Ok(Self(values))
    }

    /// Dimension `D`.
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Components.
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Consumes the embedding.
    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// Scales to unit Euclidean norm.
    ///
    /// Vectors whose norm is already within `1e-12` of one are returned
    /// unchanged, which makes normalization exactly idempotent.
    pub fn normalized(&self) -> Result<Self, TraceError> {
        let n = self.norm();
        if n == 0.0 {
            return Err(TraceError::ZeroVector);
        }
        if (n - 1.0).abs() <= UNIT_TOLERANCE {
            return Ok(self.clone());
        }
        Ok(Self(self.0.iter().map(|v| v / n).collect()))
    }
}

impl AsRef<[f64]> for Embedding {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Whether a trace was recorded on the reference UI or a generated one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Source {
    /// Known-good UI.
    Reference,
    /// UI produced by a generator model.
    Generated,
}

impl Source {
    /// Wire name.
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Reference => "reference",
            Source::Generated => "generated",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Provenance of a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceMeta {
    /// Opaque unique id.
    pub trace_id: String,
    /// Site the task belongs to.
    pub site_id: String,
    /// Task performed.
    pub task_id: String,
    /// Reference or generated.
    pub source: Source,
    /// Generator model (or generated output) id; empty for reference traces.
    pub generator_model_id: String,
    /// Agent run index, `0..MAX_RUNS`.
    pub run_index: u32,
}

impl TraceMeta {
    /// Metadata for a reference run.
    pub fn reference(trace_id: &str, site_id: &str, task_id: &str, run_index: u32) -> Self {
        Self {
            trace_id: trace_id.into(),
            site_id: site_id.into(),
            task_id: task_id.into(),
            source: Source::Reference,
            generator_model_id: String::new(),
            run_index,
        }
    }

    /// Metadata for a generated run.
    pub fn generated(trace_id: &str, site_id: &str, task_id: &str, model_id: &str, run_index: u32) -> Self {
        Self {
            trace_id: trace_id.into(),
            site_id: site_id.into(),
            task_id: task_id.into(),
            source: Source::Generated,
            generator_model_id: model_id.into(),
            run_index,
        }
    }

    /// Key of the bundle this trace belongs to.
    pub fn bundle_key(&self) -> BundleKey {
        BundleKey {
            site_id: self.site_id.clone(),
            task_id: self.task_id.clone(),
            source: self.source,
            generator_model_id: self.generator_model_id.clone(),
        }
    }
}

/// An ordered sequence of screenshot embeddings from one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    meta: TraceMeta,
    frames: Vec<Embedding>,
}

impl Trace {
    /// Builds a trace, checking that it is non-empty and dimensionally uniform.
    pub fn new(meta: TraceMeta, frames: Vec<Embedding>) -> Result<Self, TraceError> {
        let Some(first) = frames.first() else {
            return Err(TraceError::EmptyTrace {
                trace_id: meta.trace_id,
            });
        };
        let dim = first.dim();
        if let Some(bad) = frames.iter().find(|f| f.dim() != dim) {
            return Err(TraceError::DimensionMismatch {
                trace_id: meta.trace_id.clone(),
                expected: dim,
                found: bad.dim(),
            });
        }
        if meta.run_index >= MAX_RUNS {
            return Err(TraceError::RunIndexOutOfRange {
                trace_id: meta.trace_id,
                run_index: meta.run_index,
            });
        }
        match (meta.source, meta.generator_model_id.is_empty()) {
            (Source::Generated, true) => {
                return Err(TraceError::BadModelId {
                    trace_id: meta.trace_id,
                    reason: "generated trace without generator_model_id",
                })
            }
            (Source::Reference, false) => {
                return Err(TraceError::BadModelId {
                    trace_id: meta.trace_id,
                    reason: "reference trace must have an empty generator_model_id",
                })
            }
            _ => {}
        }
        Ok(Self { meta, frames })
    }

    /// Convenience constructor from raw frame vectors.
    pub fn from_vectors(meta: TraceMeta, frames: Vec<Vec<f64>>) -> Result<Self, TraceError> {
        let frames = frames.into_iter().map(Embedding::new).collect::<Result<Vec<_>, _>>()?;
        Self::new(meta, frames)
    }

    /// Provenance.
    pub fn meta(&self) -> &TraceMeta {
        &self.meta
    }

    /// Frames in capture order.
    pub fn frames(&self) -> &[Embedding] {
        &self.frames
    }

    /// Number of frames `T`.
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Always false for a constructed trace; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Embedding dimension.
    pub fn dim(&self) -> usize {
        self.frames[0].dim()
    }

    /// Splits into metadata and frames.
    pub fn into_parts(self) -> (TraceMeta, Vec<Embedding>) {
        (self.meta, self.frames)
    }

    /// Returns a copy with every frame scaled to unit norm.
    pub fn normalize(&self) -> Result<Self, TraceError> {
        let frames = self
            .frames
            .iter()
            .map(Embedding::normalized)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            meta: self.meta.clone(),
            frames,
        })
    }
}

/// Free-function form of [`Trace::normalize`].
pub fn normalize(trace: &Trace) -> Result<Trace, TraceError> {
    trace.normalize()
}

/// Identifies a bundle: all runs of one source on one task.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BundleKey {
    /// Site id.
    pub site_id: String,
    /// Task id.
    pub task_id: String,
    /// Reference or generated.
    pub source: Source,
    /// Model id, empty for reference bundles.
    pub generator_model_id: String,
}

impl BundleKey {
    /// Key of the reference bundle for `(site, task)`.
    pub fn reference(site_id: &str, task_id: &str) -> Self {
        Self {
            site_id: site_id.into(),
            task_id: task_id.into(),
            source: Source::Reference,
            generator_model_id: String::new(),
        }
    }

    /// Key of a generated bundle.
    pub fn generated(site_id: &str, task_id: &str, model_id: &str) -> Self {
        Self {
            site_id: site_id.into(),
            task_id: task_id.into(),
            source: Source::Generated,
            generator_model_id: model_id.into(),
        }
    }
}

impl fmt::Display for BundleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}", self.site_id, self.task_id, self.source)?;
        if !self.generator_model_id.is_empty() {
            write!(f, ", {}", self.generator_model_id)?;
        }
        f.write_str(")")
    }
}

/// The one to three agent runs sharing a [`BundleKey`], sorted by run index.
#[derive(Debug, Clone, PartialEq)]
pub struct RunBundle {
    key: BundleKey,
    runs: Vec<Trace>,
}

impl RunBundle {
    /// Groups `runs`, which must share one key and have distinct run indices.
    pub fn new(mut runs: Vec<Trace>) -> Result<Self, TraceError> {
        let Some(first) = runs.first() else {
            return Err(TraceError::EmptyTrace {
                trace_id: String::from("<bundle>"),
            });
        };
        let key = first.meta.bundle_key();
        runs.sort_by_key(|t| t.meta.run_index);
        let mut seen = BTreeSet::new();
        for t in &runs {
            if t.meta.bundle_key() != key {
                return Err(TraceError::BadModelId {
                    trace_id: t.meta.trace_id.clone(),
                    reason: "run does not share the bundle key",
                });
            }
            if !seen.insert(t.meta.run_index) {
                return Err(TraceError::DuplicateRun {
                    trace_id: t.meta.trace_id.clone(),
                    key,
                    run_index: t.meta.run_index,
                });
            }
        }
        Ok(Self { key, runs })
    }

    /// Bundle key.
    pub fn key(&self) -> &BundleKey {
        &self.key
    }

    /// Runs sorted by run index.
    pub fn runs(&self) -> &[Trace] {
        &self.runs
    }
}

/// Validation settings for [`TraceCorpus::from_traces`].
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusOptions {
    /// Frame cap per trace.
    pub max_frames: usize,
    /// Re-normalize every frame to unit norm while loading.
    pub normalize: bool,
    /// Require every frame to already have unit norm (within `1e-6`).
    pub expect_normalized: bool,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self {
            max_frames: DEFAULT_MAX_FRAMES,
            normalize: false,
            expect_normalized: false,
        }
    }
}

/// A validated, immutable collection of run bundles sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceCorpus {
    dimension: usize,
    normalized: bool,
    bundles: BTreeMap<BundleKey, RunBundle>,
}

impl TraceCorpus {
    /// Validates `traces` and groups them into bundles.
    pub fn from_traces(traces: Vec<Trace>, options: &CorpusOptions) -> Result<Self, TraceError> {
        let dimension = traces.first().ok_or(TraceError::EmptyCorpus)?.dim();
        let mut ids = BTreeSet::new();
        let mut grouped: BTreeMap<BundleKey, Vec<Trace>> = BTreeMap::new();
        for trace in traces {
            let trace = check_trace(trace, dimension, options)?;
            if !ids.insert(trace.meta.trace_id.clone()) {
                return Err(TraceError::DuplicateTraceId {
                    trace_id: trace.meta.trace_id.clone(),
                });
            }
            grouped.entry(trace.meta.bundle_key()).or_default().push(trace);
        }

        let mut bundles = BTreeMap::new();
        for (key, runs) in grouped {
            bundles.insert(key, RunBundle::new(runs)?);
        }
        for key in bundles.keys() {
            if key.source == Source::Generated
                && !bundles.contains_key(&BundleKey::reference(&key.site_id, &key.task_id))
            {
                return Err(TraceError::MissingReference { key: key.clone() });
            }
        }
        Ok(Self {
            dimension,
            normalized: options.normalize || options.expect_normalized,
            bundles,
        })
    }

    /// Embedding dimension shared by every frame.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Whether frames are known to have unit norm.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// All bundles in key order.
    pub fn bundles(&self) -> impl Iterator<Item = &RunBundle> {
        self.bundles.values()
    }

    /// Looks up a bundle.
    pub fn bundle(&self, key: &BundleKey) -> Option<&RunBundle> {
        self.bundles.get(key)
    }

    /// Reference bundle of `(site, task)`.
    pub fn reference(&self, site_id: &str, task_id: &str) -> Option<&RunBundle> {
        self.bundles.get(&BundleKey::reference(site_id, task_id))
    }

    /// Generated bundle of `model` on `(site, task)`.
    pub fn generated(&self, site_id: &str, task_id: &str, model_id: &str) -> Option<&RunBundle> {
        self.bundles.get(&BundleKey::generated(site_id, task_id, model_id))
    }

    /// Sorted distinct site ids.
    pub fn sites(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.bundles.keys().map(|k| k.site_id.as_str()).collect();
        set.into_iter().collect()
    }

    /// Sorted task ids of `site` that have reference traces.
    pub fn tasks(&self, site_id: &str) -> Vec<&str> {
        self.bundles
            .keys()
            .filter(|k| k.site_id == site_id && k.source == Source::Reference)
            .map(|k| k.task_id.as_str())
            .collect()
    }

    /// Sorted model ids with at least one generated bundle on `site`.
    pub fn models_on_site(&self, site_id: &str) -> Vec<&str> {
        let set: BTreeSet<&str> = self
            .bundles
            .keys()
            .filter(|k| k.site_id == site_id && k.source == Source::Generated)
            .map(|k| k.generator_model_id.as_str())
            .collect();
        set.into_iter().collect()
    }

    /// All traces in bundle-key then run-index order.
    pub fn traces(&self) -> impl Iterator<Item = &Trace> {
        self.bundles.values().flat_map(|b| b.runs.iter())
    }

    /// Largest Euclidean distance between any two frames of the corpus.
    pub fn max_frame_distance(&self) -> f64 {
        let frames: Vec<&[f64]> = self
            .traces()
            .flat_map(|t| t.frames.iter().map(Embedding::as_slice))
            .collect();
        let mut max = 0.0f64;
        for (i, a) in frames.iter().enumerate() {
            for b in &frames[i + 1..] {
                max = max.max(euclidean(a, b));
            }
        }
        max
    }
}

fn check_trace(trace: Trace, dimension: usize, options: &CorpusOptions) -> Result<Trace, TraceError> {
    if trace.dim() != dimension {
        return Err(TraceError::DimensionMismatch {
            trace_id: trace.meta.trace_id,
            expected: dimension,
            found: trace.frames[0].dim(),
        });
    }
    if trace.len() > options.max_frames {
        return Err(TraceError::TooManyFrames {
            trace_id: trace.meta.trace_id.clone(),
            frames: trace.len(),
            cap: options.max_frames,
        });
    }
    if options.normalize {
        if let Some(frame) = trace.frames.iter().position(|e| e.norm() == 0.0) {
            return Err(TraceError::ZeroFrame {
                trace_id: trace.meta.trace_id,
                frame,
            });
        }
        return trace.normalize();
    }
    if options.expect_normalized {
        for (frame, e) in trace.frames.iter().enumerate() {
            let norm = e.norm();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(TraceError::NotNormalized {
                    trace_id: trace.meta.trace_id.clone(),
                    frame,
                    norm,
                });
            }
        }
    }
    Ok(trace)
}
