//! From per-run metric values to task, site and model scores.
//!
//! A task score is the best value over every (candidate run, reference run)
//! pairing, so run-to-run agent variance does not penalize a model. A site
//! score is the mean task score over all reference tasks of the site; tasks a
//! model has no traces for are imputed with a worst-case value.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::metrics::{dtw, ebleu, wmd, EbleuConfig, MetricError, MetricKind, Orientation};
use crate::ranking::{competition_ranks, Verdict};
use crate::trace::{BundleKey, Embedding, RunBundle, Source, TraceCorpus};

/// Scoring failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    /// A bundle without runs.
    #[error("bundle {0} has no runs")]
    EmptyBundle(Box<BundleKey>),
    /// Candidate and reference bundles are for different tasks.
    #[error("bundles {candidate} and {reference} are for different tasks")]
    TaskMismatch {
        /// Candidate key.
        candidate: Box<BundleKey>,
        /// Reference key.
        reference: Box<BundleKey>,
    },
    /// Metric failure on one pairing.
    #[error("{metric} on candidate run {candidate_run} vs reference run {reference_run} of {key}: {source}")]
    Metric {
        /// Metric evaluated.
        metric: MetricKind,
        /// Candidate bundle.
        key: Box<BundleKey>,
        /// Candidate run index.
        candidate_run: u32,
        /// Reference run index.
        reference_run: u32,
        /// Underlying error.
        source: MetricError,
    },
    /// Model has no generated traces on any task of the site.
    #[error("model `{model}` has no traces on site `{site}`")]
    NoOverlap {
        /// Site id.
        site: String,
        /// Model id.
        model: String,
    },
    /// Site or task without reference traces.
    #[error("no reference traces for site `{site}` task `{task}`")]
    NoReference {
        /// Site id.
        site: String,
        /// Task id.
        task: String,
    },
    /// Two scores of different metrics or sites were compared.
    #[error("cannot compare scores: {0}")]
    Incomparable(&'static str),
    /// Median of nothing.
    #[error("no values to aggregate")]
    Empty,
    /// Task scores from several sites, models or metrics passed to one aggregate.
    #[error("task scores do not belong to one (site, model, metric)")]
    MixedTasks,
}

/// Metric parameters shared by every evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricParams {
    /// DTW band fraction.
    pub band_fraction: f64,
    /// eBLEU orders, weights and length tolerance.
    pub ebleu: EbleuConfig,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            band_fraction: dtw::DEFAULT_BAND_FRACTION,
            ebleu: EbleuConfig::default(),
        }
    }
}

/// Evaluates one metric on one (candidate, reference) trace pair.
pub fn evaluate(
    metric: MetricKind,
    params: &MetricParams,
    candidate: &[Embedding],
    reference: &[Embedding],
) -> Result<f64, MetricError> {
    match metric {
        MetricKind::Dtw => Ok(dtw::dtw(candidate, reference, params.band_fraction)?.distance),
        MetricKind::Ebleu => Ok(ebleu::ebleu(candidate, reference, &params.ebleu)?.score),
        MetricKind::Wmd => Ok(wmd::wmd(candidate, reference)?.distance),
    }
}

/// Run indices of the winning pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunPairing {
    /// Candidate run index.
    pub candidate_run: u32,
    /// Reference run index.
    pub reference_run: u32,
}

/// Best-of-pairings score of one model on one task.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskScore {
    /// Site id.
    pub site_id: String,
    /// Task id.
    pub task_id: String,
    /// Generator model (output) id.
    pub generator_model_id: String,
    /// Metric.
    pub metric: MetricKind,
    /// Best value per the metric's orientation.
    pub value: f64,
    /// Winning pairing; absent when imputed.
    pub pairing: Option<RunPairing>,
    /// Whether `value` is a worst-case stand-in for missing traces.
    pub imputed: bool,
}

/// Mean task score of one model on one site.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SiteScore {
    /// Site id.
    pub site_id: String,
    /// Generator model (output) id.
    pub generator_model_id: String,
    /// Metric.
    pub metric: MetricKind,
    /// Arithmetic mean of the task values.
    pub value: f64,
    /// Tasks averaged.
    pub task_count: usize,
    /// Of which imputed.
    pub imputed_tasks: usize,
}

/// Evaluates every run pairing and keeps the best.
///
/// Equal values keep the lowest `(candidate_run, reference_run)` pair.
pub fn best_pairing(
    candidate: &RunBundle,
    reference: &RunBundle,
    metric: MetricKind,
    params: &MetricParams,
) -> Result<TaskScore, ScoringError> {
    let (ck, rk) = (candidate.key(), reference.key());
    if ck.site_id != rk.site_id || ck.task_id != rk.task_id || rk.source != Source::Reference {
        return Err(ScoringError::TaskMismatch {
            candidate: Box::new(ck.clone()),
            reference: Box::new(rk.clone()),
        });
    }
    if candidate.runs().is_empty() {
        return Err(ScoringError::EmptyBundle(Box::new(ck.clone())));
    }
    if reference.runs().is_empty() {
        return Err(ScoringError::EmptyBundle(Box::new(rk.clone())));
    }
    let orientation = metric.orientation();
    let mut best: Option<(f64, RunPairing)> = None;
    for c in candidate.runs() {
        for r in reference.runs() {
            let pairing = RunPairing {
                candidate_run: c.meta().run_index,
                reference_run: r.meta().run_index,
            };
            let value = evaluate(metric, params, c.frames(), r.frames()).map_err(|source| ScoringError::Metric {
                metric,
                key: Box::new(ck.clone()),
                candidate_run: pairing.candidate_run,
                reference_run: pairing.reference_run,
                source,
            })?;
            if best.is_none_or(|(b, _)| orientation.is_better(value, b)) {
                best = Some((value, pairing));
            }
        }
    }
    let (value, pairing) = best.expect("bundles are non-empty");
    Ok(TaskScore {
        site_id: ck.site_id.clone(),
        task_id: ck.task_id.clone(),
        generator_model_id: ck.generator_model_id.clone(),
        metric,
        value,
        pairing: Some(pairing),
        imputed: false,
    })
}

/// Worst-case values for tasks without generated traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Imputation {
    /// WMD stand-in; `None` means the corpus-wide maximum frame distance.
    pub wmd_cap: Option<f64>,
    /// eBLEU stand-in.
    pub ebleu_floor: f64,
}

impl Default for Imputation {
    fn default() -> Self {
        Self {
            wmd_cap: None,
            ebleu_floor: 0.0,
        }
    }
}

/// Everything [`site_score`] needs besides the corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringConfig {
    /// Metric parameters.
    pub params: MetricParams,
    /// Resolved WMD stand-in.
    pub wmd_cap: f64,
    /// eBLEU stand-in.
    pub ebleu_floor: f64,
}

impl ScoringConfig {
    /// Resolves the imputation defaults against `corpus`.
    pub fn for_corpus(corpus: &TraceCorpus, params: MetricParams, imputation: Imputation) -> Self {
        let wmd_cap = imputation.wmd_cap.unwrap_or_else(|| corpus.max_frame_distance());
        Self {
            params,
            wmd_cap,
            ebleu_floor: imputation.ebleu_floor,
        }
    }
}

/// Worst-case score for a task the model has no traces for.
///
/// DTW uses the longest reference run length (the infeasibility value),
/// eBLEU the configured floor and WMD the configured cap.
pub fn impute_task(
    corpus: &TraceCorpus,
    site_id: &str,
    task_id: &str,
    model_id: &str,
    metric: MetricKind,
    config: &ScoringConfig,
) -> Result<TaskScore, ScoringError> {
    let reference = corpus
        .reference(site_id, task_id)
        .ok_or_else(|| ScoringError::NoReference {
            site: site_id.into(),
            task: task_id.into(),
        })?;
    let value = match metric {
        MetricKind::Dtw => reference.runs().iter().map(|t| t.len()).max().unwrap_or(0) as f64,
        MetricKind::Ebleu => config.ebleu_floor,
        MetricKind::Wmd => config.wmd_cap,
    };
    Ok(TaskScore {
        site_id: site_id.into(),
        task_id: task_id.into(),
        generator_model_id: model_id.into(),
        metric,
        value,
        pairing: None,
        imputed: true,
    })
}

/// Scores one task: best pairing when traces exist, imputed otherwise.
pub fn task_score(
    corpus: &TraceCorpus,
    site_id: &str,
    task_id: &str,
    model_id: &str,
    metric: MetricKind,
    config: &ScoringConfig,
) -> Result<TaskScore, ScoringError> {
    let reference = corpus
        .reference(site_id, task_id)
        .ok_or_else(|| ScoringError::NoReference {
            site: site_id.into(),
            task: task_id.into(),
        })?;
    match corpus.generated(site_id, task_id, model_id) {
        Some(candidate) => best_pairing(candidate, reference, metric, &config.params),
        None => impute_task(corpus, site_id, task_id, model_id, metric, config),
    }
}

/// Means task scores of one (site, model, metric).
pub fn aggregate_site(tasks: &[TaskScore]) -> Result<SiteScore, ScoringError> {
    let first = tasks.first().ok_or(ScoringError::Empty)?;
    if tasks.iter().any(|t| {
        t.site_id != first.site_id || t.generator_model_id != first.generator_model_id || t.metric != first.metric
    }) {
        return Err(ScoringError::MixedTasks);
    }
    if tasks.iter().all(|t| t.imputed) {
        return Err(ScoringError::NoOverlap {
            site: first.site_id.clone(),
            model: first.generator_model_id.clone(),
        });
    }
    let value = tasks.iter().map(|t| t.value).sum::<f64>() / tasks.len() as f64;
    Ok(SiteScore {
        site_id: first.site_id.clone(),
        generator_model_id: first.generator_model_id.clone(),
        metric: first.metric,
        value,
        task_count: tasks.len(),
        imputed_tasks: tasks.iter().filter(|t| t.imputed).count(),
    })
}

/// Site score with its task scores, in task order.
pub fn site_score(
    corpus: &TraceCorpus,
    model_id: &str,
    site_id: &str,
    metric: MetricKind,
    config: &ScoringConfig,
) -> Result<(SiteScore, Vec<TaskScore>), ScoringError> {
    let tasks = corpus.tasks(site_id);
    if tasks.is_empty() {
        return Err(ScoringError::NoReference {
            site: site_id.into(),
            task: String::from("*"),
        });
    }
    let scores = tasks
        .iter()
        .map(|task| task_score(corpus, site_id, task, model_id, metric, config))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((aggregate_site(&scores)?, scores))
}

/// Pairwise label from two site scores: the better-oriented one wins.
pub fn metric_binary_label(a: &SiteScore, b: &SiteScore) -> Result<Verdict, ScoringError> {
    if a.metric != b.metric {
        return Err(ScoringError::Incomparable("different metrics"));
    }
    if a.site_id != b.site_id {
        return Err(ScoringError::Incomparable("different sites"));
    }
    Ok(label_values(a.metric.orientation(), a.value, b.value))
}

/// Verdict for raw values under `orientation`; exact equality is a tie.
pub fn label_values(orientation: Orientation, a: f64, b: f64) -> Verdict {
    if orientation.is_better(a, b) {
        Verdict::AWins
    } else if orientation.is_better(b, a) {
        Verdict::BWins
    } else {
        Verdict::Tie
    }
}

/// Median; even counts average the two central values.
pub fn median(values: &[f64]) -> Result<f64, ScoringError> {
    if values.is_empty() {
        return Err(ScoringError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Ok(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    })
}

/// Median of one model's site scores under `metric`.
pub fn median_model_score(scores: &[SiteScore], metric: MetricKind) -> Result<f64, ScoringError> {
    let values: Vec<f64> = scores.iter().filter(|s| s.metric == metric).map(|s| s.value).collect();
    median(&values)
}

/// Ranks models by ascending median, ties sharing the smaller rank.
///
/// Ascending order is applied to every metric, eBLEU included.
pub fn median_ranks(medians: &[(String, f64)]) -> Vec<(String, usize)> {
    let map = medians.iter().cloned().collect();
    let ranks = competition_ranks(&map, false);
    medians.iter().map(|(m, _)| (m.clone(), ranks[m])).collect()
}
