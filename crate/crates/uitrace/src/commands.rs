//! The file-to-file commands behind the `uitrace` binary.
//!
//! Each `cmd_*` function reads its inputs, writes its outputs and returns what
//! it wrote, so tests can drive the whole pipeline without a subprocess.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use uitrace_core::featurize::{embed_trace, ToyEmbedder};
use uitrace_core::metrics::MetricKind;
use uitrace_core::ranking::{fit_leaderboard, ComparisonRecord, FitConfig, Rater};
use uitrace_core::scoring::{self, label_values, median_ranks, ScoringConfig, SiteScore, TaskScore};
use uitrace_core::stats::align_report;
use uitrace_core::trace::{CorpusOptions, Trace, TraceCorpus, TraceMeta};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fixture::{self, Fixture, FixtureParams};
use crate::records::{self, PairSpec};
use crate::report::{self, AlignmentFile, LeaderboardFile, MedianBoard, RaterAlignment, RaterBoard, ScoreLine};
use crate::{jsonl, pgm, traces};

fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Scores every generated model on every site under every selected metric.
///
/// Lines are grouped by site. Within a site, task lines come first sorted by
/// (task, model, metric), then site lines sorted by (model, metric).
pub fn score_corpus(corpus: &TraceCorpus, config: &RunConfig) -> Result<Vec<ScoreLine>> {
    config.validate()?;
    let scoring = ScoringConfig::for_corpus(corpus, config.metric_params()?, config.imputation());
    let metrics = config.selected_metrics();
    let mut jobs = Vec::new();
    for site in corpus.sites() {
        for model in corpus.models_on_site(site) {
            for &metric in &metrics {
                jobs.push((site, model, metric));
            }
        }
    }
    log::info!("scoring {} (site, model, metric) jobs", jobs.len());
    let results: Vec<(SiteScore, Vec<TaskScore>)> = thread_pool(config.workers)?.install(|| {
        jobs.par_iter()
            .map(|&(site, model, metric)| scoring::site_score(corpus, model, site, metric, &scoring))
            .collect::<Result<_, _>>()
    })?;

    let mut by_site: BTreeMap<String, (Vec<TaskScore>, Vec<SiteScore>)> = BTreeMap::new();
    for (site_score, tasks) in results {
        if site_score.imputed_tasks > 0 {
            log::warn!(
                "{} on {}: {} of {} tasks imputed for {}",
                site_score.generator_model_id,
                site_score.site_id,
                site_score.imputed_tasks,
                site_score.task_count,
                site_score.metric
            );
        }
        let entry = by_site.entry(site_score.site_id.clone()).or_default();
        entry.0.extend(tasks);
        entry.1.push(site_score);
    }
    let mut lines = Vec::new();
    for (_, (mut tasks, mut sites)) in by_site {
        tasks.sort_by(|a, b| {
            (&a.task_id, &a.generator_model_id, a.metric).cmp(&(&b.task_id, &b.generator_model_id, b.metric))
        });
        sites.sort_by(|a, b| (&a.generator_model_id, a.metric).cmp(&(&b.generator_model_id, b.metric)));
        lines.extend(tasks.into_iter().map(ScoreLine::Task));
        lines.extend(sites.into_iter().map(ScoreLine::Site));
    }
    Ok(lines)
}

/// `score`: trace file in, score report out.
pub fn cmd_score(trace_file: &Path, out: &Path, config: &RunConfig) -> Result<Vec<ScoreLine>> {
    config.validate()?;
    let corpus = traces::load_corpus(trace_file, &config.corpus_options())?;
    let lines = score_corpus(&corpus, config)?;
    jsonl::write(out, &lines)?;
    Ok(lines)
}

/// Converts site scores into one metric-derived record per (metric, pair).
///
/// Only metrics present in the report and selected in `metrics` are used.
pub fn labels_from_scores(
    lines: &[ScoreLine],
    pairs: &[PairSpec],
    metrics: &[MetricKind],
) -> Result<Vec<ComparisonRecord>> {
    let mut index: BTreeMap<(&str, &str, MetricKind), f64> = BTreeMap::new();
    for s in report::site_scores(lines) {
        index.insert((&s.site_id, &s.generator_model_id, s.metric), s.value);
    }
    let present: BTreeSet<MetricKind> = index.keys().map(|k| k.2).collect();
    let mut out = Vec::new();
    for metric in metrics.iter().copied().filter(|m| present.contains(m)) {
        for p in pairs {
            let lookup = |output: &str| {
                index
                    .get(&(p.site_id.as_str(), output, metric))
                    .copied()
                    .ok_or_else(|| {
                        Error::Invalid(format!(
                            "pair `{}`: no {metric} site score for output `{output}` on site `{}`",
                            p.pair_id, p.site_id
                        ))
                    })
            };
            let verdict = label_values(metric.orientation(), lookup(p.output_a())?, lookup(p.output_b())?);
            out.push(ComparisonRecord::new(
                &p.pair_id,
                &p.site_id,
                &p.model_a,
                &p.model_b,
                verdict,
                Rater::Metric(metric.as_str().into()),
            ));
        }
    }
    Ok(out)
}

/// Fits one leaderboard per rater found in `records`, sorted by rater.
pub fn rank_records(records: &[ComparisonRecord], fit: &FitConfig) -> Result<Vec<RaterBoard>> {
    let mut groups: BTreeMap<String, (Rater, Vec<ComparisonRecord>)> = BTreeMap::new();
    for r in records {
        groups
            .entry(r.rater.to_string())
            .or_insert_with(|| (r.rater.clone(), Vec::new()))
            .1
            .push(r.clone());
    }
    groups
        .into_iter()
        .map(|(name, (rater, group))| {
            let lb = fit_leaderboard(&group, fit).map_err(|source| Error::Ranking { rater: name, source })?;
            if !lb.converged {
                log::warn!(
                    "{rater}: fit stopped after {} iterations without converging",
                    lb.iterations
                );
            }
            Ok(RaterBoard::new(rater, &lb))
        })
        .collect()
}

fn output_models(pairs: &[PairSpec]) -> Result<BTreeMap<&str, &str>> {
    let mut map = BTreeMap::new();
    for p in pairs {
        for (output, model) in [(p.output_a(), p.model_a.as_str()), (p.output_b(), p.model_b.as_str())] {
            if let Some(prev) = map.insert(output, model) {
                if prev != model {
                    return Err(Error::Invalid(format!(
                        "output `{output}` belongs to both `{prev}` and `{model}`"
                    )));
                }
            }
        }
    }
    Ok(map)
}

/// Median site score per model and metric, ranked ascending.
///
/// Site scores are mapped to models through the manifest's outputs; outputs
/// it does not mention count as their own model.
pub fn median_boards(lines: &[ScoreLine], pairs: &[PairSpec], metrics: &[MetricKind]) -> Result<Vec<MedianBoard>> {
    let owners = output_models(pairs)?;
    let mut values: BTreeMap<(MetricKind, String), Vec<f64>> = BTreeMap::new();
    for s in report::site_scores(lines) {
        let model = owners
            .get(s.generator_model_id.as_str())
            .copied()
            .unwrap_or(&s.generator_model_id);
        values.entry((s.metric, model.to_string())).or_default().push(s.value);
    }
    let mut boards = Vec::new();
    for &metric in metrics {
        let medians: Vec<(String, f64)> = values
            .iter()
            .filter(|((m, _), _)| *m == metric)
            .map(|((_, model), v)| Ok((model.clone(), scoring::median(v)?)))
            .collect::<Result<_>>()?;
        if medians.is_empty() {
            continue;
        }
        boards.push(MedianBoard {
            metric,
            ranks: median_ranks(&medians).into_iter().collect(),
            medians: medians.into_iter().collect(),
        });
    }
    Ok(boards)
}

/// Where `rank` takes its verdicts from.
#[derive(Debug, Clone)]
pub enum RankInput {
    /// Metric labels synthesized from a score report over a pairs manifest.
    Scores {
        /// Score report.
        scores: PathBuf,
        /// Pairs manifest.
        pairs: PathBuf,
    },
    /// Explicit comparison records.
    Records(PathBuf),
}

/// `rank`: leaderboards per rater, plus the metric labels when ranking scores.
pub fn cmd_rank(
    input: &RankInput,
    out: &Path,
    labels_out: Option<&Path>,
    config: &RunConfig,
) -> Result<LeaderboardFile> {
    config.validate()?;
    let (records, medians) = match input {
        RankInput::Scores { scores, pairs } => {
            let lines = report::read_scores(scores)?;
            let pairs = records::read_pairs(pairs)?;
            let metrics = config.selected_metrics();
            let labels = labels_from_scores(&lines, &pairs, &metrics)?;
            (labels, median_boards(&lines, &pairs, &metrics)?)
        }
        RankInput::Records(path) => (records::read_records(path)?, Vec::new()),
    };
    if let Some(path) = labels_out {
        records::write_records(path, &records)?;
    }
    let file = LeaderboardFile {
        leaderboards: rank_records(&records, &config.fit_config())?,
        medians,
    };
    jsonl::write_text(out, &report::to_json(&file))?;
    Ok(file)
}

fn restrict(records: &[ComparisonRecord], models: Option<&[String]>) -> Vec<ComparisonRecord> {
    records
        .iter()
        .filter(|r| models.is_none_or(|set| set.contains(&r.model_a) && set.contains(&r.model_b)))
        .cloned()
        .collect()
}

/// Aligns every candidate rater in `candidates` with the ground truth.
///
/// Leaderboards come from `boards` when it has one for a rater and are
/// fitted from the records otherwise. `models` restricts both record sets to
/// pairs whose two models are listed.
pub fn align(
    ground_truth: &[ComparisonRecord],
    candidates: &[ComparisonRecord],
    boards: Option<&LeaderboardFile>,
    models: Option<&[String]>,
    fit: &FitConfig,
) -> Result<AlignmentFile> {
    let gt = restrict(ground_truth, models);
    let cand = restrict(candidates, models);
    let gt_rater = match gt
        .iter()
        .map(|r| &r.rater)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect::<Vec<_>>()[..]
    {
        [one] => one.clone(),
        [] => return Err(Error::Invalid("no ground-truth records".into())),
        _ => return Err(Error::Invalid("ground-truth records mix several raters".into())),
    };
    let board_for = |rater: &Rater, records: &[ComparisonRecord]| -> Result<RaterBoard> {
        match boards.and_then(|b| b.board(rater)) {
            Some(b) if models.is_none() => Ok(b.clone()),
            _ => Ok(rank_records(records, fit)?.remove(0)),
        }
    };
    let gt_board = board_for(&gt_rater, &gt)?;
    let gt_lb = gt_board.to_leaderboard();

    let mut groups: BTreeMap<String, Vec<ComparisonRecord>> = BTreeMap::new();
    for r in cand.into_iter().filter(|r| r.rater != gt_rater) {
        groups.entry(r.rater.to_string()).or_default().push(r);
    }
    let mut out = Vec::new();
    for group in groups.into_values() {
        let board = board_for(&group[0].rater, &group)?;
        let report = align_report(&gt, &group, &gt_lb, &board.to_leaderboard())?;
        if report.dropped_pairs > 0 {
            log::warn!(
                "{}: {} ground-truth pairs have no label",
                board.rater,
                report.dropped_pairs
            );
        }
        out.push(RaterAlignment { board, report });
    }
    if out.is_empty() {
        return Err(Error::Invalid(
            "no candidate records besides the ground-truth rater".into(),
        ));
    }
    Ok(AlignmentFile {
        ground_truth: gt_board,
        candidates: out,
    })
}

/// Inputs of `align`.
#[derive(Debug, Clone, Default)]
pub struct AlignInput {
    /// Ground-truth records, one rater.
    pub ground_truth: PathBuf,
    /// Candidate records, any number of raters.
    pub candidates: PathBuf,
    /// Precomputed leaderboards from `rank`.
    pub leaderboards: Option<PathBuf>,
    /// Restrict to pairs among these models.
    pub models: Option<Vec<String>>,
}

/// `align`: JSON report plus an optional table rendering.
pub fn cmd_align(
    input: &AlignInput,
    out: &Path,
    table_out: Option<&Path>,
    config: &RunConfig,
) -> Result<AlignmentFile> {
    config.validate()?;
    let gt = records::read_records(&input.ground_truth)?;
    let cand = records::read_records(&input.candidates)?;
    let boards: Option<LeaderboardFile> = input.leaderboards.as_deref().map(report::read_json).transpose()?;
    let file = align(
        &gt,
        &cand,
        boards.as_ref(),
        input.models.as_deref(),
        &config.fit_config(),
    )?;
    jsonl::write_text(out, &report::to_json(&file))?;
    if let Some(path) = table_out {
        jsonl::write_text(path, &report::render_table(&file))?;
    }
    Ok(file)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    entries.retain(|p| !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')));
    entries.sort();
    Ok(entries)
}

fn subdirs(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    Ok(sorted_entries(dir)?
        .into_iter()
        .filter(|p| p.is_dir())
        .map(|p| (p.file_name().unwrap_or_default().to_string_lossy().into_owned(), p))
        .collect())
}

fn parse_run(name: &str) -> Option<u32> {
    name.strip_prefix("run").unwrap_or(name).parse().ok()
}

/// Name of the per-task directory holding reference runs.
pub const REFERENCE_DIR: &str = "reference";

/// Embeds a screenshot tree with the toy embedder.
///
/// The layout is `<root>/<site>/<task>/<who>/<run>/*.pgm` where `<who>` is
/// `reference` or a generator model id and `<run>` is `0`..`2` (optionally
/// prefixed `run`). Frames are taken in file name order.
pub fn embed_directory(root: &Path) -> Result<Vec<Trace>> {
    let mut out = Vec::new();
    for (site, site_dir) in subdirs(root)? {
        for (task, task_dir) in subdirs(&site_dir)? {
            for (who, who_dir) in subdirs(&task_dir)? {
                for (run_name, run_dir) in subdirs(&who_dir)? {
                    let run = parse_run(&run_name).ok_or_else(|| {
                        Error::Invalid(format!("{}: run directory name is not a number", run_dir.display()))
                    })?;
                    let images = sorted_entries(&run_dir)?
                        .into_iter()
                        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")))
                        .map(|p| pgm::load_pgm(&p))
                        .collect::<Result<Vec<_>>>()?;
                    let id = format!("{site}/{task}/{who}/{run}");
                    let meta = if who == REFERENCE_DIR {
                        TraceMeta::reference(&id, &site, &task, run)
                    } else {
                        TraceMeta::generated(&id, &site, &task, &who, run)
                    };
                    out.push(embed_trace(&images, &ToyEmbedder, meta)?);
                }
            }
        }
    }
    Ok(out)
}

/// `embed`: screenshot tree in, validated trace file out.
pub fn cmd_embed(images: &Path, out: &Path, config: &RunConfig) -> Result<TraceCorpus> {
    let traces = embed_directory(images)?;
    let options = CorpusOptions {
        normalize: false,
        expect_normalized: true,
        ..config.corpus_options()
    };
    let corpus = TraceCorpus::from_traces(traces, &options)?;
    traces::save_corpus(out, &corpus)?;
    Ok(corpus)
}

/// File names written by [`cmd_fixture`].
pub const FIXTURE_FILES: [&str; 3] = ["traces.jsonl", "pairs.jsonl", "labels.jsonl"];

/// `fixture`: writes traces, pairs manifest and ground-truth labels.
pub fn cmd_fixture(out_dir: &Path, params: &FixtureParams) -> Result<Fixture> {
    let fx = fixture::generate(params)?;
    traces::write_traces(&out_dir.join(FIXTURE_FILES[0]), &fx.traces)?;
    records::write_pairs(&out_dir.join(FIXTURE_FILES[1]), &fx.pairs)?;
    records::write_records(&out_dir.join(FIXTURE_FILES[2]), &fx.labels)?;
    Ok(fx)
}
