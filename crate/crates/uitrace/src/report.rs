//! Score reports, leaderboard files and alignment reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use uitrace_core::metrics::MetricKind;
use uitrace_core::ranking::{Leaderboard, Rater, ELO_ANCHOR, ELO_SCALE};
use uitrace_core::scoring::{SiteScore, TaskScore};
use uitrace_core::stats::AlignmentReport;

use crate::error::{Error, Result};
use crate::jsonl;

/// One score report line, discriminated by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreLine {
    /// Best-of-pairings score of one task.
    Task(TaskScore),
    /// Mean over a site's tasks.
    Site(SiteScore),
}

/// Site scores of a report, in file order.
pub fn site_scores(lines: &[ScoreLine]) -> Vec<&SiteScore> {
    lines
        .iter()
        .filter_map(|l| match l {
            ScoreLine::Site(s) => Some(s),
            ScoreLine::Task(_) => None,
        })
        .collect()
}

/// Reads a score report.
pub fn read_scores(path: &Path) -> Result<Vec<ScoreLine>> {
    jsonl::read(path)
}

/// A leaderboard as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterBoard {
    /// Whose verdicts were fitted.
    pub rater: Rater,
    /// Elo rating per model.
    pub ratings: BTreeMap<String, f64>,
    /// Rank per model; 1 is best and ties share the smaller rank.
    pub ranks: BTreeMap<String, usize>,
    /// Records fitted.
    pub comparison_count: usize,
    /// L2 prior strength used.
    pub prior_strength: f64,
    /// Whether the fit reached its tolerance.
    pub converged: bool,
}

impl RaterBoard {
    /// Wraps a fitted leaderboard.
    pub fn new(rater: Rater, lb: &Leaderboard) -> Self {
        Self {
            rater,
            ratings: lb.ratings.clone(),
            ranks: lb.ranks.clone(),
            comparison_count: lb.comparison_count,
            prior_strength: lb.prior_strength,
            converged: lb.converged,
        }
    }

    /// Rebuilds the core leaderboard; strengths are recovered from ratings.
    pub fn to_leaderboard(&self) -> Leaderboard {
        Leaderboard {
            ratings: self.ratings.clone(),
            ranks: self.ranks.clone(),
            strengths: self
                .ratings
                .iter()
                .map(|(m, r)| (m.clone(), (r - ELO_ANCHOR) / ELO_SCALE))
                .collect(),
            comparison_count: self.comparison_count,
            prior_strength: self.prior_strength,
            iterations: 0,
            converged: self.converged,
        }
    }
}

/// Median ranking of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianBoard {
    /// Metric.
    pub metric: MetricKind,
    /// Median site score per model.
    pub medians: BTreeMap<String, f64>,
    /// Ascending rank of the medians.
    pub ranks: BTreeMap<String, usize>,
}

/// Output of the `rank` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardFile {
    /// One leaderboard per rater, sorted by rater.
    pub leaderboards: Vec<RaterBoard>,
    /// Median rankings, present when ranking from scores.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub medians: Vec<MedianBoard>,
}

impl LeaderboardFile {
    /// Leaderboard of `rater`, if present.
    pub fn board(&self, rater: &Rater) -> Option<&RaterBoard> {
        self.leaderboards.iter().find(|b| &b.rater == rater)
    }
}

/// Alignment of one candidate rater.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterAlignment {
    /// Candidate leaderboard.
    pub board: RaterBoard,
    /// Statistics against ground truth.
    pub report: AlignmentReport,
}

/// Output of the `align` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentFile {
    /// Ground-truth leaderboard.
    pub ground_truth: RaterBoard,
    /// Candidate raters, sorted by rater.
    pub candidates: Vec<RaterAlignment>,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Reads a JSON document.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Table rendering: one row per model with rating and rank under each rater,
/// then rho, kappa and agreement rows for the candidates.
pub fn render_table(file: &AlignmentFile) -> String {
    let mut columns = vec![&file.ground_truth];
    columns.extend(file.candidates.iter().map(|c| &c.board));
    let mut models: Vec<&String> = file.ground_truth.ratings.keys().collect();
    models.sort_by_key(|m| (file.ground_truth.ranks[*m], *m));

    let width = models.iter().map(|m| m.len()).max().unwrap_or(0).max(14) + 2;
    let mut out = String::new();
    let _ = write!(out, "{:<width$}", "Model");
    for c in &columns {
        let _ = write!(out, "{:>18}", c.rater.to_string());
    }
    out.push('\n');
    for m in models {
        let _ = write!(out, "{m:<width$}");
        for c in &columns {
            let cell = match (c.ratings.get(m), c.ranks.get(m)) {
                (Some(r), Some(k)) => format!("{r:.1} ({k})"),
                _ => "-".to_string(),
            };
            let _ = write!(out, "{cell:>18}");
        }
        out.push('\n');
    }
    type Cell = fn(&AlignmentReport) -> String;
    let footer: [(&str, Cell); 3] = [
        ("Spearman rho", |r| format!("{:.4}", r.spearman_rho)),
        ("Cohen's kappa", |r| {
            r.cohens_kappa.map_or("-".into(), |k| format!("{k:.4}"))
        }),
        ("Agreement", |r| format!("{:.1}%", 100.0 * r.agreement_rate)),
    ];
    for (label, cell) in footer {
        let _ = write!(out, "{label:<width$}{:>18}", "-");
        for c in &file.candidates {
            let _ = write!(out, "{:>18}", cell(&c.report));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use uitrace_core::scoring::RunPairing;

    #[test]
    fn score_lines_carry_kind() {
        let t = ScoreLine::Task(TaskScore {
            site_id: "s".into(),
            task_id: "t".into(),
            generator_model_id: "m".into(),
            metric: MetricKind::Wmd,
            value: 0.25,
            pairing: Some(RunPairing {
                candidate_run: 1,
                reference_run: 2,
            }),
            imputed: false,
        });
        let text = serde_json::to_string(&t).unwrap();
        assert_eq!(
            text,
            r#"{"kind":"task","site_id":"s","task_id":"t","generator_model_id":"m","metric":"wmd","value":0.25,"pairing":{"candidate_run":1,"reference_run":2},"imputed":false}"#
        );
        assert_eq!(serde_json::from_str::<ScoreLine>(&text).unwrap(), t);
    }

    #[test]
    fn table_lists_models_by_ground_truth_rank() {
        let board = |rater: Rater, ratings: &[(&str, f64, usize)]| RaterBoard {
            rater,
            ratings: ratings.iter().map(|(m, r, _)| (m.to_string(), *r)).collect(),
            ranks: ratings.iter().map(|(m, _, k)| (m.to_string(), *k)).collect(),
            comparison_count: 3,
            prior_strength: 0.0,
            converged: true,
        };
        let file = AlignmentFile {
            ground_truth: board(Rater::Human, &[("zeta", 1100.0, 1), ("alpha", 900.0, 2)]),
            candidates: vec![RaterAlignment {
                board: board(Rater::Metric("wmd".into()), &[("zeta", 1050.0, 1), ("alpha", 950.0, 2)]),
                report: AlignmentReport {
                    spearman_rho: 1.0,
                    cohens_kappa: None,
                    agreement_rate: 0.75,
                    n_pairs: 4,
                    n_kappa_pairs: 0,
                    n_models: 2,
                    dropped_pairs: 0,
                },
            }],
        };
        let text = render_table(&file);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[1].starts_with("zeta") && lines[1].contains("1100.0 (1)"));
        assert!(lines[2].starts_with("alpha"));
        assert!(lines[3].contains("1.0000"));
        assert!(lines[5].trim_end().ends_with("75.0%"));
    }
}
