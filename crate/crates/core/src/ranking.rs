//! Bradley-Terry ratings on the Elo scale.
//!
//! Pairwise verdicts are fitted by maximum likelihood under
//! `P(i beats j) = 1 / (1 + exp(theta_j - theta_i))`. A tie counts as half a
//! win for each side. Strengths are reported as
//! `1000 + 400 / ln(10) * (theta_i - mean(theta))`, so a 400 point gap means
//! 10:1 odds and the mean rating is always 1000.
//!
//! The fit is a damped Newton iteration. The likelihood is invariant to a
//! common shift of all strengths; the Newton system adds the all-ones matrix
//! to pin that direction and every iterate is re-centred.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::linalg;

/// Mean rating of every leaderboard.
pub const ELO_ANCHOR: f64 = 1000.0;

/// Elo points per unit of Bradley-Terry strength, `400 / ln 10`.
pub const ELO_SCALE: f64 = 400.0 / core::f64::consts::LN_10;

/// Prior strength switched on automatically for degenerate win tables.
pub const AUTO_PRIOR: f64 = 0.01;

/// Outcome of one comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    /// `model_a` preferred.
    AWins,
    /// `model_b` preferred.
    BWins,
    /// No preference.
    Tie,
}

impl Verdict {
    /// The verdict seen from the other side.
    pub fn flipped(self) -> Self {
        match self {
            Verdict::AWins => Verdict::BWins,
            Verdict::BWins => Verdict::AWins,
            Verdict::Tie => Verdict::Tie,
        }
    }

    /// Wire name.
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::AWins => "a_wins",
            Verdict::BWins => "b_wins",
            Verdict::Tie => "tie",
        }
    }
}

/// Who produced a verdict.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rater {
    /// Human expert vote.
    Human,
    /// Label derived from a reference metric, e.g. `metric:wmd`.
    Metric(String),
    /// Imported judge output.
    JudgeImport,
}

impl fmt::Display for Rater {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rater::Human => f.write_str("human"),
            Rater::Metric(name) => write!(f, "metric:{name}"),
            Rater::JudgeImport => f.write_str("judge_import"),
        }
    }
}

impl FromStr for Rater {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "human" => Ok(Rater::Human),
            "judge_import" => Ok(Rater::JudgeImport),
            _ => match s.strip_prefix("metric:") {
                Some(name) if !name.is_empty() => Ok(Rater::Metric(name.to_string())),
                _ => Err(alloc::format!("unknown rater `{s}`")),
            },
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Rater {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Rater {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which screen side showed `model_a` to a human rater.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BlindedAssignment {
    /// `model_a` on the left.
    ALeft,
    /// `model_a` on the right.
    ARight,
}

/// One pairwise verdict.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonRecord {
    /// Pair identifier shared across raters.
    pub pair_id: String,
    /// Site both outputs implement.
    pub site_id: String,
    /// First model.
    pub model_a: String,
    /// Second model.
    pub model_b: String,
    /// Outcome.
    pub verdict: Verdict,
    /// Source of the verdict.
    pub rater: Rater,
    /// Screen placement for human votes.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub blinded_assignment: Option<BlindedAssignment>,
}

impl ComparisonRecord {
    /// A record without blinding information.
    pub fn new(pair_id: &str, site_id: &str, model_a: &str, model_b: &str, verdict: Verdict, rater: Rater) -> Self {
        Self {
            pair_id: pair_id.into(),
            site_id: site_id.into(),
            model_a: model_a.into(),
            model_b: model_b.into(),
            verdict,
            rater,
            blinded_assignment: None,
        }
    }

    /// Same comparison with the verdict reversed.
    pub fn flipped(&self) -> Self {
        Self {
            verdict: self.verdict.flipped(),
            ..self.clone()
        }
    }
}

/// Fitting failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RankingError {
    /// No records.
    #[error("no comparison records")]
    Empty,
    /// Only ties; strengths are unidentifiable.
    #[error("every record is a tie")]
    AllTies,
    /// A record compares a model with itself.
    #[error("pair `{pair_id}` compares model `{model}` with itself")]
    SelfComparison {
        /// Pair id.
        pair_id: String,
        /// Model id.
        model: String,
    },
    /// A record names a model outside the declared model set.
    #[error("unknown model `{model}` in pair `{pair_id}`")]
    UnknownModel {
        /// Pair id.
        pair_id: String,
        /// Model id.
        model: String,
    },
    /// The non-tie comparison graph has several components.
    #[error("comparison graph is disconnected: {components:?}")]
    Disconnected {
        /// Model ids per component.
        components: Vec<Vec<String>>,
    },
    /// The Newton system could not be solved.
    #[error("singular Newton system")]
    Singular,
    /// Invalid configuration value.
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}

/// L2 prior on strengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prior {
    /// 0, or [`AUTO_PRIOR`] when some model won or lost every game.
    Auto,
    /// Fixed strength `lambda` in `-lambda/2 * |theta|^2`.
    Fixed(f64),
}

/// Fit settings.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// L2 prior.
    pub prior: Prior,
    /// Declared model set; records naming other models are rejected.
    pub models: Option<Vec<String>>,
    /// Newton iteration cap.
    pub max_iterations: usize,
    /// Stop once every gradient component is below this.
    pub tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            prior: Prior::Auto,
            models: None,
            max_iterations: 10_000,
            tolerance: 1e-10,
        }
    }
}

/// Ratings and ranks from one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaderboard {
    /// Elo-scale ratings with mean 1000.
    pub ratings: BTreeMap<String, f64>,
    /// 1 is best; equal ratings share the smaller rank.
    pub ranks: BTreeMap<String, usize>,
    /// Centred Bradley-Terry strengths.
    pub strengths: BTreeMap<String, f64>,
    /// Records used.
    pub comparison_count: usize,
    /// Prior strength actually applied.
    pub prior_strength: f64,
    /// Newton iterations performed.
    pub iterations: usize,
    /// Whether the gradient tolerance was reached.
    pub converged: bool,
}

/// Competition ranks ("1, 1, 3") of `scores`, best first.
pub fn competition_ranks(scores: &BTreeMap<String, f64>, higher_is_better: bool) -> BTreeMap<String, usize> {
    scores
        .iter()
        .map(|(id, &v)| {
            let better = scores
                .values()
                .filter(|&&o| if higher_is_better { o > v } else { o < v })
                .count();
            (id.clone(), better + 1)
        })
        .collect()
}

/// Models ordered best first, with their ranks.
pub fn ranks_of(leaderboard: &Leaderboard) -> Vec<(String, usize)> {
    let mut out: Vec<(String, usize)> = leaderboard.ranks.iter().map(|(k, &v)| (k.clone(), v)).collect();
    out.sort_by(|a, b| {
        let ra = leaderboard.ratings[&a.0];
        let rb = leaderboard.ratings[&b.0];
        rb.total_cmp(&ra).then_with(|| a.0.cmp(&b.0))
    });
    out
}

struct WinTable {
    models: Vec<String>,
    /// `wins[i*k+j]`: (half-)wins of `i` over `j`.
    wins: Vec<f64>,
}

impl WinTable {
    fn size(&self) -> usize {
        self.models.len()
    }

    fn games(&self, i: usize, j: usize) -> f64 {
        let k = self.size();
        self.wins[i * k + j] + self.wins[j * k + i]
    }
}

fn build_table(records: &[ComparisonRecord], config: &FitConfig) -> Result<WinTable, RankingError> {
    if records.is_empty() {
        return Err(RankingError::Empty);
    }
    let declared: Option<BTreeSet<&str>> = config.models.as_ref().map(|ms| ms.iter().map(String::as_str).collect());
    let mut names: BTreeSet<&str> = declared.clone().unwrap_or_default();
    for r in records {
        if r.model_a == r.model_b {
            return Err(RankingError::SelfComparison {
                pair_id: r.pair_id.clone(),
                model: r.model_a.clone(),
            });
        }
        for model in [&r.model_a, &r.model_b] {
            if let Some(set) = &declared {
                if !set.contains(model.as_str()) {
                    return Err(RankingError::UnknownModel {
                        pair_id: r.pair_id.clone(),
                        model: model.clone(),
                    });
                }
            }
            names.insert(model);
        }
    }
    if records.iter().all(|r| r.verdict == Verdict::Tie) {
        return Err(RankingError::AllTies);
    }

    let models: Vec<String> = names.into_iter().map(String::from).collect();
    let index: BTreeMap<&str, usize> = models.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
    let k = models.len();
    let mut wins = vec![0.0; k * k];
    let mut parent: Vec<usize> = (0..k).collect();
    for r in records {
        let (a, b) = (index[r.model_a.as_str()], index[r.model_b.as_str()]);
        match r.verdict {
            Verdict::AWins => wins[a * k + b] += 1.0,
            Verdict::BWins => wins[b * k + a] += 1.0,
            Verdict::Tie => {
                wins[a * k + b] += 0.5;
                wins[b * k + a] += 0.5;
            }
        }
        if r.verdict != Verdict::Tie {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
    }

    let mut components: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, model) in models.iter().enumerate() {
        let root = find(&mut parent, i);
        components.entry(root).or_default().push(model.clone());
    }
    if components.len() > 1 {
        return Err(RankingError::Disconnected {
            components: components.into_values().collect(),
        });
    }
    Ok(WinTable { models, wins })
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// `ln(sigmoid(x))` without overflow.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -libm::log1p(libm::exp(-x))
    } else {
        x - libm::log1p(libm::exp(x))
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

fn objective(table: &WinTable, theta: &[f64], prior: f64) -> f64 {
    let k = table.size();
    let mut ll = 0.0;
    for i in 0..k {
        for j in 0..k {
            let w = table.wins[i * k + j];
            if w > 0.0 {
                ll += w * log_sigmoid(theta[i] - theta[j]);
            }
        }
    }
    ll - 0.5 * prior * theta.iter().map(|t| t * t).sum::<f64>()
}

fn gradient_and_curvature(table: &WinTable, theta: &[f64], prior: f64) -> (Vec<f64>, Vec<f64>) {
    let k = table.size();
    let mut grad = vec![0.0; k];
    // Negative Hessian.
    let mut curv = vec![0.0; k * k];
    for i in 0..k {
        grad[i] -= prior * theta[i];
        curv[i * k + i] += prior;
        for j in 0..k {
            if i == j {
                continue;
            }
            let games = table.games(i, j);
            if games == 0.0 {
                continue;
            }
            let p = sigmoid(theta[i] - theta[j]);
            grad[i] += table.wins[i * k + j] - games * p;
            let h = games * p * (1.0 - p);
            curv[i * k + i] += h;
            curv[i * k + j] -= h;
        }
    }
    (grad, curv)
}

fn center(theta: &mut [f64]) {
    let mean = theta.iter().sum::<f64>() / theta.len() as f64;
    theta.iter_mut().for_each(|t| *t -= mean);
}

/// Fits Bradley-Terry strengths to `records` and converts them to Elo ratings.
pub fn fit_leaderboard(records: &[ComparisonRecord], config: &FitConfig) -> Result<Leaderboard, RankingError> {
    if config.tolerance.is_nan() || config.tolerance <= 0.0 {
        return Err(RankingError::Config("tolerance must be positive"));
    }
    let table = build_table(records, config)?;
    let k = table.size();
    let prior = match config.prior {
        Prior::Fixed(l) if l.is_finite() && l >= 0.0 => l,
        Prior::Fixed(_) => return Err(RankingError::Config("prior strength must be non-negative")),
        Prior::Auto => {
            let degenerate = (0..k).any(|i| {
                let won: f64 = (0..k).map(|j| table.wins[i * k + j]).sum();
                let played: f64 = (0..k).map(|j| if i == j { 0.0 } else { table.games(i, j) }).sum();
                won == 0.0 || won == played
            });
            if degenerate {
                AUTO_PRIOR
            } else {
                0.0
            }
        }
    };

    let mut theta = vec![0.0; k];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        let (grad, mut curv) = gradient_and_curvature(&table, &theta, prior);
        if grad.iter().all(|g| g.abs() < config.tolerance) {
            converged = true;
            break;
        }
        iterations += 1;
        curv.iter_mut().for_each(|c| *c += 1.0);
        let step = linalg::solve(curv, grad).ok_or(RankingError::Singular)?;

        let current = objective(&table, &theta, prior);
        let mut t = 1.0;
        let mut next = theta.clone();
        loop {
            for (n, (th, s)) in next.iter_mut().zip(theta.iter().zip(&step)) {
                *n = th + t * s;
            }
            center(&mut next);
            let value = objective(&table, &next, prior);
            if value >= current - 1e-12 * current.abs() || t < 1e-12 {
                break;
            }
            t *= 0.5;
        }
        if next == theta {
            break;
        }
        theta = next;
    }

    let strengths: BTreeMap<String, f64> = table.models.iter().cloned().zip(theta.iter().copied()).collect();
    let ratings: BTreeMap<String, f64> = strengths
        .iter()
        .map(|(m, &t)| (m.clone(), ELO_ANCHOR + ELO_SCALE * t))
        .collect();
    let ranks = competition_ranks(&ratings, true);
    Ok(Leaderboard {
        ratings,
        ranks,
        strengths,
        comparison_count: records.len(),
        prior_strength: prior,
        iterations,
        converged,
    })
}
