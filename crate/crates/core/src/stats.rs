//! Agreement between a candidate rater and ground-truth preferences.
//!
//! Three statistics: Spearman's rank correlation between two leaderboards,
//! Cohen's kappa over decisive pairwise labels, and the raw agreement rate in
//! which a tie against a decisive label counts as half an agreement.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::ranking::{ComparisonRecord, Leaderboard, Verdict};

/// Statistic failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    /// Rank vectors cover different models.
    #[error("rankings cover different models")]
    ModelMismatch,
    /// Fewer than two models.
    #[error("need at least two models, got {0}")]
    TooFewModels(usize),
    /// One ranking is constant, so the correlation is undefined.
    #[error("a ranking has zero variance")]
    ZeroVariance,
    /// Label lists of different lengths.
    #[error("label lists differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    /// No labels.
    #[error("no labels to compare")]
    Empty,
    /// Two records share a pair id.
    #[error("duplicate pair id `{0}`")]
    DuplicatePair(String),
    /// Records with one pair id name different models.
    #[error("pair `{0}` names different models in the two record sets")]
    PairMismatch(String),
}

/// Average (fractional) ranks of `values`, ascending, 1-based.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho between two aligned rank (or score) vectors.
///
/// Values are re-ranked with average ranks. Without ties this is
/// `1 - 6 sum(d^2) / (k (k^2 - 1))`; with ties it is the Pearson correlation
/// of the average ranks.
pub fn spearman_from_ranks(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let k = a.len();
    if k < 2 {
        return Err(StatsError::TooFewModels(k));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let tie_free = |r: &[f64]| {
        let set: BTreeSet<u64> = r.iter().map(|v| v.to_bits()).collect();
        set.len() == r.len()
    };
    if tie_free(&ra) && tie_free(&rb) {
        let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y) * (x - y)).sum();
        let k = k as f64;
        return Ok(1.0 - 6.0 * d2 / (k * (k * k - 1.0)));
    }
    let mean = (k as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sxy += (x - mean) * (y - mean);
        sxx += (x - mean) * (x - mean);
        syy += (y - mean) * (y - mean);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok(sxy / libm::sqrt(sxx * syy))
}

/// Spearman's rho between two rankings keyed by model id.
pub fn spearman_rho(
    ground_truth: &BTreeMap<String, f64>,
    candidate: &BTreeMap<String, f64>,
) -> Result<f64, StatsError> {
    if ground_truth.len() != candidate.len() || ground_truth.keys().any(|k| !candidate.contains_key(k)) {
        return Err(StatsError::ModelMismatch);
    }
    let a: Vec<f64> = ground_truth.values().copied().collect();
    let b: Vec<f64> = ground_truth.keys().map(|k| candidate[k]).collect();
    spearman_from_ranks(&a, &b)
}

fn check_lengths(gt: &[Verdict], cand: &[Verdict]) -> Result<(), StatsError> {
    if gt.len() != cand.len() {
        return Err(StatsError::LengthMismatch(gt.len(), cand.len()));
    }
    if gt.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(())
}

/// Cohen's kappa over the pairs where both labels are decisive.
///
/// Pairs with a tie on either side are dropped. When chance agreement is 1
/// (both raters constant and identical) the result is 1.
pub fn cohens_kappa(gt: &[Verdict], cand: &[Verdict]) -> Result<f64, StatsError> {
    check_lengths(gt, cand)?;
    let decisive: Vec<(Verdict, Verdict)> = gt
        .iter()
        .zip(cand)
        .filter(|(g, c)| **g != Verdict::Tie && **c != Verdict::Tie)
        .map(|(g, c)| (*g, *c))
        .collect();
    if decisive.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = decisive.len() as f64;
    let observed = decisive.iter().filter(|(g, c)| g == c).count() as f64 / n;
    let gt_a = decisive.iter().filter(|(g, _)| *g == Verdict::AWins).count() as f64 / n;
    let cand_a = decisive.iter().filter(|(_, c)| *c == Verdict::AWins).count() as f64 / n;
    let expected = gt_a * cand_a + (1.0 - gt_a) * (1.0 - cand_a);
    if expected == 1.0 {
        return Ok(1.0);
    }
    Ok((observed - expected) / (1.0 - expected))
}

/// Fraction of identical labels; a tie against a decisive label counts 0.5.
pub fn agreement_rate(gt: &[Verdict], cand: &[Verdict]) -> Result<f64, StatsError> {
    check_lengths(gt, cand)?;
    let score: f64 = gt
        .iter()
        .zip(cand)
        .map(|(g, c)| {
            if g == c {
                1.0
            } else if *g == Verdict::Tie || *c == Verdict::Tie {
                0.5
            } else {
                0.0
            }
        })
        .sum();
    Ok(score / gt.len() as f64)
}

/// Alignment of one candidate rater with ground truth.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AlignmentReport {
    /// Rank correlation of the two leaderboards over shared models.
    pub spearman_rho: f64,
    /// Kappa over decisive pairs; `None` when no pair is decisive on both sides.
    pub cohens_kappa: Option<f64>,
    /// Raw agreement with half credit for ties.
    pub agreement_rate: f64,
    /// Pairs compared.
    pub n_pairs: usize,
    /// Pairs entering kappa.
    pub n_kappa_pairs: usize,
    /// Models compared.
    pub n_models: usize,
    /// Ground-truth pairs missing from the candidate records.
    pub dropped_pairs: usize,
}

fn index_records(records: &[ComparisonRecord]) -> Result<BTreeMap<&str, &ComparisonRecord>, StatsError> {
    let mut map = BTreeMap::new();
    for r in records {
        if map.insert(r.pair_id.as_str(), r).is_some() {
            return Err(StatsError::DuplicatePair(r.pair_id.clone()));
        }
    }
    Ok(map)
}

/// Aligned `(ground truth, candidate)` verdicts over shared pair ids, in pair
/// id order, plus the number of ground-truth pairs without a candidate label.
///
/// Candidate records that list the models in the opposite order are flipped.
pub fn paired_verdicts(
    gt_records: &[ComparisonRecord],
    cand_records: &[ComparisonRecord],
) -> Result<(Vec<Verdict>, Vec<Verdict>, usize), StatsError> {
    let gt = index_records(gt_records)?;
    let cand = index_records(cand_records)?;
    let (mut g, mut c) = (Vec::new(), Vec::new());
    let mut dropped = 0;
    for (id, gr) in &gt {
        let Some(cr) = cand.get(id) else {
            dropped += 1;
            continue;
        };
        let verdict = if cr.model_a == gr.model_a && cr.model_b == gr.model_b {
            cr.verdict
        } else if cr.model_a == gr.model_b && cr.model_b == gr.model_a {
            cr.verdict.flipped()
        } else {
            return Err(StatsError::PairMismatch(String::from(*id)));
        };
        g.push(gr.verdict);
        c.push(verdict);
    }
    Ok((g, c, dropped))
}

/// Assembles rho, kappa and agreement for one candidate rater.
pub fn align_report(
    gt_records: &[ComparisonRecord],
    cand_records: &[ComparisonRecord],
    gt_leaderboard: &Leaderboard,
    cand_leaderboard: &Leaderboard,
) -> Result<AlignmentReport, StatsError> {
    let (g, c, dropped) = paired_verdicts(gt_records, cand_records)?;
    if g.is_empty() {
        return Err(StatsError::Empty);
    }
    let shared: BTreeMap<String, f64> = gt_leaderboard
        .ranks
        .iter()
        .filter(|(m, _)| cand_leaderboard.ranks.contains_key(*m))
        .map(|(m, &r)| (m.clone(), r as f64))
        .collect();
    let cand_ranks: BTreeMap<String, f64> = shared
        .keys()
        .map(|m| (m.clone(), cand_leaderboard.ranks[m] as f64))
        .collect();
    let rho = spearman_rho(&shared, &cand_ranks)?;
    let n_kappa_pairs = g
        .iter()
        .zip(&c)
        .filter(|(a, b)| **a != Verdict::Tie && **b != Verdict::Tie)
        .count();
    let kappa = match cohens_kappa(&g, &c) {
        Ok(k) => Some(k),
        Err(StatsError::Empty) => None,
        Err(e) => return Err(e),
    };
    Ok(AlignmentReport {
        spearman_rho: rho,
        cohens_kappa: kappa,
        agreement_rate: agreement_rate(&g, &c)?,
        n_pairs: g.len(),
        n_kappa_pairs,
        n_models: shared.len(),
        dropped_pairs: dropped,
    })
}
