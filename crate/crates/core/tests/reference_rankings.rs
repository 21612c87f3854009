mod common;

use common::{elo_ranks, median_ranks};
use uitrace_core::stats::spearman_from_ranks;

fn rho(a: &[usize; 7], b: &[usize; 7]) -> f64 {
    let a: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    let b: Vec<f64> = b.iter().map(|&v| v as f64).collect();
    spearman_from_ranks(&a, &b).unwrap()
}

#[test]
fn elo_leaderboard_rank_correlations() {
    // Sum of squared rank differences: 42, 34, 2 and 16.
    assert!((rho(&elo_ranks::HUMAN, &elo_ranks::DTW) - 0.25).abs() < 1e-12);
    assert!((rho(&elo_ranks::HUMAN, &elo_ranks::EBLEU) - (1.0 - 204.0 / 336.0)).abs() < 1e-12);
    assert!((rho(&elo_ranks::HUMAN, &elo_ranks::WMD) - (1.0 - 12.0 / 336.0)).abs() < 1e-12);
    assert!((rho(&elo_ranks::HUMAN, &elo_ranks::MLLM) - (1.0 - 96.0 / 336.0)).abs() < 1e-12);
    assert!((rho(&elo_ranks::HUMAN, &elo_ranks::EBLEU) - 0.3929).abs() < 5e-5);
    assert!((rho(&elo_ranks::HUMAN, &elo_ranks::WMD) - 0.9643).abs() < 5e-5);
    assert!((rho(&elo_ranks::HUMAN, &elo_ranks::MLLM) - 0.7143).abs() < 5e-5);
}

#[test]
fn median_ranking_rank_correlations() {
    assert!((rho(&median_ranks::HUMAN, &median_ranks::DTW) - 0.0357).abs() < 5e-5);
    assert!((rho(&median_ranks::HUMAN, &median_ranks::EBLEU) - 0.4643).abs() < 5e-5);
    assert!((rho(&median_ranks::HUMAN, &median_ranks::WMD) - 0.8214).abs() < 5e-5);
}

#[test]
fn spearman_is_symmetric() {
    assert_eq!(
        rho(&elo_ranks::HUMAN, &elo_ranks::DTW),
        rho(&elo_ranks::DTW, &elo_ranks::HUMAN)
    );
}

#[test]
fn wmd_medians_reproduce_their_rank_column() {
    let medians: Vec<(String, f64)> = median_ranks::WMD_MEDIANS
        .iter()
        .enumerate()
        .map(|(i, v)| (format!("model-{i}"), *v))
        .collect();
    let ranks: Vec<usize> = uitrace_core::scoring::median_ranks(&medians)
        .into_iter()
        .map(|(_, r)| r)
        .collect();
    assert_eq!(ranks, median_ranks::WMD);
}
