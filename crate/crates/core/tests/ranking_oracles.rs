mod common;

use common::*;
use uitrace_core::ranking::{fit_leaderboard, ComparisonRecord, FitConfig, Prior, Rater, Verdict};
use uitrace_core::rng::XorShift64Star;

fn records_from_table(names: &[&str], wins: &[Vec<f64>]) -> Vec<ComparisonRecord> {
    let mut out = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for (j, b) in names.iter().enumerate() {
            for g in 0..wins[i][j] as usize {
                let id = format!("{a}-{b}-{g}");
                out.push(ComparisonRecord::new(&id, "s", a, b, Verdict::AWins, Rater::Human));
            }
        }
    }
    out
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn clean_sweep_matches_scalar_newton() {
    let records: Vec<_> = (0..10)
        .map(|g| ComparisonRecord::new(&format!("p{g}"), "s", "A", "B", Verdict::AWins, Rater::Human))
        .collect();
    let lb = fit_leaderboard(&records, &FitConfig::default()).unwrap();
    let gap = ELO_PER_UNIT * two_model_gap(10.0, 0.01);
    assert!((lb.ratings["A"] - lb.ratings["B"] - gap).abs() < 1e-6);
    assert!(gap > 1000.0, "a clean sweep should produce a large gap, got {gap}");
}

#[test]
fn three_models_match_mm_oracle() {
    let names = ["A", "B", "C"];
    let wins = vec![vec![0.0, 7.0, 9.0], vec![3.0, 0.0, 6.0], vec![1.0, 4.0, 0.0]];
    let lb = fit_leaderboard(&records_from_table(&names, &wins), &FitConfig::default()).unwrap();
    assert_eq!(lb.prior_strength, 0.0);
    let oracle = bt_mm(&wins);
    for (i, n) in names.iter().enumerate() {
        let want = 1000.0 + ELO_PER_UNIT * oracle[i];
        assert!((lb.ratings[*n] - want).abs() < 0.5, "{n}: {} vs {want}", lb.ratings[*n]);
    }
}

fn random_records(rng: &mut XorShift64Star, models: usize, games: usize) -> Vec<ComparisonRecord> {
    let names: Vec<String> = (0..models).map(|i| format!("m{i}")).collect();
    let mut out = Vec::new();
    // A ring guarantees connectivity and no clean sweeps.
    for i in 0..models {
        let j = (i + 1) % models;
        out.push(ComparisonRecord::new(
            &format!("ring{i}a"),
            "s",
            &names[i],
            &names[j],
            Verdict::AWins,
            Rater::Human,
        ));
        out.push(ComparisonRecord::new(
            &format!("ring{i}b"),
            "s",
            &names[i],
            &names[j],
            Verdict::BWins,
            Rater::Human,
        ));
    }
    for g in 0..games {
        let i = rng.below(models as u64) as usize;
        let mut j = rng.below(models as u64 - 1) as usize;
        if j >= i {
            j += 1;
        }
        let verdict = match rng.below(5) {
            0 => Verdict::Tie,
            1 | 2 => Verdict::AWins,
            _ => Verdict::BWins,
        };
        out.push(ComparisonRecord::new(
            &format!("g{g}"),
            "s",
            &names[i],
            &names[j],
            verdict,
            Rater::Human,
        ));
    }
    out
}

#[test]
fn random_fits_agree_with_mm_oracle() {
    let mut rng = XorShift64Star::new(3);
    for _ in 0..20 {
        let k = 3 + rng.below(4) as usize;
        let records = random_records(&mut rng, k, 60);
        let lb = fit_leaderboard(
            &records,
            &FitConfig {
                prior: Prior::Fixed(0.0),
                ..FitConfig::default()
            },
        )
        .unwrap();
        let names: Vec<String> = (0..k).map(|i| format!("m{i}")).collect();
        let mut wins = vec![vec![0.0; k]; k];
        for r in &records {
            let a = names.iter().position(|n| *n == r.model_a).unwrap();
            let b = names.iter().position(|n| *n == r.model_b).unwrap();
            match r.verdict {
                Verdict::AWins => wins[a][b] += 1.0,
                Verdict::BWins => wins[b][a] += 1.0,
                Verdict::Tie => {
                    wins[a][b] += 0.5;
                    wins[b][a] += 0.5;
                }
            }
        }
        let oracle = bt_mm(&wins);
        for (i, n) in names.iter().enumerate() {
            assert!((lb.ratings[n] - (1000.0 + ELO_PER_UNIT * oracle[i])).abs() < 0.5);
        }
        assert!((mean(lb.ratings.values().copied()) - 1000.0).abs() < 1e-6);
        assert!(lb.converged);
    }
}

#[test]
fn flipping_every_verdict_reverses_the_order() {
    let mut rng = XorShift64Star::new(4);
    for _ in 0..20 {
        let records = random_records(&mut rng, 5, 80);
        let flipped: Vec<_> = records.iter().map(ComparisonRecord::flipped).collect();
        let a = fit_leaderboard(&records, &FitConfig::default()).unwrap();
        let b = fit_leaderboard(&flipped, &FitConfig::default()).unwrap();
        for (m, ra) in &a.ratings {
            // Ratings mirror around the anchor.
            assert!((ra - 1000.0 + (b.ratings[m] - 1000.0)).abs() < 1e-6);
        }
        for (x, rx) in &a.ratings {
            for (y, ry) in &a.ratings {
                if rx > ry && (rx - ry) > 1e-6 {
                    assert!(b.ratings[x] < b.ratings[y]);
                }
            }
        }
    }
}

#[test]
fn relabeling_permutes_ratings() {
    let mut rng = XorShift64Star::new(5);
    let records = random_records(&mut rng, 4, 50);
    let rename = |m: &str| format!("renamed-{}", 9 - m[1..].parse::<usize>().unwrap());
    let renamed: Vec<_> = records
        .iter()
        .map(|r| ComparisonRecord {
            model_a: rename(&r.model_a),
            model_b: rename(&r.model_b),
            ..r.clone()
        })
        .collect();
    let a = fit_leaderboard(&records, &FitConfig::default()).unwrap();
    let b = fit_leaderboard(&renamed, &FitConfig::default()).unwrap();
    for (m, r) in &a.ratings {
        assert!((b.ratings[&rename(m)] - r).abs() < 1e-6);
    }
}

#[test]
fn duplicating_records_leaves_mle_unchanged() {
    let mut rng = XorShift64Star::new(6);
    let records = random_records(&mut rng, 5, 70);
    let mut doubled = records.clone();
    doubled.extend(records.iter().cloned());
    let cfg = FitConfig {
        prior: Prior::Fixed(0.0),
        ..FitConfig::default()
    };
    let a = fit_leaderboard(&records, &cfg).unwrap();
    let b = fit_leaderboard(&doubled, &cfg).unwrap();
    for (m, r) in &a.ratings {
        assert!((b.ratings[m] - r).abs() < 1e-6);
    }
}

#[test]
fn an_extra_win_never_lowers_strength() {
    let mut rng = XorShift64Star::new(10);
    for trial in 0..20 {
        let records = random_records(&mut rng, 4, 40);
        let before = fit_leaderboard(&records, &FitConfig::default()).unwrap();
        let mut more = records.clone();
        let opponent = format!("m{}", 1 + trial % 3);
        more.push(ComparisonRecord::new(
            "extra",
            "s",
            "m0",
            &opponent,
            Verdict::AWins,
            Rater::Human,
        ));
        let after = fit_leaderboard(&more, &FitConfig::default()).unwrap();
        assert!(after.strengths["m0"] - (after.strengths.values().sum::<f64>() / 4.0) >= before.strengths["m0"] - 1e-9);
    }
}
