mod common;

use common::*;
use proptest::prelude::*;
use uitrace_core::metrics::{dtw, ebleu, soft_precision, wmd, wmd_bruteforce, EbleuConfig};
use uitrace_core::rng::XorShift64Star;
use uitrace_core::Embedding;

/// Householder reflection `I - 2 v v^T / |v|^2`, an orthogonal map.
fn reflect(frames: &[Embedding], v: &[f64]) -> Vec<Embedding> {
    let vv: f64 = v.iter().map(|x| x * x).sum();
    frames
        .iter()
        .map(|e| {
            let dot: f64 = e.as_slice().iter().zip(v).map(|(a, b)| a * b).sum();
            let out = e
                .as_slice()
                .iter()
                .zip(v)
                .map(|(a, b)| a - 2.0 * dot / vv * b)
                .collect();
            Embedding::new(out).unwrap()
        })
        .collect()
}

#[test]
fn dtw_matches_path_enumeration() {
    let mut rng = XorShift64Star::new(7);
    for _ in 0..500 {
        let n = 1 + rng.below(6) as usize;
        let m = 1 + rng.below(6) as usize;
        let d = 1 + rng.below(8) as usize;
        let c = random_trace(&mut rng, n, d);
        let r = random_trace(&mut rng, m, d);
        let got = dtw(&c, &r, 1.0).unwrap();
        // Even the full band is `m` wide, so `n > 2m` admits no in-band path.
        let w = uitrace_core::metrics::dtw::band_width(m, 1.0);
        match dtw_enumerate(&c, &r, w) {
            Some(want) => {
                assert!(!got.infeasible);
                assert!((got.distance - want).abs() <= 1e-9, "{} vs {}", got.distance, want);
            }
            None => {
                assert!(got.infeasible && n > 2 * m);
                assert_eq!(got.distance, m as f64);
            }
        }
    }
}

#[test]
fn banded_dtw_matches_banded_enumeration() {
    let mut rng = XorShift64Star::new(8);
    for _ in 0..300 {
        let n = 1 + rng.below(6) as usize;
        let m = 1 + rng.below(6) as usize;
        let frac = 0.05 + 0.95 * rng.next_f64();
        let c = random_trace(&mut rng, n, 3);
        let r = random_trace(&mut rng, m, 3);
        let got = dtw(&c, &r, frac).unwrap();
        let w = uitrace_core::metrics::dtw::band_width(m, frac);
        match dtw_enumerate(&c, &r, w) {
            Some(want) => assert!((got.distance - want).abs() <= 1e-9),
            None => {
                assert!(got.infeasible);
                assert_eq!(got.distance, m as f64);
            }
        }
    }
}

#[test]
fn dtw_fallback_for_large_length_gap() {
    let mut rng = XorShift64Star::new(9);
    let c = random_trace(&mut rng, 10, 4);
    let r = random_trace(&mut rng, 20, 4);
    let out = dtw(&c, &r, 0.10).unwrap();
    assert!(out.infeasible);
    assert_eq!(out.distance, 20.0);
}

#[test]
fn wmd_matches_permutation_bruteforce() {
    let mut rng = XorShift64Star::new(11);
    for _ in 0..200 {
        let n = 1 + rng.below(4) as usize;
        let d = 1 + rng.below(8) as usize;
        let c: Vec<Embedding> = (0..n).map(|_| random_vector(&mut rng, d)).collect();
        let r: Vec<Embedding> = (0..n).map(|_| random_vector(&mut rng, d)).collect();
        let exact = wmd(&c, &r).unwrap().distance;
        let brute = wmd_bruteforce(&c, &r).unwrap();
        assert!((exact - brute).abs() <= 1e-9, "{exact} vs {brute}");
    }
}

#[test]
fn ebleu_length_two_equals_k2_computation() {
    let mut rng = XorShift64Star::new(12);
    for _ in 0..100 {
        let d = 2 + rng.below(6) as usize;
        let c = random_trace(&mut rng, 2, d);
        let r = random_trace(&mut rng, 2, d);
        let got = ebleu(&c, &r, &EbleuConfig::default()).unwrap();
        assert_eq!(got.orders_used, vec![1, 2]);
        assert!((got.score - ebleu_k2(&c, &r)).abs() <= 1e-12);
    }
}

#[test]
fn ebleu_k2_oracle_on_longer_traces() {
    let mut rng = XorShift64Star::new(13);
    let cfg = EbleuConfig::uniform(2).unwrap();
    for _ in 0..100 {
        let n = 2 + rng.below(6) as usize;
        let m = 2 + rng.below(6) as usize;
        let c = random_trace(&mut rng, n, 3);
        let r = random_trace(&mut rng, m, 3);
        let got = ebleu(&c, &r, &cfg).unwrap().score;
        assert!((got - ebleu_k2(&c, &r)).abs() <= 1e-12);
    }
}

fn seeds() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dtw_self_distance_is_zero(seed in seeds(), n in 1usize..20, d in 1usize..10) {
        let mut rng = XorShift64Star::new(seed);
        let x = random_trace(&mut rng, n, d);
        prop_assert_eq!(dtw(&x, &x, 0.1).unwrap().distance, 0.0);
    }

    #[test]
    fn widening_band_never_increases_distance(seed in seeds(), n in 1usize..12, m in 1usize..12) {
        let mut rng = XorShift64Star::new(seed);
        let c = random_trace(&mut rng, n, 4);
        let r = random_trace(&mut rng, m, 4);
        let mut last = f64::INFINITY;
        for frac in [0.1, 0.2, 0.3, 0.5, 0.75, 1.0] {
            let out = dtw(&c, &r, frac).unwrap();
            if !out.infeasible {
                prop_assert!(out.distance >= 0.0);
                prop_assert!(out.distance <= last + 1e-12);
                last = out.distance;
            }
        }
    }

    #[test]
    fn dtw_is_rotation_invariant(seed in seeds(), n in 1usize..8, m in 1usize..8, d in 2usize..8) {
        let mut rng = XorShift64Star::new(seed);
        let c = random_trace(&mut rng, n, d);
        let r = random_trace(&mut rng, m, d);
        let v = random_unit(&mut rng, d);
        let a = dtw(&c, &r, 1.0).unwrap().distance;
        let b = dtw(&reflect(&c, v.as_slice()), &reflect(&r, v.as_slice()), 1.0).unwrap().distance;
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn soft_precision_is_rotation_invariant(seed in seeds(), n in 1usize..7, m in 1usize..7, d in 2usize..8) {
        let mut rng = XorShift64Star::new(seed);
        let c = random_trace(&mut rng, n, d);
        let r = random_trace(&mut rng, m, d);
        let v = random_unit(&mut rng, d);
        let (rc, rr) = (reflect(&c, v.as_slice()), reflect(&r, v.as_slice()));
        for k in 1..=n.min(m).min(4) {
            let a = soft_precision(&c, &r, k).unwrap();
            let b = soft_precision(&rc, &rr, k).unwrap();
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn ebleu_bounded_and_self_one(seed in seeds(), n in 1usize..15, m in 1usize..15) {
        let mut rng = XorShift64Star::new(seed);
        let c = random_trace(&mut rng, n, 5);
        let r = random_trace(&mut rng, m, 5);
        let s = ebleu(&c, &r, &EbleuConfig::default()).unwrap().score;
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(ebleu(&c, &c, &EbleuConfig::default()).unwrap().score, 1.0);
    }

    #[test]
    fn wmd_symmetric_and_permutation_invariant(seed in seeds(), n in 1usize..9, m in 1usize..9, d in 1usize..6) {
        let mut rng = XorShift64Star::new(seed);
        let c: Vec<Embedding> = (0..n).map(|_| random_vector(&mut rng, d)).collect();
        let r: Vec<Embedding> = (0..m).map(|_| random_vector(&mut rng, d)).collect();
        let ab = wmd(&c, &r).unwrap().distance;
        let ba = wmd(&r, &c).unwrap().distance;
        prop_assert!((ab - ba).abs() <= 1e-9);
        let mut shuffled = c.clone();
        rng.shuffle(&mut shuffled);
        let mut r2 = r.clone();
        rng.shuffle(&mut r2);
        prop_assert!((wmd(&shuffled, &r2).unwrap().distance - ab).abs() <= 1e-9);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(wmd(&c, &c).unwrap().distance, 0.0);
    }

    #[test]
    fn wmd_triangle_inequality(seed in seeds(), n in 1usize..7, d in 1usize..5) {
        let mut rng = XorShift64Star::new(seed);
        let x: Vec<Embedding> = (0..n).map(|_| random_vector(&mut rng, d)).collect();
        let y: Vec<Embedding> = (0..n).map(|_| random_vector(&mut rng, d)).collect();
        let z: Vec<Embedding> = (0..n).map(|_| random_vector(&mut rng, d)).collect();
        let xz = wmd(&x, &z).unwrap().distance;
        let xy = wmd(&x, &y).unwrap().distance;
        let yz = wmd(&y, &z).unwrap().distance;
        prop_assert!(xz <= xy + yz + 1e-9);
    }

    #[test]
    fn wmd_duplication_invariant(seed in seeds(), n in 1usize..7, m in 1usize..7) {
        let mut rng = XorShift64Star::new(seed);
        let c: Vec<Embedding> = (0..n).map(|_| random_vector(&mut rng, 3)).collect();
        let r: Vec<Embedding> = (0..m).map(|_| random_vector(&mut rng, 3)).collect();
        let double = |v: &[Embedding]| v.iter().flat_map(|e| [e.clone(), e.clone()]).collect::<Vec<_>>();
        let a = wmd(&c, &r).unwrap().distance;
        let b = wmd(&double(&c), &double(&r)).unwrap().distance;
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn wmd_plan_is_feasible(seed in seeds(), n in 1usize..12, m in 1usize..12) {
        let mut rng = XorShift64Star::new(seed);
        let c: Vec<Embedding> = (0..n).map(|_| random_vector(&mut rng, 4)).collect();
        let r: Vec<Embedding> = (0..m).map(|_| random_vector(&mut rng, 4)).collect();
        let out = wmd(&c, &r).unwrap();
        let plan = &out.plan;
        for i in 0..n {
            let s: f64 = (0..m).map(|j| plan.get(i, j)).sum();
            prop_assert!((s - plan.row_masses()[i]).abs() <= 1e-9);
        }
        for j in 0..m {
            let s: f64 = (0..n).map(|i| plan.get(i, j)).sum();
            prop_assert!((s - plan.col_masses()[j]).abs() <= 1e-9);
        }
        let cost: f64 = (0..n)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| {
                let d: f64 = c[i].as_slice().iter().zip(r[j].as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
                plan.get(i, j) * d.sqrt()
            })
            .sum();
        prop_assert!((cost - out.distance).abs() <= 1e-9);
    }
}

#[test]
fn unigram_precision_ignores_order_but_bigrams_do_not() {
    let mut rng = XorShift64Star::new(21);
    let r = random_trace(&mut rng, 6, 4);
    let c = random_trace(&mut rng, 6, 4);
    let mut shuffled = c.clone();
    shuffled.reverse();
    let p1 = soft_precision(&c, &r, 1).unwrap();
    let q1 = soft_precision(&shuffled, &r, 1).unwrap();
    assert!((p1 - q1).abs() <= 1e-12);
    let p2 = soft_precision(&c, &r, 2).unwrap();
    let q2 = soft_precision(&shuffled, &r, 2).unwrap();
    assert!((p2 - q2).abs() > 1e-6, "fixture should distinguish bigram order");
}
