//! Independent reference computations used to check the library.
//!
//! Nothing here calls into the metric or ranking implementations; the
//! oracles only share the input types.
#![allow(dead_code)]

use uitrace_core::rng::XorShift64Star;
use uitrace_core::Embedding;

pub fn random_unit(rng: &mut XorShift64Star, dim: usize) -> Embedding {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return Embedding::new(v.into_iter().map(|x| x / n).collect()).unwrap();
        }
    }
}

pub fn random_vector(rng: &mut XorShift64Star, dim: usize) -> Embedding {
    Embedding::new((0..dim).map(|_| rng.uniform(-2.0, 2.0)).collect()).unwrap()
}

pub fn random_trace(rng: &mut XorShift64Star, len: usize, dim: usize) -> Vec<Embedding> {
    (0..len).map(|_| random_unit(rng, dim)).collect()
}

fn cosine_distance(a: &Embedding, b: &Embedding) -> f64 {
    let (a, b) = (a.as_slice(), b.as_slice());
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    1.0 - dot / (na * nb)
}

/// Minimum path cost over every monotone, continuous path from the first to
/// the last pair with `|i - j| <= band`, by explicit enumeration.
pub fn dtw_enumerate(candidate: &[Embedding], reference: &[Embedding], band: usize) -> Option<f64> {
    fn walk(i: usize, j: usize, acc: f64, c: &[Embedding], r: &[Embedding], band: usize, best: &mut Option<f64>) {
        if i.abs_diff(j) > band {
            return;
        }
        let acc = acc + cosine_distance(&c[i], &r[j]);
        if i == c.len() - 1 && j == r.len() - 1 {
            *best = Some(best.map_or(acc, |b: f64| b.min(acc)));
            return;
        }
        if i + 1 < c.len() && j + 1 < r.len() {
            walk(i + 1, j + 1, acc, c, r, band, best);
        }
        if j + 1 < r.len() {
            walk(i, j + 1, acc, c, r, band, best);
        }
        if i + 1 < c.len() {
            walk(i + 1, j, acc, c, r, band, best);
        }
    }
    let mut best = None;
    walk(0, 0, 0.0, candidate, reference, band, &mut best);
    best
}

fn clipped_cos(a: &Embedding, b: &Embedding) -> f64 {
    (1.0 - cosine_distance(a, b)).max(0.0)
}

fn soft_precision_direct(c: &[Embedding], r: &[Embedding], k: usize) -> f64 {
    let mut sum = 0.0;
    let grams = c.len() - k + 1;
    for i in 0..grams {
        let mut best: f64 = 0.0;
        for j in 0..=r.len() - k {
            let mut s = 0.0;
            for t in 0..k {
                s += clipped_cos(&c[i + t], &r[j + t]);
            }
            best = best.max(s / k as f64);
        }
        sum += best;
    }
    sum / grams as f64
}

/// eBLEU with K = 2, uniform weights and a 50% length tolerance, written out
/// longhand.
pub fn ebleu_k2(c: &[Embedding], r: &[Embedding]) -> f64 {
    let p1 = soft_precision_direct(c, r, 1);
    let p2 = soft_precision_direct(c, r, 2);
    let (n, m) = (c.len() as f64, r.len() as f64);
    let b = if (n - m).abs() <= 0.5 * m {
        1.0
    } else {
        (1.0 - n.max(m) / n.min(m)).exp()
    };
    if p1 == 0.0 || p2 == 0.0 {
        return 0.0;
    }
    b * (p1 * p2).sqrt()
}

/// Strength gap `theta_A - theta_B` for A winning every one of `wins` games,
/// with L2 prior `lambda`, by scalar Newton on the penalized likelihood
/// `wins * ln(sigmoid(d)) - lambda * d^2 / 4`.
pub fn two_model_gap(wins: f64, lambda: f64) -> f64 {
    let sigmoid = |x: f64| 1.0 / (1.0 + (-x).exp());
    let mut d = 0.0;
    for _ in 0..200 {
        let s = sigmoid(d);
        let grad = wins * (1.0 - s) - lambda * d / 2.0;
        let hess = -wins * s * (1.0 - s) - lambda / 2.0;
        let step = grad / hess;
        d -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    d
}

/// Unpenalized Bradley-Terry MLE by the minorization-maximization updates
/// `p_i <- W_i / sum_j N_ij / (p_i + p_j)`. Returns centred log-strengths.
/// `wins[i][j]` counts wins of `i` over `j`.
pub fn bt_mm(wins: &[Vec<f64>]) -> Vec<f64> {
    let k = wins.len();
    let mut p = vec![1.0; k];
    for _ in 0..200_000 {
        let mut next = vec![0.0; k];
        for i in 0..k {
            let w: f64 = wins[i].iter().sum();
            let denom: f64 = (0..k)
                .filter(|&j| j != i)
                .map(|j| (wins[i][j] + wins[j][i]) / (p[i] + p[j]))
                .sum();
            next[i] = w / denom;
        }
        let g: f64 = next.iter().map(|x: &f64| x.ln()).sum::<f64>() / k as f64;
        next.iter_mut().for_each(|x| *x /= g.exp());
        let delta = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        p = next;
        if delta < 1e-14 {
            break;
        }
    }
    let logs: Vec<f64> = p.iter().map(|x| x.ln()).collect();
    let mean = logs.iter().sum::<f64>() / k as f64;
    logs.into_iter().map(|x| x - mean).collect()
}

pub const ELO_PER_UNIT: f64 = 400.0 / std::f64::consts::LN_10;

/// Rank columns of a seven-model Elo leaderboard, one rank per model in a
/// fixed model order, for human raters and four automatic raters.
pub mod elo_ranks {
    pub const HUMAN: [usize; 7] = [1, 5, 6, 7, 3, 4, 2];
    pub const DTW: [usize; 7] = [1, 5, 7, 2, 3, 4, 6];
    pub const EBLEU: [usize; 7] = [1, 5, 7, 3, 2, 4, 6];
    pub const WMD: [usize; 7] = [1, 5, 7, 6, 3, 4, 2];
    pub const MLLM: [usize; 7] = [1, 2, 7, 6, 5, 4, 3];
}

/// Rank columns of the same seven models ordered by median metric score,
/// listed in human Elo order (so the human column is 1..7), with the WMD
/// medians behind the WMD column.
pub mod median_ranks {
    pub const HUMAN: [usize; 7] = [1, 2, 3, 4, 5, 6, 7];
    pub const DTW: [usize; 7] = [2, 7, 1, 6, 5, 4, 3];
    pub const EBLEU: [usize; 7] = [1, 4, 2, 7, 5, 6, 3];
    pub const WMD: [usize; 7] = [1, 2, 4, 3, 7, 6, 5];
    pub const WMD_MEDIANS: [f64; 7] = [0.603, 0.640, 0.668, 0.663, 0.691, 0.687, 0.686];
}
