//! Word Mover's Distance between two traces.
//!
//! Each trace is a uniform distribution over its frames (mass `1/n` per
//! candidate frame, `1/m` per reference frame) and the ground cost is the
//! Euclidean distance. The problem is solved exactly: masses are scaled to
//! integers (`m` units per candidate frame, `n` per reference frame) and handed
//! to an integral transportation solver.

use alloc::vec::Vec;

use super::{check_pair, transport, MetricError};
use crate::trace::{euclidean, Embedding};

/// A feasible coupling of the two frame distributions.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    mass: Vec<f64>,
    row_masses: Vec<f64>,
    col_masses: Vec<f64>,
}

impl TransportPlan {
    /// Mass moved from candidate frame `i` to reference frame `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.cols + j]
    }

    /// Candidate frame count `n`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Reference frame count `m`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major plan entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.mass
    }

    /// Dense row vectors, for export.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.mass.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// Required row sums.
    pub fn row_masses(&self) -> &[f64] {
        &self.row_masses
    }

    /// Required column sums.
    pub fn col_masses(&self) -> &[f64] {
        &self.col_masses
    }
}

/// Outcome of [`wmd`].
#[derive(Debug, Clone, PartialEq)]
pub struct WmdResult {
    /// Optimal transport cost; lower is better.
    pub distance: f64,
    /// A plan attaining `distance`.
    pub plan: TransportPlan,
}

fn cost_matrix(candidate: &[Embedding], reference: &[Embedding]) -> Vec<f64> {
    candidate
        .iter()
        .flat_map(|x| reference.iter().map(move |y| euclidean(x.as_slice(), y.as_slice())))
        .collect()
}

/// Exact optimal transport distance between the frame sets of two traces.
pub fn wmd(candidate: &[Embedding], reference: &[Embedding]) -> Result<WmdResult, MetricError> {
    check_pair(candidate, reference)?;
    let (n, m) = (candidate.len(), reference.len());
    let cost = cost_matrix(candidate, reference);
    let supply = alloc::vec![m as u64; n];
    let demand = alloc::vec![n as u64; m];
    let flow = transport::solve(&supply, &demand, &cost)?;

    let total = (n * m) as f64;
    let mass: Vec<f64> = flow.iter().map(|&f| f as f64 / total).collect();
    // Integer flows keep the sum exact up to one final division.
    let weighted: f64 = flow.iter().zip(&cost).map(|(&f, c)| f as f64 * c).sum();
    Ok(WmdResult {
        distance: weighted / total,
        plan: TransportPlan {
            rows: n,
            cols: m,
            mass,
            row_masses: alloc::vec![1.0 / n as f64; n],
            col_masses: alloc::vec![1.0 / m as f64; m],
        },
    })
}

/// Permutation brute force for equal lengths `n = m <= 4`.
///
/// Uniform equal-mass transport always has a permutation among its optima, so
/// the minimum over all `n!` assignments of the mean matched distance is the
/// exact WMD. Used as an independent check of [`wmd`].
pub fn wmd_bruteforce(candidate: &[Embedding], reference: &[Embedding]) -> Result<f64, MetricError> {
    check_pair(candidate, reference)?;
    let n = candidate.len();
    if n != reference.len() || n > 4 {
        return Err(MetricError::BruteForceDomain {
            candidate: n,
            reference: reference.len(),
        });
    }
    let cost = cost_matrix(candidate, reference);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let total: f64 = p.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
        best = best.min(total / n as f64);
    });
    Ok(best)
}

fn permute(items: &mut [usize], start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for k in start..items.len() {
        items.swap(start, k);
        permute(items, start + 1, visit);
        items.swap(start, k);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn e(v: &[f64]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    #[test]
    fn identical_traces_cost_nothing() {
        let x = vec![e(&[1.0, 2.0]), e(&[0.5, -1.0]), e(&[3.0, 0.0])];
        assert_eq!(wmd(&x, &x).unwrap().distance, 0.0);
    }

    #[test]
    fn frame_order_is_ignored() {
        let (e1, e2) = (e(&[1.0, 0.0]), e(&[0.0, 1.0]));
        let r = wmd(&[e2.clone(), e1.clone()], &[e1, e2]).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.plan.get(0, 1), 0.5);
        assert_eq!(r.plan.get(1, 0), 0.5);
    }

    #[test]
    fn single_orthogonal_frames() {
        let r = wmd(&[e(&[1.0, 0.0])], &[e(&[0.0, 1.0])]).unwrap();
        assert!((r.distance - core::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn plan_marginals_for_unequal_lengths() {
        let cand = vec![e(&[1.0, 0.0]), e(&[0.0, 1.0])];
        let refr = vec![e(&[1.0, 0.1]), e(&[0.2, 1.0]), e(&[0.7, 0.7])];
        let r = wmd(&cand, &refr).unwrap();
        for i in 0..2 {
            let s: f64 = (0..3).map(|j| r.plan.get(i, j)).sum();
            assert!((s - 0.5).abs() < 1e-9);
        }
        for j in 0..3 {
            let s: f64 = (0..2).map(|i| r.plan.get(i, j)).sum();
            assert!((s - 1.0 / 3.0).abs() < 1e-9);
        }
        assert!(r.plan.as_slice().iter().all(|&t| t >= 0.0));
        let attained: f64 = (0..2)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| r.plan.get(i, j) * euclidean(cand[i].as_slice(), refr[j].as_slice()))
            .sum();
        assert!((attained - r.distance).abs() < 1e-9);
    }

    #[test]
    fn bruteforce_domain() {
        let x = vec![e(&[1.0]); 5];
        assert!(matches!(
            wmd_bruteforce(&x, &x),
            Err(MetricError::BruteForceDomain { .. })
        ));
        assert!(matches!(
            wmd_bruteforce(&x[..2], &x[..3]),
            Err(MetricError::BruteForceDomain { .. })
        ));
        let a = [e(&[1.0, 2.0])];
        let b = [e(&[4.0, 6.0])];
        assert_eq!(wmd_bruteforce(&a, &b), Ok(5.0));
    }

    #[test]
    fn bruteforce_swap_is_zero() {
        let (e1, e2) = (e(&[1.0, 0.0]), e(&[0.0, 1.0]));
        assert_eq!(wmd_bruteforce(&[e1.clone(), e2.clone()], &[e2, e1]), Ok(0.0));
    }

    #[test]
    fn fifty_by_fifty_solves() {
        let cand: Vec<Embedding> = (0..50)
            .map(|k| e(&[1.0, (k as f64 * 0.37).sin(), (k as f64).cos()]))
            .collect();
        let refr: Vec<Embedding> = (0..47)
            .map(|k| e(&[0.5, (k as f64 * 0.11).cos(), (k as f64 * 2.0).sin()]))
            .collect();
        let r = wmd(&cand, &refr).unwrap();
        assert!(r.distance > 0.0);
    }
}
