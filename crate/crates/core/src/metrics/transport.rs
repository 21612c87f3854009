//! Exact balanced transportation solver.
//!
//! Successive shortest augmenting paths with Johnson potentials on the
//! bipartite residual network. Supplies and demands are integers, so every
//! intermediate flow is integral and the final plan is a vertex of the
//! transportation polytope.

use alloc::vec;
use alloc::vec::Vec;

use super::MetricError;

/// Solves `min sum cost[i*m+j] * flow[i*m+j]` subject to row sums `supply`
/// and column sums `demand`. Costs must be finite and non-negative.
pub(crate) fn solve(supply: &[u64], demand: &[u64], cost: &[f64]) -> Result<Vec<u64>, MetricError> {
    let (n, m) = (supply.len(), demand.len());
    if cost.len() != n * m {
        return Err(MetricError::Solver("cost matrix has the wrong shape"));
    }
    if supply.iter().sum::<u64>() != demand.iter().sum::<u64>() {
        return Err(MetricError::Solver("unbalanced problem"));
    }
    if cost.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(MetricError::Solver("costs must be finite and non-negative"));
    }

    let mut flow = vec![0u64; n * m];
    let mut supply_left = supply.to_vec();
    let mut demand_left = demand.to_vec();
    // Nodes: rows 0..n, columns n..n+m.
    let mut potential = vec![0.0f64; n + m];
    // Potential of the implicit sink joined to every column with demand left.
    let mut sink_potential = 0.0f64;
    let mut dist = vec![f64::INFINITY; n + m];
    let mut parent = vec![usize::MAX; n + m];
    let mut done = vec![false; n + m];

    let max_rounds = 4 * (n + m) * (n + m) + 16;
    for _ in 0..max_rounds {
        if supply_left.iter().all(|&s| s == 0) {
            return Ok(flow);
        }
        dist.fill(f64::INFINITY);
        parent.fill(usize::MAX);
        done.fill(false);
        for (i, &s) in supply_left.iter().enumerate() {
            if s > 0 {
                dist[i] = 0.0;
            }
        }

        // Dense Dijkstra on reduced costs.
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..n + m {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < n {
                for j in 0..m {
                    let v = n + j;
                    let rc = (cost[u * m + j] + potential[u] - potential[v]).max(0.0);
                    if dist[u] + rc < dist[v] {
                        dist[v] = dist[u] + rc;
                        parent[v] = u;
                    }
                }
            } else {
                let j = u - n;
                for i in 0..n {
                    if flow[i * m + j] > 0 {
                        let rc = (potential[u] - potential[i] - cost[i * m + j]).max(0.0);
                        if dist[u] + rc < dist[i] {
                            dist[i] = dist[u] + rc;
                            parent[i] = u;
                        }
                    }
                }
            }
        }

        let to_sink = |j: usize| dist[n + j] + (potential[n + j] - sink_potential).max(0.0);
        let Some(sink) = (0..m)
            .filter(|&j| demand_left[j] > 0 && dist[n + j].is_finite())
            .min_by(|&a, &b| to_sink(a).total_cmp(&to_sink(b)))
            .map(|j| n + j)
        else {
            return Err(MetricError::Solver("no augmenting path"));
        };

        let cap = to_sink(sink - n);
        for v in 0..n + m {
            potential[v] += dist[v].min(cap);
        }
        sink_potential += cap;

        let mut amount = demand_left[sink - n];
        let mut v = sink;
        while parent[v] != usize::MAX {
            let u = parent[v];
            if u >= n {
                amount = amount.min(flow[v * m + (u - n)]);
            }
            v = u;
        }
        amount = amount.min(supply_left[v]);

        let source = v;
        let mut v = sink;
        while parent[v] != usize::MAX {
            let u = parent[v];
            if u < n {
                flow[u * m + (v - n)] += amount;
            } else {
                flow[v * m + (u - n)] -= amount;
            }
            v = u;
        }
        supply_left[source] -= amount;
        demand_left[sink - n] -= amount;
    }
    Err(MetricError::Solver("iteration limit reached"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_picks_cheaper_diagonal() {
        let flow = solve(&[1, 1], &[1, 1], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(flow, vec![0, 1, 1, 0]);
    }

    #[test]
    fn unequal_sizes_respect_marginals() {
        let supply = [3, 3];
        let demand = [2, 2, 2];
        let cost = [0.0, 1.0, 2.0, 2.0, 1.0, 0.0];
        let flow = solve(&supply, &demand, &cost).unwrap();
        for i in 0..2 {
            assert_eq!(flow[i * 3..i * 3 + 3].iter().sum::<u64>(), supply[i]);
        }
        for j in 0..3 {
            assert_eq!(flow[j] + flow[3 + j], demand[j]);
        }
        let total: f64 = flow.iter().zip(&cost).map(|(f, c)| *f as f64 * c).sum();
        assert_eq!(total, 2.0);
    }

    #[test]
    fn requires_rerouting_through_reverse_edges() {
        // Greedy row-by-row assignment is suboptimal here.
        let cost = [1.0, 2.0, 1.0, 10.0];
        let flow = solve(&[1, 1], &[1, 1], &cost).unwrap();
        assert_eq!(flow, vec![0, 1, 1, 0]);
    }

    #[test]
    fn rejects_unbalanced() {
        assert!(solve(&[1], &[2], &[0.0]).is_err());
    }
}
