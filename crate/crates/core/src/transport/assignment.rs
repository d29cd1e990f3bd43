//! Exact combinatorial solvers: square assignment and min-cost transport.

use super::Coupling;
use crate::error::Result;

/// Optimal assignment for a dense `n x n` cost matrix.
///
/// Returns the column assigned to each row, using shortest augmenting paths
/// with lowest-index tie-breaking. Exact and deterministic.
pub fn assignment(n: usize, cost: &[f64]) -> Vec<usize> {
    assignment_sap(n, cost)
}

/// Shortest augmenting paths with dual potentials, `O(n^3)`.
pub fn assignment_sap(n: usize, cost: &[f64]) -> Vec<usize> {
    assignment_sap_warm(n, cost, None).0
}

/// Shortest augmenting paths started from column potentials `v0`.
///
/// Any starting potentials give the exact optimum; good ones shorten the
/// augmenting paths. Row potentials are set to `min_j c_ij - v0_j` so that the
/// starting dual is feasible. Returns the assignment and final column duals.
pub fn assignment_sap_warm(n: usize, cost: &[f64], v0: Option<&[f64]>) -> (Vec<usize>, Vec<f64>) {
    const INF: f64 = f64::INFINITY;
    // 1-based arrays; index 0 is the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    if let Some(v0) = v0 {
        for j in 0..n {
            v[j + 1] = v0[j];
        }
        for i in 0..n {
            let row = &cost[i * n..(i + 1) * n];
            u[i + 1] = (0..n).map(|j| row[j] - v0[j]).fold(INF, f64::min);
        }
    }
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![INF; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|x| *x = INF);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let ui0 = u[i0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - ui0 - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0usize; n];
    for j in 1..=n {
        out[p[j] - 1] = j - 1;
    }
    (out, v[1..].to_vec())
}

/// Exact min-cost transport between weights `a` (rows) and `b` (columns).
///
/// Successive shortest paths with Johnson potentials and a dense Dijkstra.
/// Costs must be nonnegative.
pub fn min_cost_flow(a: &[f64], b: &[f64], cost: &[f64]) -> Result<Vec<Coupling>> {
    let (n, m) = (a.len(), b.len());
    let nodes = n + m;
    let total: f64 = a.iter().sum();
    let tol = total * 1e-15;
    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    // Positive flows per column: (row, flow).
    let mut flows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    let mut pot = vec![0.0; nodes];
    let mut dist = vec![0.0; nodes];
    let mut prev = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];
    let mut remaining = total;

    while remaining > tol * (n + m) as f64 {
        dist.iter_mut().for_each(|x| *x = f64::INFINITY);
        prev.iter_mut().for_each(|x| *x = usize::MAX);
        done.iter_mut().for_each(|x| *x = false);
        for i in 0..n {
            if supply[i] > tol {
                dist[i] = 0.0;
            }
        }
        let mut sink = usize::MAX;
        loop {
            let mut best = f64::INFINITY;
            let mut u = usize::MAX;
            for k in 0..nodes {
                if !done[k] && dist[k] < best {
                    best = dist[k];
                    u = k;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u >= n && demand[u - n] > tol {
                sink = u;
                break;
            }
            if u < n {
                let row = &cost[u * m..(u + 1) * m];
                for j in 0..m {
                    let w = n + j;
                    if done[w] {
                        continue;
                    }
                    let nd = dist[u] + (row[j] + pot[u] - pot[w]).max(0.0);
                    if nd < dist[w] {
                        dist[w] = nd;
                        prev[w] = u;
                    }
                }
            } else {
                let j = u - n;
                for &(i, f) in &flows[j] {
                    if f <= tol || done[i] {
                        continue;
                    }
                    let nd = dist[u] + (-cost[i * m + j] + pot[u] - pot[i]).max(0.0);
                    if nd < dist[i] {
                        dist[i] = nd;
                        prev[i] = u;
                    }
                }
            }
        }
        if sink == usize::MAX {
            break;
        }
        let dt = dist[sink];
        for k in 0..nodes {
            pot[k] += dist[k].min(dt);
        }
        // Walk back to find the bottleneck amount.
        let mut amount = demand[sink - n];
        let mut w = sink;
        while prev[w] != usize::MAX {
            let u = prev[w];
            if u >= n {
                // Reverse edge column u-n -> row w.
                let f = flows[u - n].iter().find(|e| e.0 == w).map_or(0.0, |e| e.1);
                amount = amount.min(f);
            }
            w = u;
        }
        let start = w;
        amount = amount.min(supply[start]);
        let mut w = sink;
        while prev[w] != usize::MAX {
            let u = prev[w];
            if u < n {
                let j = w - n;
                match flows[j].iter_mut().find(|e| e.0 == u) {
                    Some(e) => e.1 += amount,
                    None => flows[j].push((u, amount)),
                }
            } else {
                let j = u - n;
                if let Some(pos) = flows[j].iter().position(|e| e.0 == w) {
                    flows[j][pos].1 -= amount;
                    if flows[j][pos].1 <= tol {
                        flows[j].swap_remove(pos);
                    }
                }
            }
            w = u;
        }
        supply[start] -= amount;
        if supply[start] <= tol {
            supply[start] = 0.0;
        }
        demand[sink - n] -= amount;
        if demand[sink - n] <= tol {
            demand[sink - n] = 0.0;
        }
        remaining -= amount;
    }

    let mut out: Vec<Coupling> = flows
        .iter()
        .enumerate()
        .flat_map(|(j, col)| col.iter().filter(|e| e.1 > 0.0).map(move |&(i, f)| Coupling { source: i, target: j, mass: f }))
        .collect();
    out.sort_by_key(|c| (c.source, c.target));
    Ok(out)
}
