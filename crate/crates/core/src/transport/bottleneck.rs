//! Bottleneck assignment and the L-infinity transport distance.

use std::collections::VecDeque;

use rayon::prelude::*;

use super::{check_masses, sq_dist};
use crate::error::{Error, Result};
use crate::geometry::DiscreteMeasure;

/// Minimal threshold `t` such that a perfect matching uses only entries `<= t`.
///
/// Binary search over the sorted distinct entries with Hopcroft-Karp
/// feasibility tests. Returns the threshold and a matching achieving it.
pub fn bottleneck_assignment(n: usize, cost: &[f64]) -> (f64, Vec<usize>) {
    if n == 0 {
        return (0.0, Vec::new());
    }
    let row_lb = (0..n)
        .map(|i| cost[i * n..(i + 1) * n].iter().copied().fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let col_lb = (0..n)
        .map(|j| (0..n).map(|i| cost[i * n + j]).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let lb = row_lb.max(col_lb);

    // Adjacency lists sorted by cost.
    let adj: Vec<Vec<(f64, u32)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut v: Vec<(f64, u32)> = (0..n).map(|j| (cost[i * n + j], j as u32)).collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            v
        })
        .collect();
    let mut cands: Vec<f64> = cost.iter().copied().filter(|&c| c >= lb).collect();
    cands.par_sort_unstable_by(f64::total_cmp);
    cands.dedup();

    // Exponential search for a feasible threshold, then bisection.
    let mut lo = 0usize;
    let mut step = 1usize;
    let mut hi = loop {
        let probe = (lo + step - 1).min(cands.len() - 1);
        if hopcroft_karp(n, &adj, cands[probe]).is_some() {
            break probe;
        }
        if probe == cands.len() - 1 {
            unreachable!("complete bipartite graph always has a perfect matching");
        }
        lo = probe + 1;
        step *= 2;
    };
    while lo < hi {
        let mid = (lo + hi) / 2;
        if hopcroft_karp(n, &adj, cands[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let m = hopcroft_karp(n, &adj, cands[hi]).expect("feasible threshold");
    (cands[hi], m)
}

/// Perfect matching using entries `<= t`, if one exists.
fn hopcroft_karp(n: usize, adj: &[Vec<(f64, u32)>], t: f64) -> Option<Vec<usize>> {
    const NIL: usize = usize::MAX;
    let mut match_l = vec![NIL; n];
    let mut match_r = vec![NIL; n];
    let mut dist = vec![0usize; n];
    let edges = |u: usize| adj[u].iter().take_while(move |e| e.0 <= t).map(|e| e.1 as usize);
    let mut matched = 0;
    loop {
        // BFS layering from free left vertices.
        let mut queue = VecDeque::new();
        for u in 0..n {
            if match_l[u] == NIL {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for v in edges(u) {
                let w = match_r[v];
                if w == NIL {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        // Iterative DFS along the layering.
        let mut it = vec![0usize; n];
        for s in 0..n {
            if match_l[s] != NIL {
                continue;
            }
            let mut stack = vec![s];
            let mut path_found = false;
            while let Some(&u) = stack.last() {
                let list = &adj[u];
                let mut advanced = false;
                while it[u] < list.len() && list[it[u]].0 <= t {
                    let v = list[it[u]].1 as usize;
                    it[u] += 1;
                    let w = match_r[v];
                    if w == NIL {
                        // Augment along the stack.
                        let mut v_cur = v;
                        for &x in stack.iter().rev() {
                            let prev = match_l[x];
                            match_l[x] = v_cur;
                            match_r[v_cur] = x;
                            v_cur = prev;
                        }
                        path_found = true;
                        break;
                    } else if dist[w] == dist[u] + 1 {
                        stack.push(w);
                        advanced = true;
                        break;
                    }
                }
                if path_found {
                    break;
                }
                if !advanced {
                    dist[u] = usize::MAX;
                    stack.pop();
                }
            }
            if path_found {
                matched += 1;
            }
        }
    }
    let _ = matched;
    if match_l.iter().all(|&v| v != NIL) {
        Some(match_l)
    } else {
        None
    }
}

/// L-infinity transport distance between equal-count, equal-weight clouds.
pub fn linf_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    check_masses(mu, nu)?;
    if mu.len() != nu.len() || !mu.has_equal_weights() || !nu.has_equal_weights() {
        return Err(Error::InvalidInput(
            "L-infinity distance needs equal-count, equal-weight measures".into(),
        ));
    }
    let n = mu.len();
    super::check_size(n, n)?;
    let cost = super::cost_matrix(mu, nu, |x, y| sq_dist(x, y).sqrt());
    Ok(bottleneck_assignment(n, &cost).0)
}
