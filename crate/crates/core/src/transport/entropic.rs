//! Log-domain Sinkhorn iteration with epsilon scaling.

use serde::Serialize;

use super::{check_masses, cost_matrix, sq_dist, Coupling, TransportPlan};
use crate::error::{Error, Result};
use crate::geometry::DiscreteMeasure;

/// Schedule and stopping rule for [`solve_entropic`].
#[derive(Clone, Debug)]
pub struct EntropicOptions {
    /// Final regularization relative to the largest cost entry.
    pub epsilon_rel: f64,
    /// Geometric decrease factor of the regularization schedule.
    pub scaling: f64,
    /// Target on the L1 row-marginal error of the scaling iteration,
    /// relative to the mass. The returned plan is then rounded onto the
    /// exact marginals.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EntropicOptions {
    fn default() -> Self {
        Self { epsilon_rel: 1e-4, scaling: 0.7, tol: 1e-6, max_iter: 100_000 }
    }
}

/// Diagnostics of an entropic solve.
#[derive(Clone, Debug, Serialize)]
pub struct EntropicReport {
    pub epsilon: f64,
    pub iterations: usize,
    /// Relative marginal error of the scaling iterate before rounding.
    pub sinkhorn_error: f64,
    /// Largest marginal deviation of the returned plan relative to the mass.
    pub marginal_error: f64,
    /// Linear transport cost of the returned plan.
    pub primal_cost: f64,
    /// Dual objective `sum f a + sum g b`.
    pub dual_value: f64,
    pub duality_gap: f64,
}

fn logsumexp(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + it.map(|x| (x - m).exp()).sum::<f64>().ln()
}

const LEVEL_ITER: usize = 200;
const LEVEL_TOL: f64 = 1e-3;

pub fn solve_entropic(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    opts: &EntropicOptions,
) -> Result<(TransportPlan, EntropicReport)> {
    check_masses(mu, nu)?;
    let (n, m) = (mu.len(), nu.len());
    let c = cost_matrix(mu, nu, sq_dist);
    let cmax = c.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let eps_target = opts.epsilon_rel * cmax;
    let mass = mu.mass();
    let a = mu.weights();
    // Rescale the second marginal so both sum to the same value exactly.
    let bscale = mass / nu.mass();
    let b: Vec<f64> = nu.weights().iter().map(|w| w * bscale).collect();
    let la: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let lb: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];

    let mut eps = cmax;
    let mut iterations = 0usize;
    let mut err = f64::INFINITY;
    loop {
        let last = eps <= eps_target;
        let tol = if last { opts.tol } else { LEVEL_TOL };
        let mut kernel;
        // The truncated kernel is rebuilt every LEVEL_ITER iterations.
        loop {
            kernel = Kernel::build(&c, n, m, &f, &g, eps);
            for k in 1..=LEVEL_ITER {
                kernel.update_f(&mut f, &g, &la, eps);
                kernel.update_g(&mut g, &f, &lb, eps);
                iterations += 1;
                if k % 10 == 0 {
                    err = kernel.row_error(&f, &g, a, eps) / mass;
                    if err < tol || iterations >= opts.max_iter {
                        break;
                    }
                }
            }
            if !last || err < tol || iterations >= opts.max_iter {
                break;
            }
        }
        if last {
            if !(err < opts.tol) {
                return Err(Error::NonConvergence { iterations, residual: err });
            }
            let mut entries: Vec<(usize, usize, f64)> = Vec::new();
            for i in 0..n {
                for (&j, &cij) in kernel.cols[i].iter().zip(&kernel.costs[i]) {
                    let p = ((f[i] + g[j] - cij) / eps).exp();
                    if p > 0.0 {
                        entries.push((i, j, p));
                    }
                }
            }
            let couplings = round_to_marginals(entries, a, &b);
            let primal: f64 = couplings.iter().map(|e| e.mass * c[e.source * m + e.target]).sum();
            let dual: f64 =
                f.iter().zip(a).map(|(x, w)| x * w).sum::<f64>() + g.iter().zip(&b).map(|(x, w)| x * w).sum::<f64>();
            let plan = TransportPlan { source: mu.clone(), target: nu.clone(), couplings };
            let report = EntropicReport {
                epsilon: eps,
                iterations,
                sinkhorn_error: err,
                marginal_error: plan.marginal_error(),
                primal_cost: primal,
                dual_value: dual,
                duality_gap: primal - dual,
            };
            return Ok((plan, report));
        }
        eps = (eps * opts.scaling).max(eps_target);
    }
}

/// Projects an approximate plan onto the exact marginals: rows and columns
/// are scaled down where they exceed their targets, then the deficits are
/// filled with their normalized outer product.
fn round_to_marginals(mut entries: Vec<(usize, usize, f64)>, a: &[f64], b: &[f64]) -> Vec<Coupling> {
    let mut rows = vec![0.0; a.len()];
    for e in &entries {
        rows[e.0] += e.2;
    }
    for e in entries.iter_mut() {
        if rows[e.0] > a[e.0] {
            e.2 *= a[e.0] / rows[e.0];
        }
    }
    let mut cols = vec![0.0; b.len()];
    for e in &entries {
        cols[e.1] += e.2;
    }
    for e in entries.iter_mut() {
        if cols[e.1] > b[e.1] {
            e.2 *= b[e.1] / cols[e.1];
        }
    }
    let mut rows = vec![0.0; a.len()];
    let mut cols = vec![0.0; b.len()];
    for e in &entries {
        rows[e.0] += e.2;
        cols[e.1] += e.2;
    }
    let dr: Vec<f64> = a.iter().zip(&rows).map(|(t, s)| (t - s).max(0.0)).collect();
    let dc: Vec<f64> = b.iter().zip(&cols).map(|(t, s)| (t - s).max(0.0)).collect();
    let total: f64 = dc.iter().sum();
    let mut index = std::collections::HashMap::with_capacity(entries.len());
    for (k, e) in entries.iter().enumerate() {
        index.insert((e.0, e.1), k);
    }
    if total > 0.0 {
        for (i, ri) in dr.iter().enumerate().filter(|(_, r)| **r > 0.0) {
            for (j, cj) in dc.iter().enumerate().filter(|(_, c)| **c > 0.0) {
                let add = ri * cj / total;
                match index.get(&(i, j)) {
                    Some(&k) => entries[k].2 += add,
                    None => entries.push((i, j, add)),
                }
            }
        }
    }
    entries
        .into_iter()
        .filter(|e| e.2 > 0.0)
        .map(|(source, target, mass)| Coupling { source, target, mass })
        .collect()
}

/// Entries with `f_i + g_j - c_ij >= -TRUNCATION eps` per row and column.
struct Kernel {
    cols: Vec<Vec<usize>>,
    costs: Vec<Vec<f64>>,
    rows: Vec<Vec<usize>>,
    row_costs: Vec<Vec<f64>>,
}

/// Entries below `exp(-TRUNCATION)` relative weight are dropped.
const TRUNCATION: f64 = 40.0;

impl Kernel {
    fn build(c: &[f64], n: usize, m: usize, f: &[f64], g: &[f64], eps: f64) -> Self {
        // Refresh the row potentials first so that every row keeps its
        // dominant entries.
        let cut = TRUNCATION * eps;
        let fi: Vec<f64> = (0..n)
            .map(|i| (0..m).map(|j| g[j] - c[i * m + j]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let gj: Vec<f64> = (0..m)
            .map(|j| (0..n).map(|i| f[i] - c[i * m + j]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let mut cols = vec![Vec::new(); n];
        let mut costs = vec![Vec::new(); n];
        let mut rows = vec![Vec::new(); m];
        let mut row_costs = vec![Vec::new(); m];
        for i in 0..n {
            for j in 0..m {
                let cij = c[i * m + j];
                let s = g[j] - cij;
                let t = f[i] - cij;
                if s >= fi[i] - cut || t >= gj[j] - cut || f[i] + g[j] - cij >= -cut {
                    cols[i].push(j);
                    costs[i].push(cij);
                    rows[j].push(i);
                    row_costs[j].push(cij);
                }
            }
        }
        Self { cols, costs, rows, row_costs }
    }

    fn update_f(&self, f: &mut [f64], g: &[f64], la: &[f64], eps: f64) {
        for (i, fi) in f.iter_mut().enumerate() {
            let it = self.cols[i].iter().zip(&self.costs[i]).map(|(&j, &cij)| (g[j] - cij) / eps);
            *fi = eps * la[i] - eps * logsumexp(it);
        }
    }

    fn update_g(&self, g: &mut [f64], f: &[f64], lb: &[f64], eps: f64) {
        for (j, gj) in g.iter_mut().enumerate() {
            let it = self.rows[j].iter().zip(&self.row_costs[j]).map(|(&i, &cij)| (f[i] - cij) / eps);
            *gj = eps * lb[j] - eps * logsumexp(it);
        }
    }

    fn row_error(&self, f: &[f64], g: &[f64], a: &[f64], eps: f64) -> f64 {
        (0..f.len())
            .map(|i| {
                let s: f64 = self.cols[i]
                    .iter()
                    .zip(&self.costs[i])
                    .map(|(&j, &cij)| ((f[i] + g[j] - cij) / eps).exp())
                    .sum();
                (s - a[i]).abs()
            })
            .sum()
    }
}
