//! Discrete optimal transport and estimation of the Brenier map.
//!
//! [`solve_exact`] is the reference solver. Equal-count, equal-weight inputs
//! go through a shortest-augmenting-path assignment solver and produce a
//! permutation; general weights go through successive shortest paths. Both
//! break ties toward the lowest index.

mod assignment;
mod bottleneck;
mod brenier;
mod entropic;
mod potential;
mod stability;

pub use assignment::{assignment, assignment_sap, assignment_sap_warm, min_cost_flow};
pub use bottleneck::{bottleneck_assignment, linf_distance};
pub use brenier::{
    estimate_brenier_field, estimate_potential_field, field_from_plan, fit_field, fit_field_potential, sorted_eigen,
    BrenierField, FieldOptions,
};
pub use potential::{fit_potential, PolynomialPotential};
pub use entropic::{solve_entropic, EntropicOptions, EntropicReport};
pub use stability::{plan_stability_experiment, StabilityReport};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{DiscreteMeasure, Point};

/// Largest admissible number of dense cost-matrix entries.
pub const SIZE_GUARD: usize = 20_000_000;

/// Relative tolerance on mass equality.
pub const MASS_TOL: f64 = 1e-9;

/// Squared Euclidean distance, summed coordinate by coordinate.
#[inline]
pub fn sq_dist(a: &Point, b: &Point) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        let t = a[k] - b[k];
        s += t * t;
    }
    s
}

/// One entry of a transport plan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Coupling {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// Coupling between two discrete measures.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    pub source: DiscreteMeasure,
    pub target: DiscreteMeasure,
    /// Sorted by source index, then target index.
    pub couplings: Vec<Coupling>,
}

impl TransportPlan {
    /// `sum mass * |x - y|^2`, accumulated in coupling order.
    pub fn quadratic_cost(&self) -> f64 {
        self.cost_with(sq_dist)
    }

    pub fn cost_with(&self, c: impl Fn(&Point, &Point) -> f64) -> f64 {
        let xs = self.source.points();
        let ys = self.target.points();
        self.couplings.iter().map(|e| e.mass * c(&xs[e.source], &ys[e.target])).sum()
    }

    /// Target index of each source point when the plan is a permutation.
    pub fn permutation(&self) -> Option<Vec<usize>> {
        let n = self.source.len();
        if n != self.target.len() || self.couplings.len() != n {
            return None;
        }
        let mut perm = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        for e in &self.couplings {
            if perm[e.source] != usize::MAX || seen[e.target] {
                return None;
            }
            perm[e.source] = e.target;
            seen[e.target] = true;
        }
        Some(perm)
    }

    /// Largest marginal violation relative to the total mass.
    pub fn marginal_error(&self) -> f64 {
        let mut a = vec![0.0; self.source.len()];
        let mut b = vec![0.0; self.target.len()];
        for e in &self.couplings {
            a[e.source] += e.mass;
            b[e.target] += e.mass;
        }
        let ea = a.iter().zip(self.source.weights()).map(|(x, w)| (x - w).abs()).fold(0.0, f64::max);
        let eb = b.iter().zip(self.target.weights()).map(|(x, w)| (x - w).abs()).fold(0.0, f64::max);
        ea.max(eb) / self.source.mass()
    }

    /// Barycentric image `sum_j pi_ij y_j / a_i` of each source point.
    pub fn barycentric_map(&self) -> Vec<Point> {
        let d = self.target.dim();
        let mut out = vec![Point::zeros(d); self.source.len()];
        let ys = self.target.points();
        for e in &self.couplings {
            out[e.source] += &ys[e.target] * e.mass;
        }
        for (p, w) in out.iter_mut().zip(self.source.weights()) {
            *p /= *w;
        }
        out
    }
}

pub(crate) fn check_masses(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    let (a, b) = (mu.mass(), nu.mass());
    if (a - b).abs() > MASS_TOL * a.max(b) {
        return Err(Error::MassMismatch { left: a, right: b });
    }
    if mu.dim() != nu.dim() {
        return Err(Error::InvalidInput("measures live in different dimensions".into()));
    }
    Ok(())
}

fn check_size(n: usize, m: usize) -> Result<()> {
    if n.saturating_mul(m) > SIZE_GUARD {
        return Err(Error::SizeGuardExceeded { n, m, limit: SIZE_GUARD });
    }
    Ok(())
}

/// Dense row-major matrix of `c(x_i, y_j)`.
pub fn cost_matrix(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    c: impl Fn(&Point, &Point) -> f64 + Sync,
) -> Vec<f64> {
    use rayon::prelude::*;
    let ys = nu.points();
    mu.points().par_iter().flat_map_iter(|x| ys.iter().map(|y| c(x, y)).collect::<Vec<_>>()).collect()
}

/// Exact optimal plan for the quadratic cost.
pub fn solve_exact(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportPlan> {
    check_masses(mu, nu)?;
    let n = mu.len();
    if n == nu.len() && n > MULTISCALE_MIN && mu.has_equal_weights() && nu.has_equal_weights() {
        check_size(n, n)?;
        let cost = cost_matrix(mu, nu, sq_dist);
        let perm = multiscale_assignment(mu.points(), nu.points(), &cost).0;
        let w = mu.weights();
        let couplings =
            perm.into_iter().enumerate().map(|(i, j)| Coupling { source: i, target: j, mass: w[i] }).collect();
        return Ok(TransportPlan { source: mu.clone(), target: nu.clone(), couplings });
    }
    solve_exact_with_cost(mu, nu, sq_dist)
}

/// Below this size the assignment is solved directly.
const MULTISCALE_MIN: usize = 600;

/// Exact quadratic-cost assignment warm-started from a strided subproblem.
///
/// The column duals of the subproblem are extended to every target by a
/// first-order Taylor step, using `grad v(y) = 2 (y - x)` at matched pairs.
/// The full problem is then solved exactly from that feasible start.
fn multiscale_assignment(xs: &[Point], ys: &[Point], cost: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let n = xs.len();
    if n <= MULTISCALE_MIN {
        return assignment_sap_warm(n, cost, None);
    }
    let stride = 4;
    let sub: Vec<usize> = (0..n).step_by(stride).collect();
    let m = sub.len();
    let sx: Vec<Point> = sub.iter().map(|&i| xs[i].clone()).collect();
    let sy: Vec<Point> = sub.iter().map(|&j| ys[j].clone()).collect();
    let mut sc = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            sc[a * m + b] = cost[sub[a] * n + sub[b]];
        }
    }
    let (sperm, sv) = multiscale_assignment(&sx, &sy, &sc);
    let mut partner = vec![0usize; m];
    for (a, &b) in sperm.iter().enumerate() {
        partner[b] = a;
    }
    let index = crate::geometry::PointIndex::with_density(sy.clone(), 2.0);
    let v0: Vec<f64> = ys
        .iter()
        .map(|y| {
            let s = index.nearest(y, 1)[0];
            let grad = (&sy[s] - &sx[partner[s]]) * 2.0;
            sv[s] + grad.dot(&(y - &sy[s]))
        })
        .collect();
    assignment_sap_warm(n, cost, Some(&v0))
}

/// Exact optimal plan for an arbitrary nonnegative pointwise cost.
pub fn solve_exact_with_cost(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    c: impl Fn(&Point, &Point) -> f64 + Sync,
) -> Result<TransportPlan> {
    check_masses(mu, nu)?;
    let (n, m) = (mu.len(), nu.len());
    check_size(n, m)?;
    let cost = cost_matrix(mu, nu, c);
    let couplings = solve_cost_matrix(mu.weights(), nu.weights(), &cost)?;
    Ok(TransportPlan { source: mu.clone(), target: nu.clone(), couplings })
}

/// Exact optimal couplings for a dense cost matrix and marginals `a`, `b`.
pub fn solve_cost_matrix(a: &[f64], b: &[f64], cost: &[f64]) -> Result<Vec<Coupling>> {
    let (n, m) = (a.len(), b.len());
    if cost.len() != n * m {
        return Err(Error::InvalidInput("cost matrix has wrong size".into()));
    }
    if cost.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::InvalidInput("costs must be finite and nonnegative".into()));
    }
    let w0 = a[0];
    let equal = n == m
        && a.iter().chain(b).all(|w| (w - w0).abs() <= 1e-12 * w0);
    if equal {
        let perm = assignment(n, cost);
        Ok(perm.into_iter().enumerate().map(|(i, j)| Coupling { source: i, target: j, mass: a[i] }).collect())
    } else {
        min_cost_flow(a, b, cost)
    }
}

/// Square root of the optimal quadratic cost.
pub fn wasserstein_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    Ok(solve_exact(mu, nu)?.quadratic_cost().max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;

    #[test]
    fn identical_sets_identity_plan() {
        let pts: Vec<Point> = (0..5).map(|i| point(&[i as f64, (i * i) as f64])).collect();
        let mu = DiscreteMeasure::uniform(pts, 1.0).unwrap();
        let plan = solve_exact(&mu, &mu).unwrap();
        assert_eq!(plan.permutation().unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(plan.quadratic_cost(), 0.0);
    }

    #[test]
    fn monotone_matching_1d() {
        let mu = DiscreteMeasure::uniform(vec![point(&[0.0]), point(&[1.0])], 1.0).unwrap();
        let nu = DiscreteMeasure::uniform(vec![point(&[3.0]), point(&[2.0])], 1.0).unwrap();
        let plan = solve_exact(&mu, &nu).unwrap();
        assert_eq!(plan.permutation().unwrap(), vec![1, 0]);
        assert_eq!(plan.quadratic_cost(), 4.0);
    }

    #[test]
    fn mass_mismatch() {
        let mu = DiscreteMeasure::uniform(vec![point(&[0.0])], 1.0).unwrap();
        let nu = DiscreteMeasure::uniform(vec![point(&[0.0])], 2.0).unwrap();
        assert!(matches!(solve_exact(&mu, &nu), Err(Error::MassMismatch { .. })));
    }

    #[test]
    fn general_weights_split_mass() {
        let mu = DiscreteMeasure::new(vec![point(&[0.0])], vec![1.0]).unwrap();
        let nu = DiscreteMeasure::new(vec![point(&[1.0]), point(&[-2.0])], vec![0.25, 0.75]).unwrap();
        let plan = solve_exact(&mu, &nu).unwrap();
        assert!((plan.quadratic_cost() - (0.25 + 3.0)).abs() < 1e-14);
        assert!(plan.marginal_error() < 1e-12);
    }
}
