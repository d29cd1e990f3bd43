//! Stability of optimal maps under perturbation of the marginals.

use serde::Serialize;

use super::{sq_dist, solve_exact};
use crate::error::{Error, Result};
use crate::geometry::{DiscreteMeasure, Point};

/// Coupling costs along a perturbation sequence.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    /// `int |x - x'|^2 + |T(x) - T_k(x')|^2 d theta_k` for each k.
    pub costs: Vec<f64>,
}

/// Map read off an optimal plan (barycentric projection).
pub(crate) fn plan_map(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Vec<Point>> {
    Ok(solve_exact(mu, nu)?.barycentric_map())
}

/// Composes the optimal couplings `mu -> nu`, `mu -> mu_k` and `mu_k -> nu_k`
/// and reports the lifted coupling cost for each k.
pub fn plan_stability_experiment(
    mu_k: &[DiscreteMeasure],
    nu_k: &[DiscreteMeasure],
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<StabilityReport> {
    if mu_k.len() != nu_k.len() {
        return Err(Error::InvalidInput("sequences differ in length".into()));
    }
    let t = plan_map(mu, nu)?;
    let mut costs = Vec::with_capacity(mu_k.len());
    for (mk, nk) in mu_k.iter().zip(nu_k) {
        let tk = plan_map(mk, nk)?;
        let gamma = solve_exact(mu, mk)?;
        let xs = mu.points();
        let xk = mk.points();
        let c: f64 = gamma
            .couplings
            .iter()
            .map(|e| e.mass * (sq_dist(&xs[e.source], &xk[e.target]) + sq_dist(&t[e.source], &tk[e.target])))
            .sum();
        costs.push(c);
    }
    Ok(StabilityReport { costs })
}
