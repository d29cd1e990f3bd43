//! Action formulas and the pressure, velocity and nesting bounds.

use super::bvp::{geodesic_bvp, BvpOptions};
use super::DropletGeodesic;
use crate::error::Result;
use crate::geometry::{unit_ball_volume, BallQuadrature};
use serde::Serialize;

/// `omega_d r^d c^2 / (d + 2)`.
pub fn droplet_action(g: &DropletGeodesic) -> f64 {
    let d = g.dim();
    unit_ball_volume(d) * g.r.powi(d as i32) * g.c * g.c / (d as f64 + 2.0)
}

/// Space-time quadrature of the kinetic energy over Lagrangian labels with
/// `n_radial` shells and the stored time grid (trapezoid rule).
pub fn quadrature_action(g: &DropletGeodesic, n_radial: usize) -> Result<f64> {
    let d = g.dim();
    let q = BallQuadrature::new(d, n_radial)?;
    let vd = g.r.powi(d as i32);
    let dens: Vec<f64> = (0..g.times.len())
        .map(|k| {
            let adot = &g.adot[k];
            let s: f64 = q
                .nodes
                .iter()
                .zip(&q.weights)
                .map(|(z, w)| w * (0..d).map(|j| (adot[j] * z[j]).powi(2)).sum::<f64>())
                .sum();
            vd * s
        })
        .collect();
    Ok(trapezoid(&g.times, &dens))
}

pub(crate) fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2).zip(f.windows(2)).map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1])).sum()
}

/// Sampled pressure and velocity extremes against the bound
/// `(lambda_hi^4 / lambda_lo^2) r^2 d`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub bound: f64,
    pub min_pressure: f64,
    pub max_pressure: f64,
    /// Largest sampled `|v - b|^2`.
    pub max_relative_speed2: f64,
    pub samples: usize,
    /// `(t, local point, description)` for each violation.
    pub violations: Vec<(f64, Vec<f64>, String)>,
}

/// Checks `0 <= p <= B` and `|v - b|^2 <= B` on quadrature nodes and
/// boundary points at every grid time. Velocities are in the droplet frame,
/// so the boost drops out.
pub fn bound_check(g: &DropletGeodesic, lambda_lo: f64, lambda_hi: f64) -> Result<BoundReport> {
    let d = g.dim();
    let bound = lambda_hi.powi(4) / lambda_lo.powi(2) * g.r * g.r * d as f64;
    let q = BallQuadrature::new(d, 8)?;
    let mut labels = q.nodes.clone();
    labels.push(vec![0.0; d]);
    labels.extend(BallQuadrature::sphere_points(d, 64));
    let mut rep = BoundReport {
        bound,
        min_pressure: f64::INFINITY,
        max_pressure: f64::NEG_INFINITY,
        max_relative_speed2: 0.0,
        samples: 0,
        violations: Vec::new(),
    };
    for k in 0..g.times.len() {
        let s = g.state(k);
        for z in &labels {
            let x: Vec<f64> = z.iter().zip(&s.a).map(|(z, a)| z * a).collect();
            let (_, v, p) = s.fields(&x);
            let v2: f64 = v.iter().map(|v| v * v).sum();
            rep.samples += 1;
            rep.min_pressure = rep.min_pressure.min(p);
            rep.max_pressure = rep.max_pressure.max(p);
            rep.max_relative_speed2 = rep.max_relative_speed2.max(v2);
            if p < -1e-10 {
                rep.violations.push((s.t, x.clone(), format!("negative pressure {p:e}")));
            }
            if p > bound {
                rep.violations.push((s.t, x.clone(), format!("pressure {p} above {bound}")));
            }
            if v2 > bound {
                rep.violations.push((s.t, x, format!("speed^2 {v2} above {bound}")));
            }
        }
    }
    Ok(rep)
}

/// Comparison of `a(t)` against the linear interpolant of its endpoints.
#[derive(Clone, Debug, Serialize)]
pub struct NestingReport {
    /// Largest `a_j(t) - A_j(t)`; nonpositive when nested.
    pub max_excess: f64,
    /// Smallest `A_j(t) - a_j(t)` over strictly interior times.
    pub min_interior_gap: f64,
    pub samples: usize,
    pub violations: usize,
}

impl NestingReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Nesting tolerance.
pub const NESTING_TOL: f64 = 1e-10;

/// Checks `a_j(t) <= (1 - t) a_j(0) + t a_j(1) + 1e-10` on the grid and at
/// 256 further times.
pub fn nesting_check(g: &DropletGeodesic) -> Result<NestingReport> {
    let (a0, a1) = (g.start().to_vec(), g.end().to_vec());
    let t_end = g.t_end();
    let mut times = g.times.clone();
    times.extend((0..256).map(|k| t_end * (k as f64 + 0.5) / 256.0));
    let mut rep = NestingReport { max_excess: f64::NEG_INFINITY, min_interior_gap: f64::INFINITY, samples: 0, violations: 0 };
    for t in times {
        let s = g.state_at(t)?;
        let tau = t / t_end;
        for j in 0..a0.len() {
            let lin = (1.0 - tau) * a0[j] + tau * a1[j];
            let excess = s.a[j] - lin;
            rep.samples += 1;
            rep.max_excess = rep.max_excess.max(excess);
            if t > 0.0 && t < t_end {
                rep.min_interior_gap = rep.min_interior_gap.min(-excess);
            }
            if excess > NESTING_TOL {
                rep.violations += 1;
            }
        }
    }
    Ok(rep)
}

/// Action of a boosted droplet against the Wasserstein cost of moving a
/// ball of radius `r` to the ellipsoid with axes `a_hat` shifted by `b`.
#[derive(Clone, Debug, Serialize)]
pub struct ActionBoundReport {
    pub dw2: f64,
    pub action: f64,
    pub slack: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    #[serde(skip)]
    pub geodesic: Option<DropletGeodesic>,
}

impl ActionBoundReport {
    pub fn passed(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

/// Solves the droplet from `(r, ..., r)` to `a_hat` and checks
/// `d_W^2 <= A <= d_W^2 + (lambda_hi^4 / lambda_lo^2) omega_d r^(d+2)`.
pub fn action_bound_check(r: f64, a_hat: &[f64], b: &[f64], opts: &BvpOptions) -> Result<ActionBoundReport> {
    let d = a_hat.len();
    let r_hat = vec![r; d];
    let g = geodesic_bvp(r, &r_hat, a_hat, opts)?;
    let vol = unit_ball_volume(d) * r.powi(d as i32);
    let b2: f64 = b.iter().map(|x| x * x).sum();
    let shape2: f64 = a_hat.iter().map(|a| (a - r).powi(2)).sum();
    let dw2 = vol * (b2 + shape2 / (d as f64 + 2.0));
    let action = vol * b2 + droplet_action(&g);
    let lo = a_hat.iter().cloned().fold(f64::INFINITY, f64::min) / r;
    let hi = a_hat.iter().cloned().fold(0.0, f64::max) / r;
    let slack = hi.powi(4) / (lo * lo) * vol * r * r;
    // Relative rounding allowance on the lower inequality.
    let eps = 1e-12 * dw2.max(1e-300);
    Ok(ActionBoundReport {
        dw2,
        action,
        slack,
        lower_ok: dw2 <= action + eps,
        upper_ok: action <= dw2 + slack,
        geodesic: Some(g),
    })
}
