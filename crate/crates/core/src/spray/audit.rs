//! Injectivity certificates and action accounting for built sprays.

use std::collections::HashMap;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::EulerSpray;
use crate::droplet::nesting_check;
use crate::error::{Error, Result};
use crate::geometry::{ellipsoid_gap, BallQuadrature, DiscreteMeasure, Ellipsoid, Point};
use crate::transport::{linf_distance, BrenierField};

/// Number of equally spaced time samples used by default, endpoints included.
pub const DEFAULT_TIME_SAMPLES: usize = 17;

/// A pair failing a certificate at one time.
#[derive(Clone, Debug, Serialize)]
pub struct PairViolation {
    pub i: usize,
    pub j: usize,
    pub t: f64,
    pub gap: f64,
    pub bound: f64,
}

/// Outcome of [`certify_injectivity`].
#[derive(Clone, Debug, Serialize)]
pub struct InjectivityReport {
    pub times: Vec<f64>,
    pub droplets: usize,
    /// Pairs tested exactly after spatial pruning, summed over times.
    pub pairs_checked: usize,
    /// Affine images closer than `(eps t / 2)(lo_i^2 r_i + lo_j^2 r_j)`.
    pub analytic_violations: Vec<PairViolation>,
    /// Droplet ellipsoids that touch or overlap.
    pub geometric_violations: Vec<PairViolation>,
    /// Droplets escaping their Wasserstein ellipsoid.
    pub nesting_violations: Vec<usize>,
    /// Smallest `gap - bound` of the analytic certificate over checked pairs.
    pub min_analytic_margin: f64,
    /// Smallest droplet-to-droplet gap over checked pairs.
    pub min_geometric_gap: f64,
}

impl InjectivityReport {
    pub fn passed(&self) -> bool {
        self.analytic_violations.is_empty() && self.geometric_violations.is_empty() && self.nesting_violations.is_empty()
    }
}

/// Image of ball `k` under the affine spray interpolant at time `t`.
fn affine_ellipsoid(spray: &EulerSpray, k: usize, t: f64) -> Result<Ellipsoid> {
    let b = spray.ball(k);
    let lam = b.unimodular_eigenvalues();
    let axes = DVector::from_iterator(lam.len(), lam.iter().map(|l| b.radius * (1.0 - t + t * l)));
    Ellipsoid::new(spray.droplets[k].center(t), axes, b.frame.clone())
}

/// Candidate pairs whose bounding spheres come within `pad(i) + pad(j)`.
fn near_pairs(centers: &[Point], radii: &[f64], pads: &[f64]) -> Vec<(usize, usize)> {
    let reach: Vec<f64> = radii.iter().zip(pads).map(|(r, p)| r + p).collect();
    let cell = 2.0 * reach.iter().copied().fold(0.0, f64::max);
    if centers.is_empty() || !(cell > 0.0) {
        return Vec::new();
    }
    let key = |x: &Point| -> Vec<i64> { x.iter().map(|v| (v / cell).floor() as i64).collect() };
    let mut map: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, c) in centers.iter().enumerate() {
        map.entry(key(c)).or_default().push(i);
    }
    let d = centers[0].len();
    let mut out = Vec::new();
    for (i, c) in centers.iter().enumerate() {
        let base = key(c);
        let mut off = vec![-1i64; d];
        loop {
            let k: Vec<i64> = base.iter().zip(&off).map(|(a, b)| a + b).collect();
            if let Some(list) = map.get(&k) {
                for &j in list {
                    if j > i && (c - &centers[j]).norm() < reach[i] + reach[j] {
                        out.push((i, j));
                    }
                }
            }
            let mut a = 0;
            loop {
                if a == d {
                    break;
                }
                off[a] += 1;
                if off[a] <= 1 {
                    break;
                }
                off[a] = -1;
                a += 1;
            }
            if a == d {
                break;
            }
        }
    }
    out.sort_unstable();
    out
}

/// Pairwise separation certificates at each time sample.
///
/// The analytic certificate compares the affine images of the balls with the
/// separation bound of the injectivity lemma. The geometric certificate
/// checks that the droplet ellipsoids themselves are disjoint and that every
/// droplet stays nested in its Wasserstein ellipsoid. Pairs whose bounding
/// spheres are far apart are certified by the sphere bound alone.
pub fn certify_injectivity(spray: &EulerSpray, times: &[f64]) -> Result<InjectivityReport> {
    if times.len() < 3 {
        return Err(Error::InvalidInput("injectivity audit needs at least 3 time samples".into()));
    }
    let eps = spray.epsilon();
    let n = spray.len();
    let nesting_violations: Vec<usize> = (0..n)
        .into_par_iter()
        .filter_map(|k| match nesting_check(&spray.droplets[k].geodesic) {
            Ok(r) if r.passed() => None,
            _ => Some(k),
        })
        .collect();
    let margin = |k: usize| {
        let b = spray.ball(k);
        b.lambda_lo.max(0.0).powi(2) * b.radius
    };
    let mut report = InjectivityReport {
        times: times.to_vec(),
        droplets: n,
        pairs_checked: 0,
        analytic_violations: Vec::new(),
        geometric_violations: Vec::new(),
        nesting_violations,
        min_analytic_margin: f64::INFINITY,
        min_geometric_gap: f64::INFINITY,
    };
    for &t in times {
        let affine: Vec<Ellipsoid> = (0..n).map(|k| affine_ellipsoid(spray, k, t)).collect::<Result<_>>()?;
        let actual: Vec<Ellipsoid> = (0..n).map(|k| spray.droplets[k].ellipsoid(t)).collect::<Result<_>>()?;
        let centers: Vec<Point> = affine.iter().map(|e| e.center.clone()).collect();
        let radii: Vec<f64> = affine
            .iter()
            .zip(&actual)
            .map(|(a, b)| a.semi_axes.max().max(b.semi_axes.max()))
            .collect();
        let pads: Vec<f64> = (0..n).map(|k| 0.5 * eps * t * margin(k)).collect();
        let pairs = near_pairs(&centers, &radii, &pads);
        report.pairs_checked += pairs.len();
        let results: Vec<(usize, usize, f64, f64, f64)> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let bound = 0.5 * eps * t * (margin(i) + margin(j));
                (i, j, ellipsoid_gap(&affine[i], &affine[j]), bound, ellipsoid_gap(&actual[i], &actual[j]))
            })
            .collect();
        for (i, j, ga, bound, gg) in results {
            report.min_analytic_margin = report.min_analytic_margin.min(ga - bound);
            report.min_geometric_gap = report.min_geometric_gap.min(gg);
            if ga < bound {
                report.analytic_violations.push(PairViolation { i, j, t, gap: ga, bound });
            }
            if !(gg > 0.0) {
                report.geometric_violations.push(PairViolation { i, j, t, gap: gg, bound: 0.0 });
            }
        }
    }
    Ok(report)
}

/// Outcome of [`spray_action_audit`].
#[derive(Clone, Debug, Serialize)]
pub struct ActionAudit {
    pub epsilon: f64,
    pub total_action: f64,
    /// Squared distance of the full sampled transport.
    pub dw2_full: f64,
    /// `sum_i int_{B_i} |T(x) - x|^2 dx`, the squared distance on covered mass.
    pub dw2_covered: f64,
    /// `d_W^2 + 2 |Omega_0| diam^2`.
    pub k_constant: f64,
    /// `dw2_covered + K epsilon`.
    pub bound: f64,
    pub action_ok: bool,
    /// Droplets with `A_i > d_W(B_i, T(B_i))^2 (1 + eps) + 2 eps diam^2 |B_i|`.
    pub per_droplet_violations: Vec<usize>,
    /// Largest `A_i` over its per-droplet bound.
    pub max_per_droplet_ratio: f64,
    /// Balls where the sampled Taylor error exceeds `D3 r^2 / 2`.
    pub taylor_violations: Vec<usize>,
    /// Largest sampled `|T - S|` over the covered set, against `eps diam`.
    pub sup_map_error: f64,
    /// Bottleneck distance between spray-image and target samples on covered mass.
    pub dinf: f64,
    pub dinf_bound: f64,
    pub dinf_ok: bool,
    pub covered_mass: f64,
    pub uncovered_mass: f64,
    pub coverage_fraction: f64,
}

impl ActionAudit {
    pub fn passed(&self) -> bool {
        self.action_ok && self.per_droplet_violations.is_empty() && self.taylor_violations.is_empty() && self.dinf_ok
    }
}

/// Action accounting of a spray against the transport it approximates.
///
/// `field` must be in the same (recentered) coordinates as the spray.
/// `n_radial` sets the per-ball quadrature used for the covered distance.
pub fn spray_action_audit(spray: &EulerSpray, field: &BrenierField, n_radial: usize) -> Result<ActionAudit> {
    let eps = spray.epsilon();
    let plan = &spray.plan;
    let diam = plan.target_diameter;
    let d = field.dim();
    let quad = BallQuadrature::new(d, n_radial.max(1))?;
    let index = field.index();
    let per: Vec<(f64, f64, f64)> = (0..spray.len())
        .into_par_iter()
        .map(|k| {
            let b = spray.ball(k);
            let scale = b.radius.powi(d as i32);
            let mut cost = 0.0;
            let mut taylor: f64 = 0.0;
            let mut sup_err: f64 = 0.0;
            for (z, w) in quad.nodes.iter().zip(&quad.weights) {
                let x = &b.center + Point::from_column_slice(z) * b.radius;
                let tx = field.map_at(&x, &index);
                cost += w * scale * (&tx - &x).norm_squared();
                let lin = &b.image + &b.frame * nalgebra::DMatrix::from_diagonal(&DVector::from_vec(b.eigenvalues.clone()))
                    * b.frame.transpose()
                    * (&x - &b.center);
                taylor = taylor.max((&tx - lin).norm());
                sup_err = sup_err.max((&tx - b.affine_image(eps, &x)).norm());
            }
            (cost, taylor, sup_err)
        })
        .collect();
    let dw2_covered: f64 = per.iter().map(|p| p.0).sum();
    let dw2_full = field.transport_cost();
    let k_constant = dw2_full + 2.0 * plan.source_mass * diam * diam;
    let bound = dw2_covered + k_constant * eps;
    let mut per_droplet_violations = Vec::new();
    let mut max_ratio: f64 = 0.0;
    let mut taylor_violations = Vec::new();
    for (k, (cost, taylor, _)) in per.iter().enumerate() {
        let b = spray.ball(k);
        let a = spray.droplets[k].action();
        let limit = cost * (1.0 + eps) + 2.0 * eps * diam * diam * b.volume();
        max_ratio = max_ratio.max(a / limit);
        if a > limit {
            per_droplet_violations.push(k);
        }
        let tb = 0.5 * b.d3 * b.radius * b.radius;
        if *taylor > tb + 1e-12 * (1.0 + b.image.norm()) {
            taylor_violations.push(k);
        }
    }
    let sup_map_error = per.iter().map(|p| p.2).fold(0.0, f64::max);

    // Bottleneck between spray images and matched targets of covered samples.
    let mut img = Vec::new();
    let mut tgt = Vec::new();
    let centers: Vec<Point> = (0..spray.len()).map(|k| spray.ball(k).center.clone()).collect();
    let rmax = (0..spray.len()).map(|k| spray.ball(k).radius).fold(0.0, f64::max);
    let ball_index = crate::geometry::PointIndex::new(centers, 2.0 * rmax.max(1e-12));
    for (x, y) in field.sources.iter().zip(&field.targets) {
        let hit = ball_index
            .within(x, rmax)
            .into_iter()
            .find(|&k| (x - &spray.ball(k).center).norm() < spray.ball(k).radius);
        if let Some(k) = hit {
            img.push(spray.ball(k).affine_image(eps, x));
            tgt.push(y.clone());
        }
    }
    let dinf = if img.is_empty() {
        0.0
    } else {
        let mu = DiscreteMeasure::uniform(img, 1.0)?;
        let nu = DiscreteMeasure::uniform(tgt, 1.0)?;
        linf_distance(&mu, &nu)?
    };
    let dinf_bound = eps * diam;
    Ok(ActionAudit {
        epsilon: eps,
        total_action: spray.total_action,
        dw2_full,
        dw2_covered,
        k_constant,
        bound,
        action_ok: spray.total_action <= bound,
        per_droplet_violations,
        max_per_droplet_ratio: max_ratio,
        taylor_violations,
        sup_map_error,
        dinf,
        dinf_bound,
        dinf_ok: dinf < dinf_bound,
        covered_mass: plan.covered_mass,
        uncovered_mass: plan.source_mass - plan.covered_mass,
        coverage_fraction: plan.coverage_fraction,
    })
}
