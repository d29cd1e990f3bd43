//! Displacement interpolation along straight particle paths.
//!
//! A particle with label `z` moves as `T_t(z) = (1 - t) z + t T(z)` with
//! constant velocity `T(z) - z`. If `DT(z)` has eigenvalues `lambda_j`, the
//! density along the path is `prod (1 - t + t lambda_j)^-1` and the velocity
//! divergence is `sum (lambda_j - 1) / (1 - t + t lambda_j)`.

mod deposit;
mod one_dim;

pub(crate) use deposit::particles;
pub use deposit::{pushforward_density, pushforward_with, DensityPath, PathFrame, PushforwardOptions};
pub use one_dim::monotone_map_1d;

use crate::error::{Error, Result};
use crate::geometry::{DiscreteMeasure, Point};
use crate::transport::{solve_exact, BrenierField};
use nalgebra::DMatrix;
use serde::Serialize;

/// One particle path with the local linearization of the map at its label.
#[derive(Clone, Debug)]
pub struct ParticlePathSample {
    pub z: Point,
    pub eigvals: Vec<f64>,
    pub frame: DMatrix<f64>,
    pub velocity: Point,
}

impl ParticlePathSample {
    pub fn from_field(field: &BrenierField, i: usize) -> Self {
        Self {
            z: field.sources[i].clone(),
            eigvals: field.eigenvalues[i].clone(),
            frame: field.frames[i].clone(),
            velocity: &field.targets[i] - &field.sources[i],
        }
    }

    pub fn position(&self, t: f64) -> Point {
        &self.z + t * &self.velocity
    }

    pub fn density(&self, t: f64) -> f64 {
        path_density(&self.eigvals, t)
    }

    pub fn divergence(&self, t: f64) -> f64 {
        path_divergence(&self.eigvals, t)
    }
}

fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("time {t} outside [0, 1]")))
    }
}

/// `(1 - t) z + t T(z)` for sample `i`.
pub fn interpolate_position(field: &BrenierField, i: usize, t: f64) -> Result<Point> {
    check_time(t)?;
    Ok(field.interpolate(i, t))
}

/// `prod (1 - t + t lambda_j)^-1`.
pub fn path_density(eigvals: &[f64], t: f64) -> f64 {
    1.0 / eigvals.iter().map(|l| 1.0 - t + t * l).product::<f64>()
}

/// `sum (lambda_j - 1) / (1 - t + t lambda_j)`.
pub fn path_divergence(eigvals: &[f64], t: f64) -> f64 {
    eigvals.iter().map(|l| (l - 1.0) / (1.0 - t + t * l)).sum()
}

/// Discrete concavity of `rho^(-1/d)` and convexity of `rho` in time.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ConvexityReport {
    /// Largest second difference of `rho^(-1/d)`; should be `<= 0`.
    pub max_second_diff_g: f64,
    /// Smallest second difference of `rho`; should be `>= 0`.
    pub min_second_diff_rho: f64,
    pub max_rho: f64,
    pub violations: Vec<String>,
}

impl ConvexityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Tolerance on the sign conditions of [`convexity_check`].
pub const CONVEXITY_TOL: f64 = 1e-10;

/// Checks the density structure along one particle path on a uniform or
/// nonuniform time grid.
pub fn convexity_check(eigvals: &[f64], times: &[f64]) -> Result<ConvexityReport> {
    if times.len() < 3 {
        return Err(Error::InvalidInput("convexity check needs at least three times".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("times must be strictly increasing".into()));
    }
    let d = eigvals.len() as f64;
    let rho: Vec<f64> = times.iter().map(|&t| path_density(eigvals, t)).collect();
    let g: Vec<f64> = rho.iter().map(|r| r.powf(-1.0 / d)).collect();
    let mut rep = ConvexityReport {
        max_second_diff_g: f64::NEG_INFINITY,
        min_second_diff_rho: f64::INFINITY,
        max_rho: rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        violations: Vec::new(),
    };
    for k in 1..times.len() - 1 {
        let (h0, h1) = (times[k] - times[k - 1], times[k + 1] - times[k]);
        let second = |f: &[f64]| {
            2.0 * (h0 * f[k + 1] - (h0 + h1) * f[k] + h1 * f[k - 1]) / (h0 * h1 * (h0 + h1))
        };
        // Scale by the squared step so the tolerance is on function values.
        let sg = second(&g) * h0 * h1;
        let sr = second(&rho) * h0 * h1;
        rep.max_second_diff_g = rep.max_second_diff_g.max(sg);
        rep.min_second_diff_rho = rep.min_second_diff_rho.min(sr);
        if sg > CONVEXITY_TOL {
            rep.violations.push(format!("rho^(-1/d) not concave at t={} ({sg:e})", times[k]));
        }
        if sr < -CONVEXITY_TOL {
            rep.violations.push(format!("rho not convex at t={} ({sr:e})", times[k]));
        }
    }
    for (t, r) in times.iter().zip(&rho) {
        if *r > 1.0 + CONVEXITY_TOL {
            rep.violations.push(format!("rho = {r} exceeds 1 at t={t}"));
        }
    }
    Ok(rep)
}

/// Ratios `d_W(mu_s, mu_t) / ((t - s) d_W(mu_0, mu_1))` for sampled pairs.
#[derive(Clone, Debug, Serialize)]
pub struct GeodesicReport {
    pub pairs: Vec<(f64, f64, f64)>,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl GeodesicReport {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

/// Default relative tolerance of [`geodesic_property_check`].
pub const GEODESIC_TOL: f64 = 0.03;

/// Recomputes optimal transport between interpolated point clouds at every
/// pair `s < t` of `times` and compares with the linear distance profile.
pub fn geodesic_property_check(field: &BrenierField, times: &[f64], tolerance: f64) -> Result<GeodesicReport> {
    if times.len() < 2 {
        return Err(Error::InvalidInput("geodesic check needs at least two times".into()));
    }
    for &t in times {
        check_time(t)?;
    }
    let full = field.transport_cost().sqrt();
    let cloud = |t: f64| {
        let pts: Vec<Point> = (0..field.len()).map(|i| field.interpolate(i, t)).collect();
        DiscreteMeasure::new(pts, field.weights.clone())
    };
    let mut rep = GeodesicReport { pairs: Vec::new(), max_deviation: 0.0, tolerance };
    for (a, &s) in times.iter().enumerate() {
        for &t in &times[a + 1..] {
            if t <= s {
                continue;
            }
            let plan = solve_exact(&cloud(s)?, &cloud(t)?)?;
            let dist = plan.quadratic_cost().sqrt();
            let expected = (t - s) * full;
            let ratio = if expected > 0.0 { dist / expected } else { 1.0 };
            rep.max_deviation = rep.max_deviation.max((ratio - 1.0).abs());
            rep.pairs.push((s, t, ratio));
        }
    }
    Ok(rep)
}
