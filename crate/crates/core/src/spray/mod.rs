//! Euler sprays: disjoint superpositions of boosted ellipsoidal droplets that
//! approximate the optimal transport between two shapes.
//!
//! The pipeline is [`recenter_target`], [`vitali_cover`] (greedy ball packing
//! under the admissible-radius rule), [`build_spray`] (one droplet geodesic
//! per ball), then the audits in [`certify_injectivity`] and
//! [`spray_action_audit`]. Paths are chained with [`concatenate`].
//!
//! All actions and distances refer to the covered part of the source; the
//! uncovered remainder is reported alongside.

mod audit;
mod concat;
mod cover;

pub use audit::{
    certify_injectivity, spray_action_audit, ActionAudit, InjectivityReport, PairViolation, DEFAULT_TIME_SAMPLES,
};
pub use concat::{
    compressed_taus, concatenate, connect_general_densities, ChainPath, ConnectOptions, ConnectReport, CHAIN_TOL,
};
pub use cover::{audit_plan, radius_admissible, vitali_cover, AdmissibilityAudit};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::droplet::{geodesic_bvp, BoostedDroplet, BvpOptions, DropletState};
use crate::error::{Error, Result};
use crate::geometry::{diametral_pair, GridDensity, Point};
use crate::transport::BrenierField;

/// Knobs of the spray construction.
#[derive(Clone, Debug)]
pub struct SprayOptions {
    pub epsilon: f64,
    /// Allowed uncovered fraction of the source mass.
    pub delta: f64,
    /// Consecutive inadmissible candidates before giving up.
    pub max_stall: usize,
    /// Smallest ball radius; defaults to a quarter cell.
    pub min_radius: Option<f64>,
    /// Widening factor of the eigenvalue bounds for sampled (non-potential) fields.
    pub safety: f64,
    pub bvp: BvpOptions,
}

impl Default for SprayOptions {
    fn default() -> Self {
        Self { epsilon: 0.1, delta: 0.05, max_stall: 100_000, min_radius: None, safety: 1.1, bvp: BvpOptions::default() }
    }
}

/// One ball of the cover with the first-order data of the map at its center.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SprayBall {
    pub center: Point,
    pub radius: f64,
    /// `T(x_i)`.
    pub image: Point,
    /// Eigenvectors of `DT(x_i)` as columns, determinant +1.
    pub frame: DMatrix<f64>,
    /// Eigenvalues of `DT(x_i)`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Lower and upper eigenvalue bounds over the ball.
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// Bound on the third-derivative norm of the potential over the ball.
    pub d3: f64,
    /// `(1 + epsilon) T(x_i) - x_i`.
    pub boost: Point,
}

impl SprayBall {
    pub fn volume(&self) -> f64 {
        crate::geometry::unit_ball_volume(self.center.len()) * self.radius.powi(self.center.len() as i32)
    }

    /// Eigenvalues rescaled to unit product, so the droplet preserves volume.
    pub fn unimodular_eigenvalues(&self) -> Vec<f64> {
        let d = self.eigenvalues.len() as f64;
        let det: f64 = self.eigenvalues.iter().product();
        let s = det.powf(-1.0 / d);
        self.eigenvalues.iter().map(|l| l * s).collect()
    }

    /// Spray map on this ball: `(1 + eps) T(x_i) + DT_i (x - x_i)` with the
    /// unimodular Jacobian.
    pub fn affine_image(&self, epsilon: f64, x: &Point) -> Point {
        let lam = self.unimodular_eigenvalues();
        let y = self.frame.transpose() * (x - &self.center);
        let y = Point::from_fn(y.len(), |k, _| y[k] * lam[k]);
        &self.image * (1.0 + epsilon) + &self.frame * y
    }
}

/// Disjoint ball cover of the source with per-ball map data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SprayPlan {
    pub epsilon: f64,
    pub delta: f64,
    pub balls: Vec<SprayBall>,
    pub source_mass: f64,
    pub covered_mass: f64,
    pub coverage_fraction: f64,
    /// Diameter of the target samples.
    pub target_diameter: f64,
    /// Balls whose droplet could not be built, with the reason.
    pub dropped: Vec<(usize, String)>,
}

/// A built spray: one boosted droplet per surviving ball.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EulerSpray {
    pub plan: SprayPlan,
    /// Indices into `plan.balls`, parallel to `droplets`.
    pub ball_index: Vec<usize>,
    pub droplets: Vec<BoostedDroplet>,
    pub total_action: f64,
}

/// Translation applied by [`recenter_target`] and the resulting bound check.
#[derive(Clone, Debug, Serialize)]
pub struct RecenterReport {
    pub translation: Point,
    pub target_diameter: f64,
    /// `max_i |T(x_i)|` after translation.
    pub sup_norm: f64,
    /// `sqrt(3)/2 diam` plus sampling slack.
    pub bound: f64,
    pub passed: bool,
}

/// Translates the field so the origin is the midpoint of a diametral pair of
/// the target samples, and checks `sup |T| <= sqrt(3)/2 diam`.
///
/// `slack` absorbs the difference between sampled and modeled targets.
pub fn recenter_target(field: &mut BrenierField, slack: f64) -> Result<RecenterReport> {
    let (i, j) = diametral_pair(&field.targets).ok_or(Error::EmptySupport)?;
    let mid = (&field.targets[i] + &field.targets[j]) * 0.5;
    let translation = -mid;
    field.translate(&translation);
    let diam = (&field.targets[i] - &field.targets[j]).norm();
    let index = field.index();
    let sup_norm = field
        .targets
        .iter()
        .map(|y| y.norm())
        .chain(field.sources.iter().map(|x| field.map_at(x, &index).norm()))
        .fold(0.0, f64::max);
    let bound = 0.5 * 3f64.sqrt() * diam + slack;
    Ok(RecenterReport { translation, target_diameter: diam, sup_norm, bound, passed: sup_norm <= bound })
}

/// Builds one droplet per ball: the geodesic from `(r, ..., r)` to
/// `r * lambda` in the eigen-frame, boosted by `b_i` from the ball center.
///
/// Balls whose geodesic fails are dropped and recorded in `plan.dropped`,
/// and the covered mass is reduced accordingly.
pub fn build_spray(plan: &SprayPlan, bvp: &BvpOptions) -> Result<EulerSpray> {
    let built: Vec<Result<BoostedDroplet>> = plan
        .balls
        .par_iter()
        .map(|b| {
            let d = b.center.len();
            let r = b.radius;
            let lam = b.unimodular_eigenvalues();
            let end: Vec<f64> = lam.iter().map(|l| r * l).collect();
            let g = geodesic_bvp(r, &vec![r; d], &end, bvp)?;
            BoostedDroplet::new(g, b.boost.clone(), b.center.clone(), b.frame.clone())
        })
        .collect();
    let mut plan = plan.clone();
    let mut droplets = Vec::with_capacity(built.len());
    let mut ball_index = Vec::with_capacity(built.len());
    for (i, res) in built.into_iter().enumerate() {
        match res {
            Ok(dr) => {
                droplets.push(dr);
                ball_index.push(i);
            }
            Err(e) => {
                plan.covered_mass -= plan.balls[i].volume();
                plan.dropped.push((i, e.to_string()));
            }
        }
    }
    plan.coverage_fraction = plan.covered_mass / plan.source_mass;
    let total_action = droplets.iter().map(|d| d.action()).sum();
    Ok(EulerSpray { plan, ball_index, droplets, total_action })
}

/// Recenters, covers and builds in one call. Returns the spray together with
/// the recentering report; `omega0` is translated along with the field.
pub fn spray_pipeline(
    omega0: &GridDensity,
    field: &mut BrenierField,
    opts: &SprayOptions,
) -> Result<(EulerSpray, RecenterReport, GridDensity)> {
    let slack = omega0.cell_diagonal();
    let report = recenter_target(field, slack)?;
    let omega0 = omega0.translated(&report.translation);
    let plan = vitali_cover(&omega0, field, opts)?;
    let spray = build_spray(&plan, &opts.bvp)?;
    Ok((spray, report, omega0))
}

impl EulerSpray {
    pub fn epsilon(&self) -> f64 {
        self.plan.epsilon
    }

    pub fn ball(&self, k: usize) -> &SprayBall {
        &self.plan.balls[self.ball_index[k]]
    }

    pub fn len(&self) -> usize {
        self.droplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.droplets.is_empty()
    }

    /// Sum of droplet volumes.
    pub fn volume(&self) -> f64 {
        self.droplets.iter().map(|d| d.volume()).sum()
    }

    /// States of droplet `k` at the times of its own grid.
    pub fn grid_states(&self, k: usize) -> Vec<DropletState> {
        let g = &self.droplets[k].geodesic;
        (0..g.times.len()).map(|i| g.state(i)).collect()
    }

    /// Position, velocity and pressure of the label `z` of droplet `k` at time `t`.
    pub fn particle(&self, k: usize, z: &Point, t: f64) -> Result<(Point, Point, f64)> {
        let s = self.droplets[k].geodesic.state_at(t)?;
        Ok(self.droplets[k].flow_with(&s, z))
    }

    /// Largest pressure over droplets and grid times; the pressure peaks at
    /// the droplet center where it equals `beta_dot`.
    pub fn max_pressure(&self) -> f64 {
        self.droplets
            .iter()
            .flat_map(|d| d.geodesic.beta_dot.iter().copied())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{point, GridSpec};
    use crate::transport::fit_field_potential;

    fn rigid_field(shift: &[f64]) -> BrenierField {
        let mut src = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                let p = point(&[i as f64 / 10.0 - 0.95, j as f64 / 10.0 - 0.95]);
                if p.norm() <= 1.0 {
                    src.push(p);
                }
            }
        }
        let b = point(shift);
        let tgt: Vec<Point> = src.iter().map(|x| x + &b).collect();
        let w = vec![1.0 / src.len() as f64; src.len()];
        fit_field_potential(src, tgt, w, 2, &Default::default()).unwrap()
    }

    #[test]
    fn recentering_moves_target_to_origin() {
        let mut f = rigid_field(&[5.0, 0.0]);
        let rep = recenter_target(&mut f, 1e-9).unwrap();
        assert!((rep.translation[0] + 5.0).abs() < 0.1, "{:?}", rep.translation);
        assert!(rep.passed);
    }

    #[test]
    fn rigid_field_covers_disk() {
        let disk = GridDensity::indicator(GridSpec::cube(2, -1.1, 1.1, 110).unwrap(), |x| x.norm() <= 1.0).unwrap();
        let mut f = rigid_field(&[0.5, 0.0]);
        let slack = disk.cell_diagonal();
        let rep = recenter_target(&mut f, slack).unwrap();
        let disk = disk.translated(&rep.translation);
        let opts = SprayOptions { epsilon: 0.2, delta: 0.1, ..Default::default() };
        let plan = vitali_cover(&disk, &f, &opts).unwrap();
        assert!(plan.coverage_fraction >= 0.9 && plan.coverage_fraction < 1.0);
        assert!(audit_plan(&plan, &f, 2).unwrap().passed());
        let spray = build_spray(&plan, &BvpOptions::default()).unwrap();
        assert!(spray.plan.dropped.is_empty());
        // Rigid droplets: the action is the kinetic energy of the boosts.
        let direct: f64 = plan.balls.iter().map(|b| b.volume() * b.boost.norm_squared()).sum();
        assert!((spray.total_action - direct).abs() < 1e-12 * direct.max(1.0));
    }
}
