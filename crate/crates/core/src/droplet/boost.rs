//! Galilean boosts and rotations of droplets.

use super::{DropletGeodesic, DropletState};
use crate::error::{Error, Result};
use crate::geometry::{orthogonality_defect, unit_ball_volume, Ellipsoid, Point};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A droplet whose frame is rotated by `rotation` and whose center moves as
/// `start_center + t * boost`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoostedDroplet {
    pub geodesic: DropletGeodesic,
    pub boost: Point,
    pub start_center: Point,
    pub rotation: DMatrix<f64>,
}

impl BoostedDroplet {
    pub fn new(geodesic: DropletGeodesic, boost: Point, start_center: Point, rotation: DMatrix<f64>) -> Result<Self> {
        let d = geodesic.dim();
        if boost.len() != d || start_center.len() != d || rotation.nrows() != d || rotation.ncols() != d {
            return Err(Error::InvalidInput("boosted droplet dimension mismatch".into()));
        }
        let defect = orthogonality_defect(&rotation);
        if defect > 1e-12 {
            return Err(Error::InvalidInput(format!("rotation not orthogonal (defect {defect:e})")));
        }
        Ok(Self { geodesic, boost, start_center, rotation })
    }

    /// Unrotated droplet at rest at the origin.
    pub fn at_rest(geodesic: DropletGeodesic) -> Self {
        let d = geodesic.dim();
        Self { geodesic, boost: DVector::zeros(d), start_center: DVector::zeros(d), rotation: DMatrix::identity(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.geodesic.dim()
    }

    pub fn center(&self, t: f64) -> Point {
        &self.start_center + t * &self.boost
    }

    /// Droplet-frame coordinates of the world point `x`.
    pub fn local(&self, x: &Point, t: f64) -> Vec<f64> {
        (self.rotation.transpose() * (x - self.center(t))).iter().copied().collect()
    }

    /// World point of the droplet-frame coordinates `y`.
    pub fn world(&self, y: &[f64], t: f64) -> Point {
        self.center(t) + &self.rotation * DVector::from_column_slice(y)
    }

    /// Potential, velocity and pressure at the world point `x`.
    pub fn fields(&self, x: &Point, t: f64) -> Result<(f64, Point, f64)> {
        let s = self.geodesic.state_at(t)?;
        Ok(self.fields_with(&s, x))
    }

    /// [`Self::fields`] for a precomputed state.
    pub fn fields_with(&self, s: &DropletState, x: &Point) -> (f64, Point, f64) {
        let y = self.local(x, s.t);
        let (phi, v, p) = s.fields(&y);
        let phi = phi + self.boost.dot(x) - 0.5 * self.boost.norm_squared() * s.t;
        let v = &self.rotation * DVector::from_vec(v) + &self.boost;
        (phi, v, p)
    }

    /// Lagrangian flow of the label `z` (its position at `t = 0`): position,
    /// velocity and pressure at the state's time.
    pub fn flow_with(&self, s: &DropletState, z: &Point) -> (Point, Point, f64) {
        let a0 = self.geodesic.start();
        let y0 = self.rotation.transpose() * (z - &self.start_center);
        let d = self.dim();
        let y = DVector::from_fn(d, |j, _| y0[j] * s.a[j] / a0[j]);
        let ydot = DVector::from_fn(d, |j, _| y0[j] * s.adot[j] / a0[j]);
        let q: f64 = (0..d).map(|j| (y0[j] / a0[j]).powi(2)).sum();
        let x = self.center(s.t) + &self.rotation * y;
        let v = &self.rotation * ydot + &self.boost;
        (x, v, s.beta_dot * (1.0 - q).max(0.0))
    }

    pub fn contains(&self, x: &Point, t: f64) -> Result<bool> {
        let s = self.geodesic.state_at(t)?;
        Ok(s.contains(&self.local(x, t)))
    }

    /// Occupied ellipsoid at time `t`.
    pub fn ellipsoid(&self, t: f64) -> Result<Ellipsoid> {
        let s = self.geodesic.state_at(t)?;
        Ellipsoid::new(self.center(t), DVector::from_vec(s.a), self.rotation.clone())
    }

    /// Ellipsoid with linearly interpolated axes, which contains
    /// [`Self::ellipsoid`] at every time.
    pub fn wasserstein_ellipsoid(&self, t: f64) -> Result<Ellipsoid> {
        let (a0, a1) = (self.geodesic.start(), self.geodesic.end());
        let axes = DVector::from_iterator(a0.len(), a0.iter().zip(a1).map(|(x, y)| (1.0 - t) * x + t * y));
        Ellipsoid::new(self.center(t), axes, self.rotation.clone())
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.geodesic.r.powi(self.dim() as i32)
    }

    /// `omega_d r^d (|b|^2 + c^2 / (d + 2))`.
    pub fn action(&self) -> f64 {
        let d = self.dim() as f64;
        self.volume() * (self.boost.norm_squared() + self.geodesic.c.powi(2) / (d + 2.0))
    }
}
