//! Flows represented by mass-carrying labels.
//!
//! A label is a quadrature node in the initial domain with the mass of its
//! cell. Since every flow here transports mass along its trajectories, the
//! pairing `int rho f(x, t) dx` equals the label sum of `f(X(z, t), t)`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::droplet::BoostedDroplet;
use crate::error::{Error, Result};
use crate::geometry::{Ball, BallQuadrature, Point};
use crate::spray::EulerSpray;

/// Label nodes with their masses; `owner[k]` is the component (droplet or
/// ball) label `k` belongs to. Labels of one owner are contiguous.
#[derive(Clone, Debug, Default)]
pub struct Labels {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub owner: Vec<usize>,
}

impl Labels {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Appends the quadrature of the ellipsoid `center + R diag(axes) B`
    /// with about `max(axes) / h` shells.
    pub fn push_ellipsoid(&mut self, center: &Point, axes: &[f64], rotation: &DMatrix<f64>, h: f64, owner: usize) -> Result<()> {
        let d = axes.len();
        let amax = axes.iter().cloned().fold(0.0, f64::max);
        let shells = ((amax / h).round() as usize).max(1);
        let q = BallQuadrature::new(d, shells)?;
        let jac: f64 = axes.iter().product();
        for (u, w) in q.nodes.iter().zip(&q.weights) {
            let y = Point::from_fn(d, |j, _| axes[j] * u[j]);
            self.points.push(center + rotation * y);
            self.weights.push(w * jac);
            self.owner.push(owner);
        }
        Ok(())
    }

    /// Index ranges of each owner, in owner order.
    fn runs(&self) -> Vec<(usize, std::ops::Range<usize>)> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.owner.len() {
            if k == self.owner.len() || self.owner[k] != self.owner[start] {
                out.push((self.owner[start], start..k));
                start = k;
            }
        }
        out
    }
}

/// Position, velocity and pressure of one label.
#[derive(Clone, Debug, PartialEq)]
pub struct Particle {
    pub x: Point,
    pub v: Point,
    pub p: f64,
}

/// A flow given by the trajectories of its labels.
pub trait LagrangianFlow: Sync {
    fn dim(&self) -> usize;

    fn time_span(&self) -> (f64, f64);

    /// Labels of the initial domain at spatial resolution `h`.
    fn labels(&self, h: f64) -> Result<Labels>;

    /// States of `labels` at time `t`.
    fn advance(&self, labels: &Labels, t: f64) -> Result<Vec<Particle>>;
}

fn check_time(span: (f64, f64), t: f64) -> Result<()> {
    if t < span.0 - 1e-12 || t > span.1 + 1e-12 {
        return Err(Error::QuadratureMismatch(format!("time {t} outside flow span [{}, {}]", span.0, span.1)));
    }
    Ok(())
}

impl LagrangianFlow for BoostedDroplet {
    fn dim(&self) -> usize {
        BoostedDroplet::dim(self)
    }

    fn time_span(&self) -> (f64, f64) {
        (self.geodesic.times[0], self.geodesic.t_end())
    }

    fn labels(&self, h: f64) -> Result<Labels> {
        let mut out = Labels::default();
        out.push_ellipsoid(&self.start_center, self.geodesic.start(), &self.rotation, h, 0)?;
        Ok(out)
    }

    fn advance(&self, labels: &Labels, t: f64) -> Result<Vec<Particle>> {
        let span = self.time_span();
        check_time(span, t)?;
        let s = self.geodesic.state_at(t.clamp(span.0, span.1))?;
        Ok(labels
            .points
            .iter()
            .map(|z| {
                let (x, v, p) = self.flow_with(&s, z);
                Particle { x, v, p }
            })
            .collect())
    }
}

impl LagrangianFlow for EulerSpray {
    fn dim(&self) -> usize {
        self.droplets.first().map_or(0, |d| d.dim())
    }

    fn time_span(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn labels(&self, h: f64) -> Result<Labels> {
        let mut out = Labels::default();
        for (k, d) in self.droplets.iter().enumerate() {
            out.push_ellipsoid(&d.start_center, d.geodesic.start(), &d.rotation, h, k)?;
        }
        Ok(out)
    }

    fn advance(&self, labels: &Labels, t: f64) -> Result<Vec<Particle>> {
        check_time(self.time_span(), t)?;
        let t = t.clamp(0.0, 1.0);
        let runs = labels.runs();
        let parts: Vec<Result<Vec<Particle>>> = runs
            .par_iter()
            .map(|(k, range)| {
                let d = self
                    .droplets
                    .get(*k)
                    .ok_or_else(|| Error::QuadratureMismatch(format!("label owner {k} is not a droplet")))?;
                let s = d.geodesic.state_at(t.min(d.geodesic.t_end()))?;
                Ok(labels.points[range.clone()]
                    .iter()
                    .map(|z| {
                        let (x, v, p) = d.flow_with(&s, z);
                        Particle { x, v, p }
                    })
                    .collect())
            })
            .collect();
        let mut out = Vec::with_capacity(labels.len());
        for p in parts {
            out.extend(p?);
        }
        Ok(out)
    }
}

/// Displacement interpolant `X(z, t) = z + t (T(z) - z)` of a union of
/// balls; pressureless.
#[derive(Clone)]
pub struct MapInterpolant {
    pub balls: Vec<Ball>,
    map: Arc<dyn Fn(&Point) -> Point + Send + Sync>,
}

impl std::fmt::Debug for MapInterpolant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MapInterpolant").field("balls", &self.balls.len()).finish()
    }
}

impl MapInterpolant {
    pub fn new(balls: Vec<Ball>, map: impl Fn(&Point) -> Point + Send + Sync + 'static) -> Result<Self> {
        if balls.is_empty() {
            return Err(Error::EmptySupport);
        }
        Ok(Self { balls, map: Arc::new(map) })
    }

    /// Interpolant of the affine map `x -> A x + b` on one ball.
    pub fn affine(ball: Ball, a: DMatrix<f64>, b: Point) -> Result<Self> {
        Self::new(vec![ball], move |x| &a * x + &b)
    }

    /// Interpolant of `map` restricted to the balls of a spray.
    pub fn on_spray(spray: &EulerSpray, map: impl Fn(&Point) -> Point + Send + Sync + 'static) -> Result<Self> {
        let balls = (0..spray.len())
            .map(|k| {
                let b = spray.ball(k);
                Ball::new(b.center.clone(), b.radius)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(balls, map)
    }

    pub fn map(&self, x: &Point) -> Point {
        (self.map)(x)
    }
}

impl LagrangianFlow for MapInterpolant {
    fn dim(&self) -> usize {
        self.balls[0].dim()
    }

    fn time_span(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn labels(&self, h: f64) -> Result<Labels> {
        let d = self.dim();
        let eye = DMatrix::identity(d, d);
        let mut out = Labels::default();
        for (k, b) in self.balls.iter().enumerate() {
            out.push_ellipsoid(&b.center, &vec![b.radius; d], &eye, h, k)?;
        }
        Ok(out)
    }

    fn advance(&self, labels: &Labels, t: f64) -> Result<Vec<Particle>> {
        check_time(self.time_span(), t)?;
        Ok(labels
            .points
            .par_iter()
            .map(|z| {
                let v = self.map(z) - z;
                Particle { x: z + t * &v, v, p: 0.0 }
            })
            .collect())
    }
}
