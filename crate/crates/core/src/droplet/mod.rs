//! Ellipsoidal Euler droplets.
//!
//! An axis-aligned droplet with semi-axes `a(t)` and volume radius `r` is a
//! constant-speed geodesic on the surface `prod a_j = r^d` in the Euclidean
//! metric on `a`. The geodesic equations are `a_j a_j'' = 2 beta'` where
//! `beta'` keeps the path on the surface. Integration runs in log
//! coordinates `u = log a`, where the surface is the hyperplane
//! `sum u_j = d log r` and the state is `(u, u', beta)`.

mod boost;
mod bvp;
mod checks;
pub mod ode;

pub use boost::BoostedDroplet;
pub use bvp::{geodesic_bvp, BvpOptions};
pub use checks::{
    action_bound_check, bound_check, droplet_action, nesting_check, quadrature_action, ActionBoundReport,
    BoundReport, NestingReport,
};

use crate::error::{Error, Result};
use crate::geometry::unit_ball_volume;
use ode::{DenseStep, OdeOptions};
use serde::{Deserialize, Serialize};

/// Relative tolerance on the volume constraint of inputs.
pub const SURFACE_TOL: f64 = 1e-9;
/// Axes may not grow beyond this multiple of `r`.
pub const BLOWUP_FACTOR: f64 = 1e3;
/// Default number of intervals in the stored time grid.
pub const DEFAULT_INTERVALS: usize = 32;

/// Droplet shape and rates at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct DropletState {
    pub t: f64,
    pub a: Vec<f64>,
    pub adot: Vec<f64>,
    pub beta: f64,
    pub beta_dot: f64,
}

impl DropletState {
    /// Potential, velocity and pressure at `x` in droplet coordinates.
    pub fn fields(&self, x: &[f64]) -> (f64, Vec<f64>, f64) {
        let mut phi = -self.beta;
        let mut q = 0.0;
        let v: Vec<f64> = (0..self.a.len())
            .map(|j| {
                let g = self.adot[j] / self.a[j];
                phi += 0.5 * g * x[j] * x[j];
                q += (x[j] / self.a[j]).powi(2);
                g * x[j]
            })
            .collect();
        let p = if q < 1.0 { self.beta_dot * (1.0 - q) } else { 0.0 };
        (phi, v, p)
    }

    /// Second derivatives `a''`.
    pub fn addot(&self) -> Vec<f64> {
        self.a.iter().map(|a| 2.0 * self.beta_dot / a).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.a).map(|(x, a)| (x / a).powi(2)).sum::<f64>() <= 1.0
    }
}

/// A geodesic on the constraint surface sampled on a time grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DropletGeodesic {
    pub r: f64,
    pub times: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub adot: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub beta_dot: Vec<f64>,
    pub c: f64,
    #[serde(skip)]
    opts: Option<OdeOptions>,
    #[serde(skip)]
    dense: Vec<DenseStep>,
}

impl DropletGeodesic {
    pub fn dim(&self) -> usize {
        self.a[0].len()
    }

    /// The stationary droplet with axes `a`.
    pub fn constant(r: f64, a: &[f64], intervals: usize) -> Result<Self> {
        check_surface(r, a)?;
        let times = time_grid(1.0, intervals);
        let m = times.len();
        Ok(Self {
            r,
            a: vec![a.to_vec(); m],
            adot: vec![vec![0.0; a.len()]; m],
            beta: vec![0.0; m],
            beta_dot: vec![0.0; m],
            times,
            c: 0.0,
            opts: None,
            dense: Vec::new(),
        })
    }

    pub fn start(&self) -> &[f64] {
        &self.a[0]
    }

    pub fn end(&self) -> &[f64] {
        self.a.last().expect("nonempty grid")
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("nonempty grid")
    }

    pub fn state(&self, k: usize) -> DropletState {
        DropletState {
            t: self.times[k],
            a: self.a[k].clone(),
            adot: self.adot[k].clone(),
            beta: self.beta[k],
            beta_dot: self.beta_dot[k],
        }
    }

    /// State at an arbitrary time in the grid range.
    pub fn state_at(&self, t: f64) -> Result<DropletState> {
        let (t0, t1) = (self.times[0], self.t_end());
        if !(t0..=t1).contains(&t) {
            return Err(Error::InvalidInput(format!("time {t} outside [{t0}, {t1}]")));
        }
        if let Ok(k) = self.times.binary_search_by(|s| s.total_cmp(&t)) {
            return Ok(self.state(k));
        }
        if self.c == 0.0 {
            let mut s = self.state(0);
            s.t = t;
            return Ok(s);
        }
        if !self.dense.is_empty() {
            let i = self.dense.partition_point(|s| s.t1() < t).min(self.dense.len() - 1);
            let y = self.dense[i].eval(t);
            return Ok(unpack(t, &y));
        }
        // Deserialized geodesic: restart from the preceding grid node.
        let k = self.times.partition_point(|s| *s <= t) - 1;
        let y0 = pack(&self.a[k], &self.adot[k], self.beta[k]);
        let d = self.dim();
        let (ys, _) = ode::integrate(
            &|_, y: &[f64], dy: &mut [f64]| rhs(d, y, dy),
            self.times[k],
            &y0,
            &[t],
            &self.opts.unwrap_or_default(),
            &|y: &mut [f64]| project(d, self.r, y),
            &|_, _| Ok(()),
        )?;
        Ok(unpack(t, &ys[0]))
    }

    /// Potential, velocity and pressure at `x` (droplet frame) and time `t`.
    pub fn fields(&self, x: &[f64], t: f64) -> Result<(f64, Vec<f64>, f64)> {
        Ok(self.state_at(t)?.fields(x))
    }

    /// Largest relative volume defect over the grid.
    pub fn volume_drift(&self) -> f64 {
        let vd = self.r.powi(self.dim() as i32);
        self.a.iter().map(|a| (a.iter().product::<f64>() - vd).abs() / vd).fold(0.0, f64::max)
    }

    /// Largest relative deviation of `|a'|^2` from `c^2` over the grid.
    pub fn speed_drift(&self) -> f64 {
        let c2 = self.c * self.c;
        self.adot
            .iter()
            .map(|v| {
                let s: f64 = v.iter().map(|x| x * x).sum();
                if c2 > 0.0 {
                    (s - c2).abs() / c2
                } else {
                    s
                }
            })
            .fold(0.0, f64::max)
    }

    /// Per-time action density `omega_d r^d |a'|^2 / (d + 2)`.
    pub fn action_density(&self) -> Vec<f64> {
        let d = self.dim();
        let k = unit_ball_volume(d) * self.r.powi(d as i32) / (d as f64 + 2.0);
        self.adot.iter().map(|v| k * v.iter().map(|x| x * x).sum::<f64>()).collect()
    }

    /// Reverses the time direction on `[0, t_end]`.
    pub fn reversed(&self) -> Result<Self> {
        let adot: Vec<f64> = self.adot.last().expect("nonempty").iter().map(|v| -v).collect();
        let intervals = self.times.len() - 1;
        geodesic_ivp_with(self.r, self.end(), &adot, self.t_end(), intervals, &self.opts.unwrap_or_default())
    }
}

/// Uniform grid `0, t_end/n, ..., t_end`.
pub fn time_grid(t_end: f64, intervals: usize) -> Vec<f64> {
    let n = intervals.max(1);
    (0..=n).map(|k| if k == n { t_end } else { t_end * k as f64 / n as f64 }).collect()
}

pub(crate) fn check_surface(r: f64, a: &[f64]) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("volume radius must be positive, got {r}")));
    }
    if a.is_empty() || a.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("semi-axes must be positive and finite".into()));
    }
    let vd = r.powi(a.len() as i32);
    let defect = (a.iter().product::<f64>() - vd).abs() / vd;
    if defect > SURFACE_TOL {
        return Err(Error::InvalidInput(format!("axes off the constraint surface (relative defect {defect:e})")));
    }
    Ok(())
}

fn pack(a: &[f64], adot: &[f64], beta: f64) -> Vec<f64> {
    let mut y: Vec<f64> = a.iter().map(|v| v.ln()).collect();
    y.extend(a.iter().zip(adot).map(|(a, v)| v / a));
    y.push(beta);
    y
}

fn unpack(t: f64, y: &[f64]) -> DropletState {
    let d = (y.len() - 1) / 2;
    let a: Vec<f64> = y[..d].iter().map(|u| u.exp()).collect();
    let adot: Vec<f64> = (0..d).map(|j| a[j] * y[d + j]).collect();
    DropletState { t, beta_dot: beta_dot(&y[..d], &y[d..2 * d]), a, adot, beta: y[2 * d] }
}

fn beta_dot(u: &[f64], w: &[f64]) -> f64 {
    let s1: f64 = w.iter().map(|x| x * x).sum();
    let s2: f64 = u.iter().map(|u| (-2.0 * u).exp()).sum();
    0.5 * s1 / s2
}

fn rhs(d: usize, y: &[f64], dy: &mut [f64]) {
    let (u, w) = (&y[..d], &y[d..2 * d]);
    let bd = beta_dot(u, w);
    for j in 0..d {
        dy[j] = w[j];
        dy[d + j] = 2.0 * bd * (-2.0 * u[j]).exp() - w[j] * w[j];
    }
    dy[2 * d] = bd;
}

/// Restores `sum u = d log r` and `sum w = 0`.
fn project(d: usize, r: f64, y: &mut [f64]) {
    let target = d as f64 * r.ln();
    let su: f64 = y[..d].iter().sum();
    let sw: f64 = y[d..2 * d].iter().sum();
    for j in 0..d {
        y[j] += (target - su) / d as f64;
        y[d + j] -= sw / d as f64;
    }
}

/// Integrates the droplet geodesic from `(a0, adot0)` up to `t_end`.
pub fn geodesic_ivp(r: f64, a0: &[f64], adot0: &[f64], t_end: f64) -> Result<DropletGeodesic> {
    geodesic_ivp_with(r, a0, adot0, t_end, DEFAULT_INTERVALS, &OdeOptions::default())
}

/// [`geodesic_ivp`] with an explicit grid size and tolerances.
pub fn geodesic_ivp_with(
    r: f64,
    a0: &[f64],
    adot0: &[f64],
    t_end: f64,
    intervals: usize,
    opts: &OdeOptions,
) -> Result<DropletGeodesic> {
    check_surface(r, a0)?;
    let d = a0.len();
    if adot0.len() != d {
        return Err(Error::InvalidInput("velocity dimension mismatch".into()));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidInput(format!("end time must be positive, got {t_end}")));
    }
    let tangency: f64 = a0.iter().zip(adot0).map(|(a, v)| v / a).sum();
    if tangency.abs() > 1e-9 {
        return Err(Error::TangencyViolated(tangency));
    }
    if adot0.iter().all(|v| *v == 0.0) {
        let mut g = DropletGeodesic::constant(r, a0, intervals)?;
        g.times = time_grid(t_end, intervals);
        return Ok(g);
    }
    let times = time_grid(t_end, intervals);
    let y0 = pack(a0, adot0, 0.0);
    let cap = (BLOWUP_FACTOR * r).ln();
    let (ys, dense) = ode::integrate(
        &|_, y: &[f64], dy: &mut [f64]| rhs(d, y, dy),
        0.0,
        &y0,
        &times[1..],
        opts,
        &|y: &mut [f64]| project(d, r, y),
        &|t, y: &[f64]| {
            let umax = y[..d].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if umax > cap || !umax.is_finite() {
                Err(Error::BlowupGuard { t, max_axis: umax.exp() })
            } else {
                Ok(())
            }
        },
    )?;
    let mut y_first = y0.clone();
    project(d, r, &mut y_first);
    let states: Vec<DropletState> = std::iter::once(unpack(0.0, &y_first))
        .chain(times[1..].iter().zip(&ys).map(|(t, y)| unpack(*t, y)))
        .collect();
    let c = states[0].adot.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(DropletGeodesic {
        r,
        c,
        a: states.iter().map(|s| s.a.clone()).collect(),
        adot: states.iter().map(|s| s.adot.clone()).collect(),
        beta: states.iter().map(|s| s.beta).collect(),
        beta_dot: states.iter().map(|s| s.beta_dot).collect(),
        times,
        opts: Some(*opts),
        dense,
    })
}
