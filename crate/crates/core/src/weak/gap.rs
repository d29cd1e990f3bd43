//! Weak-star distance between a spray and the interpolant it approximates,
//! and the per-droplet mean-velocity bookkeeping.

use rayon::prelude::*;
use serde::Serialize;

use super::bank::TestFunctionBank;
use super::flows::{LagrangianFlow, Labels};
use crate::droplet::BoostedDroplet;
use crate::error::{Error, Result};

/// Slack allowed when comparing gaps across a sweep.
pub const MONOTONE_SLACK: f64 = 1e-6;

/// Gaps of one spray against the interpolant on the spray's labels.
#[derive(Clone, Debug, Serialize)]
pub struct WeakStarReport {
    /// `|<rho^eps - rho, q>|` per function.
    pub rho: Vec<f64>,
    /// Vector norm of `<rho^eps v^eps - rho v, q>`.
    pub momentum: Vec<f64>,
    /// Frobenius norm of `<rho^eps v^eps (x) v^eps - rho v (x) v, q>`.
    pub stress: Vec<f64>,
    /// Largest sampled pressure of the spray.
    pub sup_pressure: f64,
    /// `max |X^eps - T_t| + |X^eps' - T_t'|` over labels and times.
    pub particle_gap: f64,
    /// Mass of the labels both flows were compared on.
    pub mass: f64,
}

/// Space-time pairings of `spray` and `interpolant` with every bank
/// function. Both flows are advanced on the spray's labels, so the
/// comparison is restricted to the covered part of the source.
pub fn weak_star_gap(spray: &dyn LagrangianFlow, interpolant: &dyn LagrangianFlow, bank: &TestFunctionBank) -> Result<WeakStarReport> {
    if spray.dim() != interpolant.dim() {
        return Err(Error::QuadratureMismatch("spray and interpolant dimensions differ".into()));
    }
    let labels: Labels = spray.labels(bank.h)?;
    let weights = bank.time_weights();
    let d = spray.dim();
    let nf = bank.functions.len();
    let mut acc = vec![(0.0, vec![0.0; d], vec![0.0; d * d]); nf];
    let mut sup_pressure: f64 = 0.0;
    let mut particle_gap: f64 = 0.0;
    for (&t, &w) in bank.times.iter().zip(&weights) {
        let a = spray.advance(&labels, t)?;
        let b = interpolant.advance(&labels, t)?;
        for (pa, pb) in a.iter().zip(&b) {
            sup_pressure = sup_pressure.max(pa.p);
            particle_gap = particle_gap.max((&pa.x - &pb.x).norm() + (&pa.v - &pb.v).norm());
        }
        let contrib: Vec<(f64, Vec<f64>, Vec<f64>)> = bank
            .functions
            .par_iter()
            .map(|f| {
                let mut r = 0.0;
                let mut m = vec![0.0; d];
                let mut s = vec![0.0; d * d];
                for ((pa, pb), &wk) in a.iter().zip(&b).zip(&labels.weights) {
                    let qa = f.value(pa.x.as_slice(), t);
                    let qb = f.value(pb.x.as_slice(), t);
                    if qa == 0.0 && qb == 0.0 {
                        continue;
                    }
                    r += wk * (qa - qb);
                    for i in 0..d {
                        m[i] += wk * (qa * pa.v[i] - qb * pb.v[i]);
                        for j in 0..d {
                            s[i * d + j] += wk * (qa * pa.v[i] * pa.v[j] - qb * pb.v[i] * pb.v[j]);
                        }
                    }
                }
                (r, m, s)
            })
            .collect();
        for (slot, (r, m, s)) in acc.iter_mut().zip(contrib) {
            slot.0 += w * r;
            slot.1.iter_mut().zip(&m).for_each(|(x, y)| *x += w * y);
            slot.2.iter_mut().zip(&s).for_each(|(x, y)| *x += w * y);
        }
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(WeakStarReport {
        rho: acc.iter().map(|a| a.0.abs()).collect(),
        momentum: acc.iter().map(|a| norm(&a.1)).collect(),
        stress: acc.iter().map(|a| norm(&a.2)).collect(),
        sup_pressure,
        particle_gap,
        mass: labels.mass(),
    })
}

/// One spray of an epsilon sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    /// Largest pressure of the spray (center pressure over its time grid).
    pub sup_pressure: f64,
    pub gaps: WeakStarReport,
}

/// A gap that grew when epsilon decreased.
#[derive(Clone, Debug, Serialize)]
pub struct MonotoneViolation {
    pub function: usize,
    pub quantity: &'static str,
    /// Index of the smaller epsilon in the sweep.
    pub step: usize,
    pub increase: f64,
}

/// Rates of an epsilon sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub epsilons: Vec<f64>,
    /// `sup p / eps` per point.
    pub pressure_ratios: Vec<f64>,
    /// `particle gap / sqrt(eps)` per point.
    pub particle_ratios: Vec<f64>,
    /// Fitted constants: the largest ratio at the coarsest two epsilons.
    pub pressure_constant: f64,
    pub particle_constant: f64,
    pub pressure_ok: bool,
    pub particle_ok: bool,
    pub violations: Vec<MonotoneViolation>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.pressure_ok && self.particle_ok && self.violations.is_empty()
    }
}

/// Analyzes a sweep ordered by decreasing epsilon.
///
/// The constants are fitted on the two largest epsilons; every later ratio
/// must stay below them (relative slack [`MONOTONE_SLACK`]), and every gap
/// must be nonincreasing up to [`MONOTONE_SLACK`].
pub fn sweep_report(points: &[SweepPoint]) -> Result<SweepReport> {
    if points.len() < 2 || points.windows(2).any(|w| w[1].epsilon >= w[0].epsilon) {
        return Err(Error::InvalidInput("sweep needs at least two decreasing epsilons".into()));
    }
    let epsilons: Vec<f64> = points.iter().map(|p| p.epsilon).collect();
    let pressure_ratios: Vec<f64> = points.iter().map(|p| p.sup_pressure / p.epsilon).collect();
    let particle_ratios: Vec<f64> = points.iter().map(|p| p.gaps.particle_gap / p.epsilon.sqrt()).collect();
    let fit = |r: &[f64]| r[0].max(r[1]);
    let pressure_constant = fit(&pressure_ratios);
    let particle_constant = fit(&particle_ratios);
    let bounded = |r: &[f64], c: f64| r.iter().all(|x| *x <= c * (1.0 + MONOTONE_SLACK));
    let nonincreasing = |r: &[f64]| r.windows(2).all(|w| w[1] <= w[0] * (1.0 + MONOTONE_SLACK));
    let pressure_ok = bounded(&pressure_ratios, pressure_constant) && nonincreasing(&pressure_ratios);
    let particle_ok = bounded(&particle_ratios, particle_constant);
    let mut violations = Vec::new();
    for step in 1..points.len() {
        let (prev, cur) = (&points[step - 1].gaps, &points[step].gaps);
        for (quantity, a, b) in
            [("rho", &prev.rho, &cur.rho), ("momentum", &prev.momentum, &cur.momentum), ("stress", &prev.stress, &cur.stress)]
        {
            for (function, (x, y)) in a.iter().zip(b.iter()).enumerate() {
                if *y > x + MONOTONE_SLACK {
                    violations.push(MonotoneViolation { function, quantity, step, increase: y - x });
                }
            }
        }
    }
    Ok(SweepReport {
        epsilons,
        pressure_ratios,
        particle_ratios,
        pressure_constant,
        particle_constant,
        pressure_ok,
        particle_ok,
        violations,
    })
}

/// Mean velocity and action split of one droplet.
#[derive(Clone, Debug, Serialize)]
pub struct DropletMeanVelocity {
    pub boost: Vec<f64>,
    /// `max_t |vbar(t) - vbar(0)|`.
    pub drift: f64,
    /// `max_t |vbar(t) - b|`.
    pub boost_error: f64,
    /// Quadrature of `int int |v - vbar|^2 + |Omega| |vbar|^2`.
    pub action_quadrature: f64,
    /// Closed-form droplet action.
    pub action: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeanVelocityReport {
    pub droplets: Vec<DropletMeanVelocity>,
    pub max_drift: f64,
    pub total_quadrature: f64,
    pub total_action: f64,
    pub relative_action_error: f64,
}

impl MeanVelocityReport {
    pub fn passed(&self) -> bool {
        self.max_drift <= 1e-6 && self.relative_action_error <= 5e-3
    }
}

/// Checks that each droplet's mean velocity is constant in time and that
/// its action splits into internal and translational parts.
pub fn mean_velocity_check(droplets: &[BoostedDroplet], h: f64, steps: usize) -> Result<MeanVelocityReport> {
    if steps == 0 {
        return Err(Error::InvalidInput("mean velocity check needs at least one time step".into()));
    }
    let per: Vec<DropletMeanVelocity> = droplets
        .par_iter()
        .map(|dr| {
            let labels = LagrangianFlow::labels(dr, h)?;
            let vol = labels.mass();
            let (t0, t1) = LagrangianFlow::time_span(dr);
            let times = super::bank::uniform_times(t0, t1, steps);
            let dt = (t1 - t0) / steps as f64;
            let mut first: Option<nalgebra::DVector<f64>> = None;
            let (mut drift, mut boost_error, mut action): (f64, f64, f64) = (0.0, 0.0, 0.0);
            for (k, &t) in times.iter().enumerate() {
                let parts = dr.advance(&labels, t)?;
                let mut mean = nalgebra::DVector::zeros(dr.dim());
                for (p, w) in parts.iter().zip(&labels.weights) {
                    mean += *w * &p.v;
                }
                mean /= vol;
                let internal: f64 =
                    parts.iter().zip(&labels.weights).map(|(p, w)| w * (&p.v - &mean).norm_squared()).sum();
                let density = internal + vol * mean.norm_squared();
                let tw = if k == 0 || k == steps { 0.5 * dt } else { dt };
                action += tw * density;
                boost_error = boost_error.max((&mean - &dr.boost).norm());
                match &first {
                    None => first = Some(mean),
                    Some(m0) => drift = drift.max((&mean - m0).norm()),
                }
            }
            Ok(DropletMeanVelocity {
                boost: dr.boost.as_slice().to_vec(),
                drift,
                boost_error,
                action_quadrature: action,
                action: dr.action(),
            })
        })
        .collect::<Result<_>>()?;
    let total_quadrature: f64 = per.iter().map(|d| d.action_quadrature).sum();
    let total_action: f64 = per.iter().map(|d| d.action).sum();
    let relative_action_error =
        if total_action > 0.0 { (total_quadrature - total_action).abs() / total_action } else { total_quadrature.abs() };
    Ok(MeanVelocityReport {
        max_drift: per.iter().map(|d| d.drift).fold(0.0, f64::max),
        droplets: per,
        total_quadrature,
        total_action,
        relative_action_error,
    })
}
