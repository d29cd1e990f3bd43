//! Weak continuity and momentum residuals.

use rayon::prelude::*;
use serde::Serialize;

use super::bank::{Bump, TestFunctionBank};
use super::flows::{LagrangianFlow, Labels};
use crate::error::{Error, Result};
use crate::interpolation::DensityPath;

/// Accepted range of residual ratios under one halving of `h` and `dt`.
pub const RATIO_RANGE: (f64, f64) = (3.2, 4.8);

/// A path whose weak residuals can be evaluated.
#[derive(Clone, Copy)]
pub enum WeakPath<'a> {
    /// Label quadrature at the bank's `h`.
    Flow(&'a dyn LagrangianFlow),
    /// Midpoint rule on the cells of the path's frames.
    Grid(&'a DensityPath),
}

/// Mass-weighted sample: `m` is the mass represented, `p` the pressure.
struct Sample {
    x: Vec<f64>,
    m: f64,
    v: Vec<f64>,
    p: f64,
}

/// Per-time sample sets on the bank's time nodes.
fn sample_path(path: WeakPath, bank: &TestFunctionBank) -> Result<Vec<Vec<Sample>>> {
    match path {
        WeakPath::Flow(flow) => {
            let labels: Labels = flow.labels(bank.h)?;
            bank.times
                .iter()
                .map(|&t| {
                    let parts = flow.advance(&labels, t)?;
                    Ok(parts
                        .into_iter()
                        .zip(&labels.weights)
                        .map(|(p, &m)| Sample { x: p.x.as_slice().to_vec(), m, v: p.v.as_slice().to_vec(), p: p.p })
                        .collect())
                })
                .collect()
        }
        WeakPath::Grid(path) => {
            let spec = path.frames[0].density.spec();
            if (spec.cell_size - bank.h).abs() > 1e-12 * bank.h {
                return Err(Error::QuadratureMismatch(format!(
                    "bank h = {} but path cells are {}",
                    bank.h, spec.cell_size
                )));
            }
            if path.times.len() != bank.times.len()
                || path.times.iter().zip(&bank.times).any(|(a, b)| (a - b).abs() > 1e-12)
            {
                return Err(Error::QuadratureMismatch("bank and path time nodes differ".into()));
            }
            let vol = spec.cell_volume();
            let d = spec.dimension();
            Ok(path
                .frames
                .iter()
                .map(|f| {
                    let mut vel = vec![None; spec.n_cells()];
                    for (c, v) in &f.velocity {
                        vel[*c] = Some(v);
                    }
                    f.density
                        .support_cells()
                        .into_iter()
                        .map(|c| Sample {
                            x: spec.cell_center(c).as_slice().to_vec(),
                            m: f.density.value(c) * vol,
                            v: vel[c].cloned().unwrap_or_else(|| vec![0.0; d]),
                            p: 0.0,
                        })
                        .collect()
                })
                .collect())
        }
    }
}

/// Continuity residual and momentum residual vector of one test function.
fn residuals_for(f: &Bump, times: &[f64], weights: &[f64], samples: &[Vec<Sample>], with_pressure: bool) -> (f64, Vec<f64>) {
    let d = f.dim();
    let mut cont = 0.0;
    let mut mom = vec![0.0; d];
    let last = times.len() - 1;
    for (k, frame) in samples.iter().enumerate() {
        let (t, w) = (times[k], weights[k]);
        let sign = if k == 0 { -1.0 } else if k == last { 1.0 } else { 0.0 };
        for s in frame {
            let e = f.eval(&s.x, t);
            if e.value == 0.0 && e.dt == 0.0 && e.grad.iter().all(|g| *g == 0.0) {
                continue;
            }
            let vg: f64 = s.v.iter().zip(&e.grad).map(|(v, g)| v * g).sum();
            let material = e.dt + vg;
            cont += w * s.m * material;
            cont -= sign * s.m * e.value;
            for j in 0..d {
                let mut integrand = s.v[j] * material;
                if with_pressure {
                    integrand += s.p * e.grad[j];
                }
                mom[j] += w * s.m * integrand;
                mom[j] -= sign * s.m * s.v[j] * e.value;
            }
        }
    }
    (cont, mom)
}

/// Residuals of every bank function on `path`.
#[derive(Clone, Debug, Serialize)]
pub struct WeakResidualReport {
    pub h: f64,
    pub dt: f64,
    pub with_pressure: bool,
    /// `|int int rho (q_t + v . grad q) - [int rho q]|` per function.
    pub continuity: Vec<f64>,
    /// Norm over components `j` of the momentum residual for `phi e_j`.
    pub momentum: Vec<f64>,
}

/// Evaluates both residuals in one pass over the path.
///
/// With `with_pressure` the term `p div v~` enters the momentum residual;
/// label masses stand in for volume, which is exact for unit-density flows.
pub fn weak_residuals(path: WeakPath, bank: &TestFunctionBank, with_pressure: bool) -> Result<WeakResidualReport> {
    if let WeakPath::Flow(flow) = path {
        let (t0, t1) = flow.time_span();
        if bank.times[0] < t0 - 1e-12 || *bank.times.last().expect("bank has times") > t1 + 1e-12 {
            return Err(Error::QuadratureMismatch("bank times leave the flow's time span".into()));
        }
        if bank.functions.iter().any(|f| f.dim() != flow.dim()) {
            return Err(Error::QuadratureMismatch("bank and flow dimensions differ".into()));
        }
    }
    let samples = sample_path(path, bank)?;
    let weights = bank.time_weights();
    let (continuity, momentum): (Vec<f64>, Vec<f64>) = bank
        .functions
        .par_iter()
        .map(|f| {
            let (c, m) = residuals_for(f, &bank.times, &weights, &samples, with_pressure);
            (c.abs(), m.iter().map(|x| x * x).sum::<f64>().sqrt())
        })
        .unzip();
    let dt = bank.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(WeakResidualReport { h: bank.h, dt, with_pressure, continuity, momentum })
}

/// Continuity residual per bank function.
pub fn continuity_residual(path: WeakPath, bank: &TestFunctionBank) -> Result<Vec<f64>> {
    Ok(weak_residuals(path, bank, false)?.continuity)
}

/// Momentum residual per bank function; `with_pressure = false` tests the
/// pressureless system.
pub fn momentum_residual(path: WeakPath, bank: &TestFunctionBank, with_pressure: bool) -> Result<Vec<f64>> {
    Ok(weak_residuals(path, bank, with_pressure)?.momentum)
}

/// Residuals before and after one halving of `h` and `dt`.
#[derive(Clone, Debug, Serialize)]
pub struct RefinementReport {
    pub coarse: WeakResidualReport,
    pub fine: WeakResidualReport,
    pub continuity_ratios: Vec<f64>,
    pub momentum_ratios: Vec<f64>,
    /// Functions whose ratio lies in [`RATIO_RANGE`].
    pub continuity_in_range: usize,
    pub momentum_in_range: usize,
}

fn ratios(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    coarse.iter().zip(fine).map(|(c, f)| if *f > 0.0 { c / f } else { f64::INFINITY }).collect()
}

fn in_range(r: &[f64]) -> usize {
    r.iter().filter(|x| (RATIO_RANGE.0..=RATIO_RANGE.1).contains(*x)).count()
}

/// Compares two residual reports of the same bank at successive resolutions.
pub fn compare_refinement(coarse: WeakResidualReport, fine: WeakResidualReport) -> RefinementReport {
    let continuity_ratios = ratios(&coarse.continuity, &fine.continuity);
    let momentum_ratios = ratios(&coarse.momentum, &fine.momentum);
    RefinementReport {
        continuity_in_range: in_range(&continuity_ratios),
        momentum_in_range: in_range(&momentum_ratios),
        continuity_ratios,
        momentum_ratios,
        coarse,
        fine,
    }
}

/// Refinement study of a label flow: `bank` and `bank.refined()`.
pub fn refinement_study(flow: &dyn LagrangianFlow, bank: &TestFunctionBank, with_pressure: bool) -> Result<RefinementReport> {
    let coarse = weak_residuals(WeakPath::Flow(flow), bank, with_pressure)?;
    let fine = weak_residuals(WeakPath::Flow(flow), &bank.refined(), with_pressure)?;
    Ok(compare_refinement(coarse, fine))
}
