//! Time-reparametrized concatenation of density paths, and a finite
//! spray-based connection between general densities.

use serde::Serialize;

use super::{spray_pipeline, SprayOptions};
use crate::droplet::DropletState;
use crate::error::{Error, Result};
use crate::geometry::{rectangle_quantize, sample_uniform, DiscreteMeasure, GridDensity, Point, PointIndex};
use crate::interpolation::{particles, DensityPath, PathFrame};
use crate::transport::{estimate_brenier_field, estimate_potential_field, FieldOptions};

/// Largest admissible endpoint gap between consecutive paths.
pub const CHAIN_TOL: f64 = 1e-6;

/// A concatenated path with its segment bookkeeping.
#[derive(Clone, Debug)]
pub struct ChainPath {
    pub path: DensityPath,
    pub taus: Vec<f64>,
    /// Start time of each segment in the concatenated clock.
    pub offsets: Vec<f64>,
    pub segment_actions: Vec<f64>,
}

/// Upper bound on the Wasserstein distance between two rasters on one grid:
/// the mismatched mass moved across the support diameter.
fn chain_gap(a: &GridDensity, b: &GridDensity) -> f64 {
    if !a.same_grid(b) {
        return f64::INFINITY;
    }
    let l1 = a.l1_distance(b).unwrap_or(f64::INFINITY);
    if l1 == 0.0 {
        return 0.0;
    }
    let (lo, hi) = a.spec().bounds();
    (hi - lo).norm() * (0.5 * l1).sqrt()
}

/// Runs the paths one after the other, path `k` on `[sum_{j<k} tau_j,
/// sum_{j<=k} tau_j]` with velocities scaled by `1 / tau_k`.
///
/// The action of the result is `sum_k A_k / tau_k`.
pub fn concatenate(paths: &[DensityPath], taus: &[f64]) -> Result<ChainPath> {
    if paths.is_empty() || paths.len() != taus.len() {
        return Err(Error::InvalidInput("need one positive duration per path".into()));
    }
    if taus.iter().any(|t| !(*t > 0.0)) || (taus.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput("durations must be positive and sum to 1".into()));
    }
    for k in 0..paths.len() - 1 {
        let (Some(end), Some(start)) = (paths[k].frames.last(), paths[k + 1].frames.first()) else {
            return Err(Error::InvalidInput(format!("path {k} has no frames")));
        };
        let gap = chain_gap(&end.density, &start.density);
        if !(gap <= CHAIN_TOL) {
            return Err(Error::ChainBroken { k, gap });
        }
    }
    let mut frames: Vec<PathFrame> = Vec::new();
    let mut offsets = Vec::with_capacity(paths.len());
    let mut offset = 0.0;
    for (k, (p, &tau)) in paths.iter().zip(taus).enumerate() {
        offsets.push(offset);
        for (m, f) in p.frames.iter().enumerate() {
            // The first frame repeats the end of the previous segment.
            if k > 0 && m == 0 {
                continue;
            }
            let velocity = f.velocity.iter().map(|(c, v)| (*c, v.iter().map(|x| x / tau).collect())).collect();
            frames.push(PathFrame { t: offset + tau * f.t, density: f.density.clone(), velocity });
        }
        offset += tau;
    }
    let times = frames.iter().map(|f| f.t).collect();
    let segment_actions: Vec<f64> = paths.iter().map(|p| p.action).collect();
    let action = segment_actions.iter().zip(taus).map(|(a, t)| a / t).sum();
    Ok(ChainPath {
        path: DensityPath { times, frames, action },
        taus: taus.to_vec(),
        offsets,
        segment_actions,
    })
}

/// Durations proportional to `sqrt(A_k)`, which minimize the concatenated
/// action to `(sum_k sqrt(A_k))^2`. Zero-action segments get a tiny share.
pub fn compressed_taus(actions: &[f64]) -> Vec<f64> {
    let floor = 1e-12;
    let w: Vec<f64> = actions.iter().map(|a| a.max(0.0).sqrt().max(floor)).collect();
    let s: f64 = w.iter().sum();
    let mut taus: Vec<f64> = w.iter().map(|x| x / s).collect();
    let last = taus.len() - 1;
    taus[last] = 1.0 - taus[..last].iter().sum::<f64>();
    taus
}

/// Settings of [`connect_general_densities`].
#[derive(Clone, Debug)]
pub struct ConnectOptions {
    /// Samples per endpoint for the transport fits.
    pub samples: usize,
    /// Degree of the potential fitted for the main spray.
    pub degree: u32,
    /// Particles per cell and axis.
    pub supersample: usize,
    /// Frames per segment, endpoints included.
    pub frames: usize,
    pub delta: f64,
    pub seed: u64,
}

impl Default for ConnectOptions {
    fn default() -> Self {
        Self { samples: 1500, degree: 3, supersample: 2, frames: 9, delta: 0.05, seed: 0 }
    }
}

/// Bookkeeping of [`connect_general_densities`].
#[derive(Clone, Debug, Serialize)]
pub struct ConnectReport {
    pub epsilon: f64,
    /// Squared distance between the sampled endpoints.
    pub dw2: f64,
    pub action: f64,
    /// `(action - dw2) / epsilon`.
    pub constant: f64,
    /// Names and actions of the segments that were kept.
    pub segments: Vec<(String, f64)>,
    /// Coverage of the main spray.
    pub coverage_fraction: f64,
    /// Distance bound between the last frame and `rho1`.
    pub endpoint_gap: f64,
    /// Budget of the correction sprays left out by the truncation.
    pub truncation_gap: f64,
}

/// Connects `rho0` to `rho1` through a finite chain: quantization of the
/// source at scale `epsilon diam`, the main Euler spray between the
/// quantized shapes (uncovered mass follows the interpolant map), and one
/// interpolant correction onto `rho1`. Segments are compressed so the action
/// is `(sum sqrt(A_k))^2`.
///
/// The whole chain moves one particle system, so consecutive segments join
/// exactly.
pub fn connect_general_densities(
    rho0: &GridDensity,
    rho1: &GridDensity,
    epsilon: f64,
    opts: &ConnectOptions,
) -> Result<(ChainPath, ConnectReport)> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon {epsilon} not in (0, 1)")));
    }
    if !rho0.same_grid(rho1) {
        return Err(Error::ResolutionMismatch("endpoints live on different grids".into()));
    }
    rho0.check_unit_bounded(1e-9)?;
    rho1.check_unit_bounded(1e-9)?;
    let (m0, m1) = (rho0.mass(), rho1.mass());
    if !(m0 > 0.0) {
        return Err(Error::ZeroMass);
    }
    if (m0 - m1).abs() > 1e-6 * m0 {
        return Err(Error::MassMismatch { left: m0, right: m1 });
    }
    let spec = rho0.spec().clone();
    let nf = opts.frames.max(2);
    let times: Vec<f64> = (0..nf).map(|k| k as f64 / (nf - 1) as f64).collect();
    if rho0.l1_distance(rho1)? <= 1e-12 * m0 {
        let frames = times.iter().map(|&t| PathFrame { t, density: rho0.clone(), velocity: Vec::new() }).collect();
        let path = DensityPath { times: times.clone(), frames, action: 0.0 };
        let report = ConnectReport {
            epsilon,
            dw2: 0.0,
            action: 0.0,
            constant: 0.0,
            segments: vec![("identity".into(), 0.0)],
            coverage_fraction: 1.0,
            endpoint_gap: 0.0,
            truncation_gap: 0.0,
        };
        return Ok((ChainPath { path, taus: vec![1.0], offsets: vec![0.0], segment_actions: vec![0.0] }, report));
    }

    let sample = |g: &GridDensity, seed: u64, mass: f64| -> Result<DiscreteMeasure> {
        sample_uniform(g, opts.samples, seed)?.with_mass(mass)
    };
    let fopts = FieldOptions::default();
    let dw2 = {
        let f = estimate_brenier_field(&sample(rho0, opts.seed, m0)?, &sample(rho1, opts.seed + 1, m0)?, &fopts)?;
        f.transport_cost()
    };
    let diam = rho0.diam()?.max(rho1.diam()?);
    let (q0, _) = rectangle_quantize(rho0, epsilon * diam)?;
    let (q1, _) = rectangle_quantize(rho1, epsilon * diam)?;

    let (mut pos, mass) = particles(rho0, opts.supersample.max(1));
    let mut paths: Vec<(String, DensityPath)> = Vec::new();

    // Interpolant segment along a sampled field, advancing the particles.
    let interpolant_segment = |pos: &mut Vec<Point>, from: &GridDensity, to: &GridDensity, seed: u64| -> Result<DensityPath> {
        let f = estimate_brenier_field(&sample(from, seed, m0)?, &sample(to, seed + 1, m0)?, &fopts)?;
        let index = f.index();
        let end: Vec<Point> = pos.iter().map(|x| f.map_at(x, &index)).collect();
        let start = pos.clone();
        let p = DensityPath::from_lagrangian(&spec, &mass, &times, |k, t| {
            let v = &end[k] - &start[k];
            (&start[k] + &v * t, v)
        })?;
        *pos = end;
        Ok(p)
    };

    if q0.l1_distance(rho0)? > 1e-12 * m0 {
        let p = interpolant_segment(&mut pos, rho0, &q0, opts.seed + 10)?;
        paths.push(("quantize".into(), p));
    }

    // Main spray between the quantized shapes.
    let mu = sample(&q0, opts.seed + 20, q0.mass())?;
    let nu = sample(&q1, opts.seed + 21, q0.mass())?;
    let mut field = estimate_potential_field(&mu, &nu, opts.degree, &fopts)?;
    let sopts = SprayOptions { epsilon, delta: opts.delta, ..Default::default() };
    let (spray, recenter, _) = spray_pipeline(&q0, &mut field, &sopts)?;
    let shift = recenter.translation.clone();
    let centers: Vec<Point> = (0..spray.len()).map(|k| spray.ball(k).center.clone()).collect();
    let rmax = (0..spray.len()).map(|k| spray.ball(k).radius).fold(0.0, f64::max);
    let owner: Vec<Option<usize>> = if spray.is_empty() {
        vec![None; pos.len()]
    } else {
        let bidx = PointIndex::new(centers, 2.0 * rmax);
        pos.iter()
            .map(|p| {
                let x = p + &shift;
                bidx.within(&x, rmax).into_iter().find(|&k| (&x - &spray.ball(k).center).norm() < spray.ball(k).radius)
            })
            .collect()
    };
    let fidx = field.index();
    let tmap: Vec<Point> = pos.iter().map(|p| field.map_at(&(p + &shift), &fidx) - &shift).collect();
    let states: Vec<Vec<DropletState>> = (0..spray.len())
        .map(|k| times.iter().map(|&t| spray.droplets[k].geodesic.state_at(t)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let start = pos.clone();
    let tindex = |t: f64| times.iter().position(|&s| s == t).expect("frame time");
    let spray_path = DensityPath::from_lagrangian(&spec, &mass, &times, |k, t| match owner[k] {
        Some(b) => {
            let (x, v, _) = spray.droplets[b].flow_with(&states[b][tindex(t)], &(&start[k] + &shift));
            (x - &shift, v)
        }
        None => {
            let v = &tmap[k] - &start[k];
            (&start[k] + &v * t, v)
        }
    })?;
    let last = times.len() - 1;
    for (k, p) in pos.iter_mut().enumerate() {
        *p = match owner[k] {
            Some(b) => spray.droplets[b].flow_with(&states[b][last], &(&start[k] + &shift)).0 - &shift,
            None => tmap[k].clone(),
        };
    }
    let spray_end = spray_path.frames.last().map(|f| f.density.clone()).ok_or(Error::EmptySupport)?;
    paths.push(("spray".into(), spray_path));

    // Correction from the spray image onto the target.
    let p = interpolant_segment(&mut pos, &spray_end, rho1, opts.seed + 30)?;
    paths.push(("correction".into(), p));
    let endpoint_gap = paths.last().and_then(|p| p.1.frames.last()).map_or(f64::INFINITY, |f| chain_gap(&f.density, rho1));

    let kept: Vec<(String, DensityPath)> = paths.into_iter().filter(|p| p.1.action > 0.0).collect();
    let actions: Vec<f64> = kept.iter().map(|p| p.1.action).collect();
    let taus = compressed_taus(&actions);
    let segs: Vec<DensityPath> = kept.iter().map(|p| p.1.clone()).collect();
    let chain = concatenate(&segs, &taus)?;
    let action = chain.path.action;
    let report = ConnectReport {
        epsilon,
        dw2,
        action,
        constant: (action - dw2) / epsilon,
        segments: kept.iter().map(|p| (p.0.clone(), p.1.action)).collect(),
        coverage_fraction: spray.plan.coverage_fraction,
        endpoint_gap,
        // Correction sprays with budgets eps 2^-k, k >= 1, are replaced by one interpolant.
        truncation_gap: epsilon,
    };
    Ok((chain, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridSpec;

    fn path_of(rho: &GridDensity, shift: f64) -> DensityPath {
        let b = Point::from_element(rho.dimension(), shift);
        DensityPath::build(rho, &|x| x + &b, &[0.0, 0.5, 1.0], &Default::default()).unwrap()
    }

    #[test]
    fn single_path_is_identity() {
        let spec = GridSpec::cube(1, -2.0, 2.0, 80).unwrap();
        let rho = GridDensity::indicator(spec, |x| x[0].abs() < 0.5).unwrap();
        let p = path_of(&rho, 0.5);
        let c = concatenate(std::slice::from_ref(&p), &[1.0]).unwrap();
        assert_eq!(c.path.action, p.action);
        assert_eq!(c.path.times, p.times);
    }

    #[test]
    fn broken_chain_is_reported() {
        let spec = GridSpec::cube(1, -2.0, 2.0, 80).unwrap();
        let rho = GridDensity::indicator(spec, |x| x[0].abs() < 0.5).unwrap();
        let p = path_of(&rho, 0.5);
        assert!(matches!(concatenate(&[p.clone(), p], &[0.5, 0.5]), Err(Error::ChainBroken { k: 0, .. })));
    }

    #[test]
    fn compressed_durations_give_squared_sum() {
        let a = [1.0, 4.0, 9.0];
        let taus = compressed_taus(&a);
        let action: f64 = a.iter().zip(&taus).map(|(a, t)| a / t).sum();
        assert!((action - 36.0).abs() < 1e-12);
    }
}
