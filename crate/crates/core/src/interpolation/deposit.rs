//! Pushforward rasterization by supersampled particle deposition with a
//! tent kernel of one cell width.

use crate::error::{Error, Result};
use crate::geometry::{GridDensity, GridSpec, Point};
use crate::transport::BrenierField;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

/// Deposition settings.
#[derive(Clone, Debug)]
pub struct PushforwardOptions {
    /// Sub-particles per cell and axis.
    pub supersample: usize,
    /// Output grid; `None` reuses the input grid.
    pub grid: Option<GridSpec>,
}

impl Default for PushforwardOptions {
    fn default() -> Self {
        Self { supersample: 3, grid: None }
    }
}

/// Supersampled particles of `rho`: positions and masses.
pub(crate) fn particles(rho: &GridDensity, s: usize) -> (Vec<Point>, Vec<f64>) {
    let spec = rho.spec();
    let d = spec.dims.len();
    let h = spec.cell_size;
    let offsets: Vec<Vec<f64>> = (0..s.pow(d as u32))
        .map(|m| {
            let mut rem = m;
            (0..d)
                .map(|_| {
                    let k = rem % s;
                    rem /= s;
                    ((k as f64 + 0.5) / s as f64 - 0.5) * h
                })
                .collect()
        })
        .collect();
    let sub = spec.cell_volume() / offsets.len() as f64;
    let mut pts = Vec::new();
    let mut mass = Vec::new();
    for c in rho.support_cells() {
        let center = spec.cell_center(c);
        let m = rho.values()[c] * sub;
        for o in &offsets {
            pts.push(DVector::from_iterator(d, (0..d).map(|j| center[j] + o[j])));
            mass.push(m);
        }
    }
    (pts, mass)
}

/// Tent-kernel stencil of `x`: `(flat cell, weight)` pairs.
fn stencil(spec: &GridSpec, x: &Point) -> Option<Vec<(usize, f64)>> {
    let d = spec.dims.len();
    let mut base = vec![0usize; d];
    let mut frac = vec![0.0; d];
    for j in 0..d {
        let q = (x[j] - spec.origin[j]) / spec.cell_size - 0.5;
        let f = q.floor();
        if !(f >= 0.0 && (f as usize) + 1 < spec.dims[j]) {
            return None;
        }
        base[j] = f as usize;
        frac[j] = q - f;
    }
    let mut out = Vec::with_capacity(1 << d);
    for corner in 0..(1usize << d) {
        let mut idx = base.clone();
        let mut w = 1.0;
        for j in 0..d {
            if corner >> j & 1 == 1 {
                idx[j] += 1;
                w *= frac[j];
            } else {
                w *= 1.0 - frac[j];
            }
        }
        out.push((spec.flatten(&idx), w));
    }
    Some(out)
}

/// Deposits masses (and optional vector payloads) at `points`.
/// Accumulation runs in input order, so results do not depend on threading.
fn deposit(spec: &GridSpec, points: &[Point], mass: &[f64], payload: Option<&[Point]>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let stencils: Vec<Option<Vec<(usize, f64)>>> = points.par_iter().map(|p| stencil(spec, p)).collect();
    let n = spec.n_cells();
    let d = spec.dims.len();
    let mut dens = vec![0.0; n];
    let mut mom = if payload.is_some() { vec![vec![0.0; d]; n] } else { Vec::new() };
    for (k, st) in stencils.iter().enumerate() {
        let st = st.as_ref().ok_or_else(|| {
            Error::ResolutionMismatch(format!("particle at {:?} leaves the output grid", points[k].as_slice()))
        })?;
        for &(c, w) in st {
            dens[c] += w * mass[k];
            if let Some(v) = payload {
                for j in 0..d {
                    mom[c][j] += w * mass[k] * v[k][j];
                }
            }
        }
    }
    let vol = spec.cell_volume();
    dens.iter_mut().for_each(|v| *v /= vol);
    for m in mom.iter_mut() {
        m.iter_mut().for_each(|v| *v /= vol);
    }
    Ok((dens, mom))
}

fn output_spec(rho0: &GridDensity, opts: &PushforwardOptions) -> Result<GridSpec> {
    let spec = opts.grid.clone().unwrap_or_else(|| rho0.spec().clone());
    if spec.dims.len() != rho0.spec().dims.len() {
        return Err(Error::ResolutionMismatch("output grid dimension differs from input".into()));
    }
    if opts.supersample == 0 {
        return Err(Error::InvalidInput("supersample must be positive".into()));
    }
    Ok(spec)
}

/// Pushforward of `rho0` under `(1 - t) x + t map(x)`.
pub fn pushforward_with(
    rho0: &GridDensity,
    map: &(impl Fn(&Point) -> Point + Sync),
    t: f64,
    opts: &PushforwardOptions,
) -> Result<GridDensity> {
    let spec = output_spec(rho0, opts)?;
    let (pts, mass) = particles(rho0, opts.supersample);
    let moved: Vec<Point> = pts.par_iter().map(|x| x * (1.0 - t) + map(x) * t).collect();
    let (dens, _) = deposit(&spec, &moved, &mass, None)?;
    GridDensity::new(spec, dens)
}

/// Pushforward of `rho0` under the interpolated map of `field` at time `t`.
pub fn pushforward_density(field: &BrenierField, rho0: &GridDensity, t: f64, opts: &PushforwardOptions) -> Result<GridDensity> {
    if field.dim() != rho0.spec().dims.len() {
        return Err(Error::ResolutionMismatch("field and density dimensions differ".into()));
    }
    let index = field.index();
    pushforward_with(rho0, &|x| field.map_at(x, &index), t, opts)
}

/// Density and Eulerian velocity at one time.
#[derive(Clone, Debug)]
pub struct PathFrame {
    pub t: f64,
    pub density: GridDensity,
    /// `(flat cell, velocity)` on cells with positive density.
    pub velocity: Vec<(usize, Vec<f64>)>,
}

/// Rasterized displacement interpolant on a time grid.
#[derive(Clone, Debug)]
pub struct DensityPath {
    pub times: Vec<f64>,
    pub frames: Vec<PathFrame>,
    /// Trapezoid quadrature in time of `int rho |v|^2`.
    pub action: f64,
}

/// Largest relative mass change between frames.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PathDiagnostics {
    pub mass_drift: f64,
    /// `max_t max_x rho_t (1 - rho_t)`; zero for characteristic functions.
    pub characteristic_defect: f64,
}

impl DensityPath {
    /// Interpolant of `rho0` under `map` on `times`.
    pub fn build(
        rho0: &GridDensity,
        map: &(impl Fn(&Point) -> Point + Sync),
        times: &[f64],
        opts: &PushforwardOptions,
    ) -> Result<Self> {
        let spec = output_spec(rho0, opts)?;
        let (pts, mass) = particles(rho0, opts.supersample);
        let targets: Vec<Point> = pts.par_iter().map(map).collect();
        let vel: Vec<Point> = pts.iter().zip(&targets).map(|(x, y)| y - x).collect();
        Self::from_lagrangian(&spec, &mass, times, |k, t| (&pts[k] + t * &vel[k], vel[k].clone()))
    }

    /// Path of a particle system: `traj(k, t)` gives position and velocity of
    /// particle `k` with mass `mass[k]` at time `t`.
    pub fn from_lagrangian(
        spec: &GridSpec,
        mass: &[f64],
        times: &[f64],
        traj: impl Fn(usize, f64) -> (Point, Point) + Sync,
    ) -> Result<Self> {
        let mut frames = Vec::with_capacity(times.len());
        let mut dens_action = Vec::with_capacity(times.len());
        for &t in times {
            let (moved, vel): (Vec<Point>, Vec<Point>) = (0..mass.len()).into_par_iter().map(|k| traj(k, t)).unzip();
            let (dens, mom) = deposit(spec, &moved, mass, Some(&vel))?;
            let mut velocity = Vec::new();
            let mut kin = 0.0;
            for (c, (rho, m)) in dens.iter().zip(&mom).enumerate() {
                if *rho > 0.0 {
                    let v: Vec<f64> = m.iter().map(|m| m / rho).collect();
                    kin += m.iter().map(|m| m * m).sum::<f64>() / rho;
                    velocity.push((c, v));
                }
            }
            dens_action.push(kin * spec.cell_volume());
            frames.push(PathFrame { t, density: GridDensity::new(spec.clone(), dens)?, velocity });
        }
        let action = times
            .windows(2)
            .zip(dens_action.windows(2))
            .map(|(t, a)| 0.5 * (t[1] - t[0]) * (a[0] + a[1]))
            .sum();
        Ok(Self { times: times.to_vec(), frames, action })
    }

    /// [`DensityPath::build`] with the map of `field`.
    pub fn from_field(field: &BrenierField, rho0: &GridDensity, times: &[f64], opts: &PushforwardOptions) -> Result<Self> {
        let index = field.index();
        Self::build(rho0, &|x| field.map_at(x, &index), times, opts)
    }

    pub fn diagnostics(&self) -> PathDiagnostics {
        let m0 = self.frames[0].density.mass();
        let mass_drift = self.frames.iter().map(|f| (f.density.mass() - m0).abs() / m0).fold(0.0, f64::max);
        let characteristic_defect = self
            .frames
            .iter()
            .flat_map(|f| f.density.values().iter().map(|v| v * (1.0 - v)))
            .fold(0.0, f64::max);
        PathDiagnostics { mass_drift, characteristic_defect }
    }
}
