//! Raster densities on uniform Cartesian grids.

use serde::{Deserialize, Serialize};

use super::{check_dimension, point_set_diameter, Point};
use crate::error::{Error, Result};

/// Values below this are treated as exact zeros when computing supports.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Geometry of a uniform grid: corner `origin`, square cells of side
/// `cell_size`, and `dims` cells per axis. Cells are stored row-major with the
/// last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec<f64>,
    pub cell_size: f64,
    pub dims: Vec<usize>,
}

impl GridSpec {
    pub fn new(origin: Vec<f64>, cell_size: f64, dims: Vec<usize>) -> Result<Self> {
        check_dimension(origin.len())?;
        if dims.len() != origin.len() {
            return Err(Error::InvalidInput("origin and dims differ in length".into()));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidInput(format!("cell size {cell_size} must be positive")));
        }
        if dims.iter().any(|&n| n == 0) || origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidInput("grid dims must be positive and origin finite".into()));
        }
        Ok(Self { origin, cell_size, dims })
    }

    /// Square grid of `n` cells per axis covering `[lo, hi]^d`.
    pub fn cube(d: usize, lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![lo; d], (hi - lo) / n as f64, vec![n; d])
    }

    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    pub fn n_cells(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size.powi(self.dimension() as i32)
    }

    /// Multi-index of a flat cell index.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for ax in (0..self.dims.len()).rev() {
            idx[ax] = flat % self.dims[ax];
            flat /= self.dims[ax];
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.dims).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn cell_center(&self, flat: usize) -> Point {
        let idx = self.unflatten(flat);
        Point::from_iterator(
            idx.len(),
            idx.iter()
                .zip(&self.origin)
                .map(|(&i, &o)| o + (i as f64 + 0.5) * self.cell_size),
        )
    }

    /// Cell containing `x`, if inside the grid box.
    pub fn cell_of(&self, x: &Point) -> Option<usize> {
        let mut idx = Vec::with_capacity(self.dims.len());
        for ax in 0..self.dims.len() {
            let s = (x[ax] - self.origin[ax]) / self.cell_size;
            if !(s >= 0.0) || s >= self.dims[ax] as f64 {
                return None;
            }
            idx.push(s as usize);
        }
        Some(self.flatten(&idx))
    }

    /// Flat indices of axis neighbors inside the grid.
    pub fn neighbors(&self, flat: usize) -> Vec<usize> {
        let idx = self.unflatten(flat);
        let mut out = Vec::with_capacity(2 * idx.len());
        for ax in 0..idx.len() {
            if idx[ax] > 0 {
                let mut j = idx.clone();
                j[ax] -= 1;
                out.push(self.flatten(&j));
            }
            if idx[ax] + 1 < self.dims[ax] {
                let mut j = idx.clone();
                j[ax] += 1;
                out.push(self.flatten(&j));
            }
        }
        out
    }

    /// True if the cell touches the outer face of the grid box.
    pub fn on_box_boundary(&self, flat: usize) -> bool {
        self.unflatten(flat).iter().zip(&self.dims).any(|(&i, &n)| i == 0 || i + 1 == n)
    }

    /// Lower and upper corners of the grid box.
    pub fn bounds(&self) -> (Point, Point) {
        let lo = Point::from_column_slice(&self.origin);
        let hi = Point::from_iterator(
            self.dims.len(),
            self.origin.iter().zip(&self.dims).map(|(o, &n)| o + n as f64 * self.cell_size),
        );
        (lo, hi)
    }
}

/// Nonnegative density sampled as one value per grid cell.
///
/// Shape densities take values in `[0, 1]`; see [`GridDensity::max_value`].
/// Rasterized pushforwards may overshoot 1 slightly through deposition noise,
/// so the constructor only enforces finiteness and nonnegativity.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridDensity {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.n_cells() {
            return Err(Error::InvalidInput(format!(
                "expected {} values, got {}",
                spec.n_cells(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("density values must be finite and nonnegative".into()));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        let n = spec.n_cells();
        Self { spec, values: vec![0.0; n] }
    }

    /// Density equal to `f` at each cell center.
    pub fn from_fn(spec: GridSpec, f: impl Fn(&Point) -> f64 + Sync) -> Result<Self> {
        use rayon::prelude::*;
        let values = (0..spec.n_cells()).into_par_iter().map(|c| f(&spec.cell_center(c))).collect();
        Self::new(spec, values)
    }

    /// Characteristic function of `{inside}`, sampled at cell centers.
    pub fn indicator(spec: GridSpec, inside: impl Fn(&Point) -> bool + Sync) -> Result<Self> {
        Self::from_fn(spec, |x| if inside(x) { 1.0 } else { 0.0 })
    }

    /// Fraction of each cell inside `{inside}`, estimated on an `s^d` sub-lattice.
    pub fn coverage(spec: GridSpec, s: usize, inside: impl Fn(&Point) -> bool + Sync) -> Result<Self> {
        let d = spec.dimension();
        let h = spec.cell_size;
        let total = s.pow(d as u32);
        Self::from_fn(spec, |c| {
            let mut hits = 0usize;
            let mut x = c.clone();
            for k in 0..total {
                let mut rem = k;
                for ax in 0..d {
                    let i = rem % s;
                    rem /= s;
                    x[ax] = c[ax] - 0.5 * h + (i as f64 + 0.5) * h / s as f64;
                }
                if inside(&x) {
                    hits += 1;
                }
            }
            hits as f64 / total as f64
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    pub fn cell_size(&self) -> f64 {
        self.spec.cell_size
    }

    pub fn cell_volume(&self) -> f64 {
        self.spec.cell_volume()
    }

    pub fn value(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    /// Piecewise-constant value at `x`, zero outside the grid.
    pub fn value_at(&self, x: &Point) -> f64 {
        self.spec.cell_of(x).map_or(0.0, |c| self.values[c])
    }

    pub fn mass(&self) -> f64 {
        self.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Checks the shape-density bound `0 <= rho <= 1 + tol`.
    pub fn check_unit_bounded(&self, tol: f64) -> Result<()> {
        let m = self.max_value();
        if m > 1.0 + tol {
            return Err(Error::InvalidInput(format!("density exceeds 1 (max {m})")));
        }
        Ok(())
    }

    pub fn in_support(&self, flat: usize) -> bool {
        self.values[flat] >= SUPPORT_TOL
    }

    pub fn support_cells(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&c| self.in_support(c)).collect()
    }

    /// Support cells with a non-support axis neighbor or on the grid boundary.
    pub fn boundary_cells(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&c| {
                self.in_support(c)
                    && (self.spec.on_box_boundary(c)
                        || self.spec.neighbors(c).iter().any(|&n| !self.in_support(n)))
            })
            .collect()
    }

    /// True when no support cell touches the outer layer of the grid.
    pub fn support_is_interior(&self) -> bool {
        self.support_cells().iter().all(|&c| !self.spec.on_box_boundary(c))
    }

    /// Diameter of the support over cell centers, inflated by the cell diagonal.
    pub fn diam(&self) -> Result<f64> {
        let pts: Vec<Point> = self.boundary_cells().iter().map(|&c| self.spec.cell_center(c)).collect();
        if pts.is_empty() {
            return Err(Error::EmptySupport);
        }
        Ok(point_set_diameter(&pts) + self.cell_diagonal())
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.spec.cell_size * (self.dimension() as f64).sqrt()
    }

    /// Same values on a grid translated by `b`.
    pub fn translated(&self, b: &Point) -> Self {
        let mut spec = self.spec.clone();
        for (o, bi) in spec.origin.iter_mut().zip(b.iter()) {
            *o += bi;
        }
        Self { spec, values: self.values.clone() }
    }

    pub fn same_grid(&self, other: &GridDensity) -> bool {
        self.spec == other.spec
    }

    /// L1 distance `h^d * sum |a - b|` on a shared grid.
    pub fn l1_distance(&self, other: &GridDensity) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::ResolutionMismatch("densities live on different grids".into()));
        }
        Ok(self.cell_volume()
            * self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }

    /// Integral of `f` against the density by cell-center quadrature.
    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        let mut s = 0.0;
        for c in 0..self.values.len() {
            if self.values[c] != 0.0 {
                s += self.values[c] * f(&self.spec.cell_center(c));
            }
        }
        s * self.cell_volume()
    }
}

/// Distance between the supports of two densities, computed over cell centers
/// and reduced by the cell diagonal so that it is a lower bound.
pub fn dist_sets(a: &GridDensity, b: &GridDensity) -> Result<f64> {
    use rayon::prelude::*;
    let pa: Vec<Point> = a.boundary_cells().iter().map(|&c| a.spec.cell_center(c)).collect();
    let pb: Vec<Point> = b.boundary_cells().iter().map(|&c| b.spec.cell_center(c)).collect();
    if pa.is_empty() || pb.is_empty() {
        return Err(Error::EmptySupport);
    }
    let min_sq = pa
        .par_iter()
        .map(|x| pb.iter().map(|y| (x - y).norm_squared()).fold(f64::INFINITY, f64::min))
        .reduce(|| f64::INFINITY, f64::min);
    let slack = 0.5 * (a.cell_diagonal() + b.cell_diagonal());
    Ok((min_sq.sqrt() - slack).max(0.0))
}

impl GridDensity {
    /// Set distance to another density's support; see [`dist_sets`].
    pub fn dist_to(&self, other: &GridDensity) -> Result<f64> {
        dist_sets(self, other)
    }
}
