//! Exact monotone rearrangement between one-dimensional raster densities.

use crate::error::{Error, Result};
use crate::geometry::GridDensity;

/// Cumulative distribution of a 1D raster, linear within cells.
struct Cdf {
    edges: Vec<f64>,
    cum: Vec<f64>,
}

impl Cdf {
    fn new(rho: &GridDensity) -> Result<Self> {
        let spec = rho.spec();
        if spec.dims.len() != 1 {
            return Err(Error::InvalidInput("monotone rearrangement needs d = 1".into()));
        }
        let h = spec.cell_size;
        let edges: Vec<f64> = (0..=spec.dims[0]).map(|k| spec.origin[0] + k as f64 * h).collect();
        let mut cum = vec![0.0];
        for v in rho.values() {
            cum.push(cum.last().unwrap() + v * h);
        }
        Ok(Self { edges, cum })
    }

    fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn eval(&self, x: f64) -> f64 {
        let k = self.edges.partition_point(|e| *e <= x);
        if k == 0 {
            return 0.0;
        }
        if k >= self.edges.len() {
            return self.total();
        }
        let (x0, x1) = (self.edges[k - 1], self.edges[k]);
        let f = (x - x0) / (x1 - x0);
        self.cum[k - 1] + f * (self.cum[k] - self.cum[k - 1])
    }

    /// Smallest `x` with `F(x) = m`.
    fn inverse(&self, m: f64) -> f64 {
        let k = self.cum.partition_point(|c| *c < m).clamp(1, self.cum.len() - 1);
        let (c0, c1) = (self.cum[k - 1], self.cum[k]);
        let f = if c1 > c0 { ((m - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.0 };
        self.edges[k - 1] + f * (self.edges[k] - self.edges[k - 1])
    }
}

/// The optimal map `F1^-1 o F0` between 1D densities of equal mass.
pub fn monotone_map_1d(rho0: &GridDensity, rho1: &GridDensity) -> Result<impl Fn(f64) -> f64 + Sync> {
    let f0 = Cdf::new(rho0)?;
    let f1 = Cdf::new(rho1)?;
    let (m0, m1) = (f0.total(), f1.total());
    if m0 <= 0.0 {
        return Err(Error::ZeroMass);
    }
    if (m0 - m1).abs() > 1e-9 * m0 {
        return Err(Error::MassMismatch { left: m0, right: m1 });
    }
    Ok(move |x: f64| f1.inverse(f0.eval(x)))
}
