//! Weighted point clouds and sampling of raster densities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_dimension, GridDensity, Point};
use crate::error::{Error, Result};

/// Finite weighted point cloud.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::ZeroMass);
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidInput("points and weights differ in length".into()));
        }
        let d = points[0].len();
        check_dimension(d)?;
        if points.iter().any(|p| p.len() != d || p.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidInput("points must be finite and share a dimension".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput("weights must be positive".into()));
        }
        Ok(Self { points, weights })
    }

    /// Equal weights summing to `mass`.
    pub fn uniform(points: Vec<Point>, mass: f64) -> Result<Self> {
        let n = points.len();
        if n == 0 || !(mass > 0.0) {
            return Err(Error::ZeroMass);
        }
        Self::new(points, vec![mass / n as f64; n])
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// True when all weights agree to 1e-12 relative.
    pub fn has_equal_weights(&self) -> bool {
        let w0 = self.weights[0];
        self.weights.iter().all(|w| (w - w0).abs() <= 1e-12 * w0)
    }

    /// The same points with weights scaled to total `mass`.
    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        let k = mass / self.mass();
        Self::new(self.points.clone(), self.weights.iter().map(|w| w * k).collect())
    }

    pub fn translated(&self, b: &Point) -> Self {
        Self { points: self.points.iter().map(|p| p + b).collect(), weights: self.weights.clone() }
    }

    /// Image under a point map, keeping the weights.
    pub fn mapped(&self, f: impl Fn(&Point) -> Point) -> Result<Self> {
        Self::new(self.points.iter().map(f).collect(), self.weights.clone())
    }

    /// Second moment `sum w |x|^2 / mass`.
    pub fn mean_square_norm(&self) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * p.norm_squared()).sum::<f64>() / self.mass()
    }

    /// One atom per support cell, at the cell center with the cell's mass.
    pub fn from_cells(shape: &GridDensity) -> Result<Self> {
        let spec = shape.spec();
        let vol = spec.cell_volume();
        let cells = shape.support_cells();
        if cells.is_empty() {
            return Err(Error::ZeroMass);
        }
        Self::new(
            cells.iter().map(|&c| spec.cell_center(c)).collect(),
            cells.iter().map(|&c| shape.value(c) * vol).collect(),
        )
    }
}

/// Draws `n` equal-weight points from a raster density.
///
/// Sampling is stratified: cells are ordered along a Hilbert curve, the mass
/// is split into `n` equal strata along that order, and one point is drawn
/// uniformly inside each stratum.
/// Output is deterministic for a given seed.
pub fn sample_uniform(shape: &GridDensity, n: usize, seed: u64) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    let mass = shape.mass();
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let spec = shape.spec();
    let mut cells = shape.support_cells();
    // Order cells along a Hilbert curve so that strata are spatially compact.
    let bits = spec.dims.iter().map(|&n| usize::BITS - (n.max(2) - 1).leading_zeros()).max().unwrap_or(1);
    let mut keyed: Vec<(u128, usize)> =
        cells.iter().map(|&c| (hilbert_index(&spec.unflatten(c), bits), c)).collect();
    keyed.sort_unstable();
    cells = keyed.into_iter().map(|e| e.1).collect();
    let mut cum = Vec::with_capacity(cells.len());
    let mut acc = 0.0;
    for &c in &cells {
        acc += shape.value(c);
        cum.push(acc);
    }
    let total = acc;
    let d = spec.dimension();
    let h = spec.cell_size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for k in 0..n {
        let u = (k as f64 + rng.random::<f64>()) / n as f64 * total;
        let pos = cum.partition_point(|&v| v <= u).min(cells.len() - 1);
        let corner = spec.cell_center(cells[pos]).add_scalar(-0.5 * h);
        let jitter = Point::from_fn(d, |_, _| rng.random::<f64>() * h);
        points.push(corner + jitter);
    }
    DiscreteMeasure::uniform(points, mass)
}

/// Position of a lattice point along the d-dimensional Hilbert curve of
/// order `bits` (Skilling's transpose algorithm).
pub(crate) fn hilbert_index(idx: &[usize], bits: u32) -> u128 {
    let n = idx.len();
    let mut x: Vec<u64> = idx.iter().map(|&v| v as u64).collect();
    let m = 1u64 << (bits - 1);
    // Inverse undo of excess work.
    let mut q = m;
    while q > 1 {
        let p = q - 1;
        for i in 0..n {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q >>= 1;
    }
    // Gray encode.
    for i in 1..n {
        x[i] ^= x[i - 1];
    }
    let mut t = 0;
    let mut q = m;
    while q > 1 {
        if x[n - 1] & q != 0 {
            t ^= q - 1;
        }
        q >>= 1;
    }
    for v in x.iter_mut() {
        *v ^= t;
    }
    // Interleave the transposed bits, most significant first.
    let mut h: u128 = 0;
    for b in (0..bits).rev() {
        for v in &x {
            h = (h << 1) | ((v >> b) & 1) as u128;
        }
    }
    h
}

impl DiscreteMeasure {
    /// See [`sample_uniform`].
    pub fn sample(shape: &GridDensity, n: usize, seed: u64) -> Result<Self> {
        sample_uniform(shape, n, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridSpec;

    fn disk() -> GridDensity {
        let spec = GridSpec::cube(2, -1.25, 1.25, 250).unwrap();
        GridDensity::indicator(spec, |x| x.norm() <= 1.0).unwrap()
    }

    #[test]
    fn points_inside_and_deterministic() {
        let g = disk();
        let a = sample_uniform(&g, 4, 1).unwrap();
        let b = sample_uniform(&g, 4, 1).unwrap();
        assert_eq!(a, b);
        for p in a.points() {
            assert!(g.value_at(p) > 0.0);
        }
        assert!(a.has_equal_weights());
    }

    #[test]
    fn disk_second_moment() {
        let g = disk();
        let m = sample_uniform(&g, 100_000, 7).unwrap();
        assert!((m.mean_square_norm() - 0.5).abs() < 0.01);
    }

    #[test]
    fn hilbert_order_is_a_bijection_with_unit_steps() {
        let bits = 3;
        let mut pts: Vec<(u128, Vec<usize>)> = Vec::new();
        for i in 0..8 {
            for j in 0..8 {
                pts.push((hilbert_index(&[i, j], bits), vec![i, j]));
            }
        }
        pts.sort();
        for (k, w) in pts.windows(2).enumerate() {
            assert_eq!(w[0].0, k as u128);
            let step: usize = w[0].1.iter().zip(&w[1].1).map(|(a, b)| a.abs_diff(*b)).sum();
            assert_eq!(step, 1);
        }
    }

    #[test]
    fn zero_mass_rejected() {
        let g = GridDensity::zeros(GridSpec::cube(2, 0.0, 1.0, 4).unwrap());
        assert!(matches!(sample_uniform(&g, 3, 0), Err(Error::ZeroMass)));
    }
}
