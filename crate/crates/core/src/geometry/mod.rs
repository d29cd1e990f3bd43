//! Points, balls, ellipsoids, raster densities and weighted point clouds.
//!
//! Dimensions 1, 2 and 3 are supported everywhere. Shapes are raster
//! densities ([`GridDensity`]) and measures are weighted point clouds
//! ([`DiscreteMeasure`]).

mod grid;
mod measure;
mod quantize;
mod quadrature;
pub mod spatial;

pub use grid::{dist_sets, GridDensity, GridSpec, SUPPORT_TOL};
pub use measure::{sample_uniform, DiscreteMeasure};
pub use quadrature::BallQuadrature;
pub use quantize::{rectangle_quantize, QuantizeReport};
pub use spatial::PointIndex;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A point of R^d.
pub type Point = DVector<f64>;

/// Builds a point from a slice.
pub fn point(coords: &[f64]) -> Point {
    DVector::from_column_slice(coords)
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        // Recurrence w_d = 2 pi / d * w_{d-2}.
        _ => 2.0 * std::f64::consts::PI / d as f64 * unit_ball_volume(d - 2),
    }
}

pub(crate) fn check_dimension(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("dimension {d} not in 1..=3")))
    }
}

/// Closed Euclidean ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("ball radius {radius} must be positive")));
        }
        check_dimension(center.len())?;
        Ok(Self { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32)
    }

    pub fn diam(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn contains(&self, x: &Point) -> bool {
        (x - &self.center).norm() <= self.radius
    }
}

/// Ellipsoid `center + rotation * diag(semi_axes) * B(0,1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid {
    pub center: Point,
    pub semi_axes: DVector<f64>,
    pub rotation: DMatrix<f64>,
}

/// Maximum deviation of `r^T r` from the identity.
pub fn orthogonality_defect(r: &DMatrix<f64>) -> f64 {
    let n = r.nrows();
    (r.transpose() * r - DMatrix::<f64>::identity(n, n)).amax()
}

impl Ellipsoid {
    pub fn new(center: Point, semi_axes: DVector<f64>, rotation: DMatrix<f64>) -> Result<Self> {
        let d = center.len();
        check_dimension(d)?;
        if semi_axes.len() != d || rotation.nrows() != d || rotation.ncols() != d {
            return Err(Error::InvalidInput("ellipsoid dimension mismatch".into()));
        }
        if semi_axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidInput("semi-axes must be positive".into()));
        }
        let defect = orthogonality_defect(&rotation);
        if defect > 1e-12 {
            return Err(Error::InvalidInput(format!("rotation not orthogonal (defect {defect:e})")));
        }
        Ok(Self { center, semi_axes, rotation })
    }

    /// Axis-aligned ellipsoid.
    pub fn axis_aligned(center: Point, semi_axes: DVector<f64>) -> Result<Self> {
        let d = center.len();
        Self::new(center, semi_axes, DMatrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.semi_axes.iter().product::<f64>()
    }

    pub fn diam(&self) -> f64 {
        2.0 * self.semi_axes.max()
    }

    /// Linear part `R diag(a)` mapping the unit ball onto the centered ellipsoid.
    pub fn shape_matrix(&self) -> DMatrix<f64> {
        &self.rotation * DMatrix::from_diagonal(&self.semi_axes)
    }

    pub fn contains(&self, x: &Point) -> bool {
        let y = self.rotation.transpose() * (x - &self.center);
        y.iter().zip(self.semi_axes.iter()).map(|(yi, ai)| (yi / ai).powi(2)).sum::<f64>() <= 1.0
    }

    /// Support function `sup_{x in E} n.x`.
    pub fn support(&self, n: &Point) -> f64 {
        self.center.dot(n) + (self.shape_matrix().transpose() * n).norm()
    }
}

/// Lower bound on the distance between two ellipsoids, exact when they are disjoint.
///
/// Maximizes the separating-slab width `n.(c2-c1) - |M1^T n| - |M2^T n|` over
/// unit directions. A negative value means the ellipsoids overlap or touch.
pub fn ellipsoid_gap(a: &Ellipsoid, b: &Ellipsoid) -> f64 {
    let m1 = a.shape_matrix().transpose();
    let m2 = b.shape_matrix().transpose();
    let dc = &b.center - &a.center;
    slab_gap(&dc, &m1, &m2)
}

/// Maximizes `n.dc - |m1 n| - |m2 n|` over unit `n`.
pub(crate) fn slab_gap(dc: &Point, m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> f64 {
    let d = dc.len();
    // Copy into fixed arrays so the inner loop does not allocate.
    let mut c = [0.0; 3];
    let mut a = [[0.0; 3]; 3];
    let mut b = [[0.0; 3]; 3];
    for i in 0..d {
        c[i] = dc[i];
        for j in 0..d {
            a[i][j] = m1[(i, j)];
            b[i][j] = m2[(i, j)];
        }
    }
    let norm_mul = |m: &[[f64; 3]; 3], n: &[f64; 3]| {
        let mut s = 0.0;
        for i in 0..d {
            let v = m[i][0] * n[0] + m[i][1] * n[1] + m[i][2] * n[2];
            s += v * v;
        }
        s.sqrt()
    };
    let eval = |n: &[f64; 3]| c[0] * n[0] + c[1] * n[1] + c[2] * n[2] - norm_mul(&a, n) - norm_mul(&b, n);
    match d {
        1 => eval(&[1.0, 0.0, 0.0]).max(eval(&[-1.0, 0.0, 0.0])),
        2 => {
            let f = |th: f64| eval(&[th.cos(), th.sin(), 0.0]);
            let base = c[1].atan2(c[0]);
            let samples = 256;
            let step = std::f64::consts::TAU / samples as f64;
            let (mut best_th, mut best) = (base, f(base));
            for k in 1..samples {
                let th = base + k as f64 * step;
                let v = f(th);
                if v > best {
                    best = v;
                    best_th = th;
                }
            }
            golden_max(f, best_th - step, best_th + step, 60).max(best)
        }
        _ => {
            let f = |th: f64, ph: f64| eval(&[ph.sin() * th.cos(), ph.sin() * th.sin(), ph.cos()]);
            let norm = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            let (mut th, mut ph) = if norm > 0.0 {
                (c[1].atan2(c[0]), (c[2] / norm).clamp(-1.0, 1.0).acos())
            } else {
                (0.0, 0.5)
            };
            let mut best = f(th, ph);
            // Fibonacci sphere scan followed by compass search.
            let count = 600;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            for k in 0..count {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                let t = golden * k as f64;
                let (cth, cph) = (t, z.acos());
                let v = f(cth, cph);
                if v > best {
                    best = v;
                    th = cth;
                    ph = cph;
                }
            }
            let mut step = 0.2;
            while step > 1e-12 {
                let mut improved = false;
                for (dth, dph) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                    let v = f(th + dth, ph + dph);
                    if v > best {
                        best = v;
                        th += dth;
                        ph += dph;
                        improved = true;
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            best
        }
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}

/// Euclidean diameter of a finite point set, exact.
pub fn point_set_diameter(points: &[Point]) -> f64 {
    use rayon::prelude::*;
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0f64;
            for j in i + 1..points.len() {
                best = best.max((&points[i] - &points[j]).norm_squared());
            }
            best
        })
        .reduce(|| 0.0, f64::max)
        .sqrt()
}

/// A pair of points realizing the diameter of a finite set.
pub fn diametral_pair(points: &[Point]) -> Option<(usize, usize)> {
    use rayon::prelude::*;
    if points.is_empty() {
        return None;
    }
    let best = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut best = (0.0f64, i, i);
            for j in i + 1..points.len() {
                let v = (&points[i] - &points[j]).norm_squared();
                if v > best.0 {
                    best = (v, i, j);
                }
            }
            best
        })
        .reduce(
            || (0.0, 0, 0),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a },
        );
    Some((best.1, best.2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn volumes() {
        let b = Ball::new(point(&[0.0, 0.0]), 1.0).unwrap();
        assert_relative_eq!(b.volume(), std::f64::consts::PI);
        assert_eq!(b.diam(), 2.0);
        let e = Ellipsoid::axis_aligned(point(&[0.0, 0.0]), point(&[2.0, 0.5])).unwrap();
        assert_relative_eq!(e.volume(), std::f64::consts::PI);
        assert_eq!(e.diam(), 4.0);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * std::f64::consts::PI / 3.0);
    }

    #[test]
    fn rejects_bad_rotation() {
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(Ellipsoid::new(point(&[0.0, 0.0]), point(&[1.0, 1.0]), r).is_err());
    }

    #[test]
    fn gap_of_separated_balls() {
        let a = Ellipsoid::axis_aligned(point(&[0.0, 0.0]), point(&[1.0, 1.0])).unwrap();
        let b = Ellipsoid::axis_aligned(point(&[3.0, 1.0]), point(&[0.5, 0.5])).unwrap();
        let exact = 10f64.sqrt() - 1.5;
        assert!((ellipsoid_gap(&a, &b) - exact).abs() < 1e-9);
        let c = Ellipsoid::axis_aligned(point(&[1.0, 0.0]), point(&[1.0, 1.0])).unwrap();
        assert!(ellipsoid_gap(&a, &c) < 0.0);
    }

    #[test]
    fn gap_in_3d() {
        let a = Ellipsoid::axis_aligned(point(&[0.0, 0.0, 0.0]), point(&[2.0, 0.5, 0.5])).unwrap();
        let b = Ellipsoid::axis_aligned(point(&[0.0, 0.0, 3.0]), point(&[1.0, 1.0, 1.0])).unwrap();
        assert!((ellipsoid_gap(&a, &b) - 1.5).abs() < 1e-8);
    }
}
