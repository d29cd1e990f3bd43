//! Sampled Brenier map with local Jacobians, eigen-data and a
//! third-derivative surrogate.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::potential::{fit_potential, PolynomialPotential};
use super::{solve_exact, TransportPlan};
use crate::error::{Error, Result};
use crate::geometry::{point_set_diameter, DiscreteMeasure, Point, PointIndex};

/// Knobs of [`estimate_brenier_field`].
#[derive(Clone, Debug)]
pub struct FieldOptions {
    pub k_neighbors: usize,
    /// Lower clamp on Jacobian eigenvalues.
    pub min_eigenvalue: f64,
}

impl Default for FieldOptions {
    fn default() -> Self {
        Self { k_neighbors: 40, min_eigenvalue: 1e-6 }
    }
}

/// Optimal map sampled at source points, with local first-order data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BrenierField {
    pub sources: Vec<Point>,
    /// `T(x_i)` read off the transport plan.
    pub targets: Vec<Point>,
    pub weights: Vec<f64>,
    /// Intercept of the local affine fit, a smoothed value of `T(x_i)`.
    pub fitted: Vec<Point>,
    /// Symmetrized, eigenvalue-clamped `DT(x_i)`.
    pub jacobians: Vec<DMatrix<f64>>,
    /// Eigenvalues of `DT(x_i)`, ascending.
    pub eigenvalues: Vec<Vec<f64>>,
    /// Orthonormal eigenvectors as columns, matching `eigenvalues`, with determinant +1.
    pub frames: Vec<DMatrix<f64>>,
    /// `det DT(x_i)` before any renormalization.
    pub det: Vec<f64>,
    /// Finite-difference surrogate for the third derivative of the potential.
    pub d3: Vec<f64>,
    /// Indices of the fitting neighborhood of each sample.
    pub neighbors: Vec<Vec<usize>>,
    /// Global potential model, when the field was fitted as a gradient.
    pub potential: Option<PolynomialPotential>,
}

/// Eigen-decomposition with ascending eigenvalues and a proper rotation frame.
pub fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let d = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut frame = DMatrix::zeros(d, d);
    for (c, &k) in order.iter().enumerate() {
        frame.set_column(c, &eig.eigenvectors.column(k));
    }
    if frame.determinant() < 0.0 {
        let last = -frame.column(d - 1).clone_owned();
        frame.set_column(d - 1, &last);
    }
    (vals, frame)
}

/// Spectral norm of a symmetric matrix.
pub(crate) fn sym_op_norm(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues.amax()
}

impl BrenierField {
    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.sources[0].len()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn lambda_lo(&self, i: usize) -> f64 {
        self.eigenvalues[i][0]
    }

    pub fn lambda_hi(&self, i: usize) -> f64 {
        *self.eigenvalues[i].last().unwrap()
    }

    /// Interpolation map `(1-t) x_i + t T(x_i)`.
    pub fn interpolate(&self, i: usize, t: f64) -> Point {
        &self.sources[i] * (1.0 - t) + &self.targets[i] * t
    }

    /// Quadratic transport cost `sum w |T(x) - x|^2` of the sampled map.
    pub fn transport_cost(&self) -> f64 {
        self.sources
            .iter()
            .zip(&self.targets)
            .zip(&self.weights)
            .map(|((x, y), w)| w * super::sq_dist(x, y))
            .sum()
    }

    pub fn target_diameter(&self) -> f64 {
        point_set_diameter(&self.targets)
    }

    pub fn source_measure(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(self.sources.clone(), self.weights.clone())
    }

    pub fn target_measure(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(self.targets.clone(), self.weights.clone())
    }

    pub fn index(&self) -> PointIndex {
        PointIndex::with_density(self.sources.clone(), 4.0)
    }

    /// Local affine model of `T` anchored at sample `i`.
    pub fn affine_at(&self, i: usize, x: &Point) -> Point {
        &self.fitted[i] + &self.jacobians[i] * (x - &self.sources[i])
    }

    /// Map `T(x)`: the potential gradient if present, otherwise the affine
    /// model of the nearest sample.
    pub fn map_at(&self, x: &Point, index: &PointIndex) -> Point {
        match &self.potential {
            Some(p) => p.gradient(x),
            None => {
                let i = index.nearest(x, 1)[0];
                self.affine_at(i, x)
            }
        }
    }

    /// Symmetric `DT(x)`, same convention as [`BrenierField::map_at`].
    pub fn jacobian_at(&self, x: &Point, index: &PointIndex) -> DMatrix<f64> {
        match &self.potential {
            Some(p) => p.hessian(x),
            None => self.jacobians[index.nearest(x, 1)[0]].clone(),
        }
    }

    /// Neighbor pairs violating `<T_i - T_j, x_i - x_j> >= -tol_rel |x_i - x_j|^2`.
    pub fn monotonicity_violations(&self, tol_rel: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            for &j in &self.neighbors[i] {
                let dx = &self.sources[i] - &self.sources[j];
                let dt = &self.targets[i] - &self.targets[j];
                if dt.dot(&dx) < -tol_rel * dx.norm_squared() {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Mean of `det DT(x_i)`.
    pub fn mean_det(&self) -> f64 {
        self.det.iter().sum::<f64>() / self.det.len() as f64
    }

    /// Translates sources and targets by `b`.
    pub fn translate(&mut self, b: &Point) {
        for p in self.sources.iter_mut().chain(self.targets.iter_mut()).chain(self.fitted.iter_mut()) {
            *p += b;
        }
        if let Some(pot) = &mut self.potential {
            // Shifting x and T by b: psi'(x) = psi(x - b) + b.x.
            for (c, bk) in pot.center.iter_mut().zip(b.iter()) {
                *c += bk;
            }
            pot.add_linear(b);
        }
    }
}

/// Solves the exact transport problem and fits the local first-order data.
pub fn estimate_brenier_field(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    opts: &FieldOptions,
) -> Result<BrenierField> {
    let plan = solve_exact(mu, nu)?;
    field_from_plan(&plan, opts)
}

/// Fits the field on an existing plan. Non-permutation plans use the
/// barycentric projection as the map.
pub fn field_from_plan(plan: &TransportPlan, opts: &FieldOptions) -> Result<BrenierField> {
    let sources: Vec<Point> = plan.source.points().to_vec();
    let targets = match plan.permutation() {
        Some(p) => p.iter().map(|&j| plan.target.points()[j].clone()).collect(),
        None => plan.barycentric_map(),
    };
    fit_field(sources, targets, plan.source.weights().to_vec(), opts)
}

/// Fits Jacobians and the third-derivative surrogate to matched pairs.
pub fn fit_field(
    sources: Vec<Point>,
    targets: Vec<Point>,
    weights: Vec<f64>,
    opts: &FieldOptions,
) -> Result<BrenierField> {
    let n = sources.len();
    if n == 0 {
        return Err(Error::EmptySupport);
    }
    let d = sources[0].len();
    let kmin = d * (d + 3) / 2;
    if opts.k_neighbors < kmin {
        return Err(Error::InvalidInput(format!("k_neighbors must be at least {kmin}")));
    }
    let k = opts.k_neighbors.min(n);
    let index = PointIndex::with_density(sources.clone(), 4.0);

    let fits: Vec<Result<(Vec<usize>, Point, DMatrix<f64>)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let nb = index.nearest(&sources[i], k);
            let (c, m) = local_affine_fit(i, &nb, &sources, &targets)?;
            Ok((nb, c, m))
        })
        .collect();

    let mut neighbors = Vec::with_capacity(n);
    let mut fitted = Vec::with_capacity(n);
    let mut jacobians = Vec::with_capacity(n);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut frames = Vec::with_capacity(n);
    let mut det = Vec::with_capacity(n);
    for r in fits {
        let (nb, c, m) = r?;
        let (mut vals, frame) = sorted_eigen(&m);
        for v in vals.iter_mut() {
            *v = v.max(opts.min_eigenvalue);
        }
        let jac = &frame * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals.clone())) * frame.transpose();
        let jac = (&jac + jac.transpose()) * 0.5;
        det.push(vals.iter().product());
        neighbors.push(nb);
        fitted.push(c);
        jacobians.push(jac);
        eigenvalues.push(vals);
        frames.push(frame);
    }

    let d3: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let nb = &neighbors[i];
            let radius = nb.iter().map(|&j| (&sources[j] - &sources[i]).norm()).fold(0.0, f64::max);
            let min_sep = 0.5 * radius;
            let mut best = 0.0f64;
            for &j in nb {
                let sep = (&sources[j] - &sources[i]).norm();
                if sep >= min_sep && sep > 0.0 {
                    best = best.max(sym_op_norm(&(&jacobians[j] - &jacobians[i])) / sep);
                }
            }
            best
        })
        .collect();

    Ok(BrenierField {
        sources,
        targets,
        weights,
        fitted,
        jacobians,
        eigenvalues,
        frames,
        det,
        d3,
        neighbors,
        potential: None,
    })
}

/// Field whose first-order data come from a global polynomial potential
/// fitted to the matched pairs; see [`fit_potential`].
pub fn fit_field_potential(
    sources: Vec<Point>,
    targets: Vec<Point>,
    weights: Vec<f64>,
    degree: u32,
    opts: &FieldOptions,
) -> Result<BrenierField> {
    let pot = fit_potential(&sources, &targets, &weights, degree)?;
    let n = sources.len();
    let k = opts.k_neighbors.min(n);
    let index = PointIndex::with_density(sources.clone(), 4.0);
    let data: Vec<_> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = &sources[i];
            let jac = pot.hessian(x);
            let (mut vals, frame) = sorted_eigen(&jac);
            let det = vals.iter().product::<f64>();
            for v in vals.iter_mut() {
                *v = v.max(opts.min_eigenvalue);
            }
            let jac = &frame * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals.clone())) * frame.transpose();
            let jac = (&jac + jac.transpose()) * 0.5;
            (index.nearest(x, k), pot.gradient(x), jac, vals, frame, det, pot.third_derivative_norm(x))
        })
        .collect();
    let mut f = BrenierField {
        sources,
        targets,
        weights,
        fitted: Vec::with_capacity(n),
        jacobians: Vec::with_capacity(n),
        eigenvalues: Vec::with_capacity(n),
        frames: Vec::with_capacity(n),
        det: Vec::with_capacity(n),
        d3: Vec::with_capacity(n),
        neighbors: Vec::with_capacity(n),
        potential: Some(pot),
    };
    for (nb, c, jac, vals, frame, det, d3) in data {
        f.neighbors.push(nb);
        f.fitted.push(c);
        f.jacobians.push(jac);
        f.eigenvalues.push(vals);
        f.frames.push(frame);
        f.det.push(det);
        f.d3.push(d3);
    }
    Ok(f)
}

/// Solves the exact transport problem and fits a polynomial potential.
pub fn estimate_potential_field(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    degree: u32,
    opts: &FieldOptions,
) -> Result<BrenierField> {
    let plan = solve_exact(mu, nu)?;
    let targets = match plan.permutation() {
        Some(p) => p.iter().map(|&j| plan.target.points()[j].clone()).collect(),
        None => plan.barycentric_map(),
    };
    fit_field_potential(plan.source.points().to_vec(), targets, plan.source.weights().to_vec(), degree, opts)
}

/// Weighted least-squares fit of `T(x) ~ c + M (x - x_i)` over a neighborhood.
fn local_affine_fit(
    i: usize,
    nb: &[usize],
    sources: &[Point],
    targets: &[Point],
) -> Result<(Point, DMatrix<f64>)> {
    let d = sources[i].len();
    let xi = &sources[i];
    let radius = nb.iter().map(|&j| (&sources[j] - xi).norm()).fold(0.0, f64::max);
    if !(radius > 0.0) {
        return Err(Error::DegenerateNeighborhood { index: i });
    }
    let scale = 1.0 / radius;
    let h = 1.0001 * radius;
    let mut a = DMatrix::<f64>::zeros(d + 1, d + 1);
    let mut b = DMatrix::<f64>::zeros(d + 1, d);
    let mut phi = nalgebra::DVector::<f64>::zeros(d + 1);
    for &j in nb {
        let dx = &sources[j] - xi;
        let s = dx.norm() / h;
        let w = (1.0 - s * s * s).powi(3).max(0.0);
        phi[0] = 1.0;
        for k in 0..d {
            phi[k + 1] = dx[k] * scale;
        }
        a += &phi * phi.transpose() * w;
        for k in 0..d {
            for r in 0..=d {
                b[(r, k)] += w * phi[r] * targets[j][k];
            }
        }
    }
    let eig = SymmetricEigen::new(a.clone());
    let (emin, emax) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    if !(emin > 1e-10 * emax) {
        return Err(Error::DegenerateNeighborhood { index: i });
    }
    let chol = a.cholesky().ok_or(Error::DegenerateNeighborhood { index: i })?;
    let x = chol.solve(&b);
    let c = Point::from_iterator(d, (0..d).map(|k| x[(0, k)]));
    let mut m = DMatrix::zeros(d, d);
    for k in 0..d {
        for l in 0..d {
            m[(k, l)] = x[(l + 1, k)] * scale;
        }
    }
    Ok((c, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;

    fn lattice(n: usize) -> Vec<Point> {
        let mut v = Vec::new();
        for i in 0..n {
            for j in 0..n {
                v.push(point(&[i as f64 / n as f64, j as f64 / n as f64]));
            }
        }
        v
    }

    #[test]
    fn exact_linear_map_recovered() {
        let src = lattice(15);
        let tgt: Vec<Point> = src.iter().map(|x| point(&[2.0 * x[0], 0.5 * x[1]])).collect();
        let w = vec![1.0; src.len()];
        let f = fit_field(src, tgt, w, &FieldOptions::default()).unwrap();
        for i in 0..f.len() {
            assert!((f.eigenvalues[i][0] - 0.5).abs() < 1e-9);
            assert!((f.eigenvalues[i][1] - 2.0).abs() < 1e-9);
            assert!(f.d3[i] < 1e-8);
        }
    }

    #[test]
    fn degenerate_neighborhood() {
        let src: Vec<Point> = (0..30).map(|i| point(&[i as f64, 0.0])).collect();
        let w = vec![1.0; 30];
        let err = fit_field(src.clone(), src, w, &FieldOptions { k_neighbors: 10, ..Default::default() });
        assert!(matches!(err, Err(Error::DegenerateNeighborhood { .. })));
    }
}
