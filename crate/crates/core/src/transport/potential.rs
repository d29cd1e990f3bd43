//! Global polynomial model `T = grad psi` fitted to matched samples.
//!
//! Fitting a potential rather than each map component enforces the gradient
//! structure of optimal maps and averages matching noise over the whole
//! sample. With degree at most 4 the fourth derivative is constant, which
//! gives rigorous bounds on the Hessian spectrum and on the third derivative
//! over any ball.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Polynomial potential in the normalized variable `y = (x - center) / scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialPotential {
    pub center: Vec<f64>,
    pub scale: f64,
    pub degree: u32,
    /// Exponent vectors of the monomials, total degree in `1..=degree`.
    pub exponents: Vec<Vec<u32>>,
    pub coefficients: Vec<f64>,
}

fn monomials(d: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 1..=degree {
        let mut cur = vec![0u32; d];
        fn rec(ax: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if ax + 1 == cur.len() {
                cur[ax] = left;
                out.push(cur.clone());
                return;
            }
            for e in (0..=left).rev() {
                cur[ax] = e;
                rec(ax + 1, left - e, cur, out);
            }
        }
        rec(0, total, &mut cur, &mut out);
    }
    out
}

/// `D^beta y^alpha` evaluated at `y`.
fn monomial_derivative(alpha: &[u32], beta: &[u32], y: &[f64]) -> f64 {
    let mut v = 1.0;
    for k in 0..alpha.len() {
        if beta[k] > alpha[k] {
            return 0.0;
        }
        let mut f = 1.0;
        for j in 0..beta[k] {
            f *= (alpha[k] - j) as f64;
        }
        v *= f * y[k].powi((alpha[k] - beta[k]) as i32);
    }
    v
}

impl PolynomialPotential {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn normalized(&self, x: &Point) -> Vec<f64> {
        (0..self.dim()).map(|k| (x[k] - self.center[k]) / self.scale).collect()
    }

    /// Sum over monomials of `c_alpha D^beta y^alpha`, scaled to x-derivatives.
    fn derivative(&self, beta: &[u32], x: &Point) -> f64 {
        let y = self.normalized(x);
        let order: u32 = beta.iter().sum();
        let s: f64 = self
            .exponents
            .iter()
            .zip(&self.coefficients)
            .map(|(a, c)| c * monomial_derivative(a, beta, &y))
            .sum();
        s / self.scale.powi(order as i32)
    }

    fn unit(d: usize, idx: &[usize]) -> Vec<u32> {
        let mut b = vec![0u32; d];
        for &i in idx {
            b[i] += 1;
        }
        b
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.derivative(&vec![0; self.dim()], x)
    }

    /// `T(x) = grad psi(x)`.
    pub fn gradient(&self, x: &Point) -> Point {
        let d = self.dim();
        Point::from_fn(d, |i, _| self.derivative(&Self::unit(d, &[i]), x))
    }

    /// `DT(x) = Hess psi(x)`, symmetric by construction.
    pub fn hessian(&self, x: &Point) -> DMatrix<f64> {
        let d = self.dim();
        let mut h = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = self.derivative(&Self::unit(d, &[i, j]), x);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        h
    }

    /// Norm `sup_{|u|=1} |D^3 psi(x)[u,u,u]|` of the third derivative at `x`.
    pub fn third_derivative_norm(&self, x: &Point) -> f64 {
        if self.degree < 3 {
            return 0.0;
        }
        let d = self.dim();
        let mut t = vec![0.0; d * d * d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    t[(i * d + j) * d + k] = self.derivative(&Self::unit(d, &[i, j, k]), x);
                }
            }
        }
        symmetric_form_norm(d, 3, |u| {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        s += t[(i * d + j) * d + k] * u[i] * u[j] * u[k];
                    }
                }
            }
            s
        })
    }

    /// Norm of the (constant) fourth derivative; zero below degree 4.
    pub fn fourth_derivative_norm(&self) -> f64 {
        if self.degree < 4 {
            return 0.0;
        }
        let d = self.dim();
        let origin = Point::from_column_slice(&self.center);
        let mut t = vec![0.0; d * d * d * d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        t[((i * d + j) * d + k) * d + l] = self.derivative(&Self::unit(d, &[i, j, k, l]), &origin);
                    }
                }
            }
        }
        symmetric_form_norm(d, 4, |u| {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        for l in 0..d {
                            s += t[((i * d + j) * d + k) * d + l] * u[i] * u[j] * u[k] * u[l];
                        }
                    }
                }
            }
            s
        })
    }

    /// Adds `b.x` to the potential, translating the map by `b`.
    pub fn add_linear(&mut self, b: &Point) {
        let d = self.dim();
        for k in 0..d {
            let e = Self::unit(d, &[k]);
            let pos = self.exponents.iter().position(|a| *a == e).expect("linear monomials present");
            self.coefficients[pos] += b[k] * self.scale;
        }
    }

    /// Upper bound on the third-derivative norm over `B(x, r)`.
    pub fn third_derivative_bound(&self, x: &Point, r: f64) -> f64 {
        if self.degree > 4 {
            // Only reachable through hand-built potentials; fit_potential caps the degree.
            return f64::INFINITY;
        }
        (self.third_derivative_norm(x) + r * self.fourth_derivative_norm()) * (1.0 + 1e-9)
    }
}

/// `sup_{|u|=1} |f(u)|` for a homogeneous form `f` of the given order.
fn symmetric_form_norm(d: usize, order: u32, f: impl Fn(&[f64]) -> f64) -> f64 {
    match d {
        1 => f(&[1.0]).abs(),
        2 => {
            let g = |th: f64| f(&[th.cos(), th.sin()]).abs();
            let m = 720;
            let step = std::f64::consts::PI / m as f64;
            let (mut bt, mut bv) = (0.0, g(0.0));
            for k in 1..m {
                let th = k as f64 * step;
                let v = g(th);
                if v > bv {
                    bv = v;
                    bt = th;
                }
            }
            let mut lo = bt - step;
            let mut hi = bt + step;
            for _ in 0..80 {
                let a = lo + (hi - lo) / 3.0;
                let b = hi - (hi - lo) / 3.0;
                if g(a) < g(b) {
                    lo = a;
                } else {
                    hi = b;
                }
            }
            bv.max(g(0.5 * (lo + hi)))
        }
        _ => {
            let g = |th: f64, ph: f64| f(&[ph.sin() * th.cos(), ph.sin() * th.sin(), ph.cos()]).abs();
            let count = 4000;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            let (mut bt, mut bp, mut bv) = (0.0, 0.0, g(0.0, 0.0));
            for k in 0..count {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                let (th, ph) = (golden * k as f64, z.acos());
                let v = g(th, ph);
                if v > bv {
                    bv = v;
                    bt = th;
                    bp = ph;
                }
            }
            let mut step = 0.1;
            while step > 1e-10 {
                let mut moved = false;
                for (a, b) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                    let v = g(bt + a, bp + b);
                    if v > bv {
                        bv = v;
                        bt += a;
                        bp += b;
                        moved = true;
                    }
                }
                if !moved {
                    step *= 0.5;
                }
            }
            let _ = order;
            bv
        }
    }
}

/// Weighted least-squares fit of `grad psi(x_i) ~ y_i` with `psi` a polynomial
/// of total degree `2..=4` (no constant term).
pub fn fit_potential(
    sources: &[Point],
    targets: &[Point],
    weights: &[f64],
    degree: u32,
) -> Result<PolynomialPotential> {
    if !(2..=4).contains(&degree) {
        return Err(Error::InvalidInput(format!("potential degree {degree} not in 2..=4")));
    }
    let n = sources.len();
    if n == 0 {
        return Err(Error::EmptySupport);
    }
    let d = sources[0].len();
    let wsum: f64 = weights.iter().sum();
    let center: Vec<f64> = (0..d)
        .map(|k| sources.iter().zip(weights).map(|(x, w)| w * x[k]).sum::<f64>() / wsum)
        .collect();
    let scale = sources
        .iter()
        .map(|x| (0..d).map(|k| (x[k] - center[k]).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
        .max(1e-12);
    let exponents = monomials(d, degree);
    let nc = exponents.len();
    let mut a = DMatrix::<f64>::zeros(n * d, nc);
    let mut b = DVector::<f64>::zeros(n * d);
    for i in 0..n {
        let y: Vec<f64> = (0..d).map(|k| (sources[i][k] - center[k]) / scale).collect();
        let sw = weights[i].sqrt();
        for k in 0..d {
            let beta = PolynomialPotential::unit(d, &[k]);
            for (c, alpha) in exponents.iter().enumerate() {
                a[(i * d + k, c)] = sw * monomial_derivative(alpha, &beta, &y) / scale;
            }
            b[i * d + k] = sw * targets[i][k];
        }
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if !(svd.singular_values.min() > 1e-12 * smax) {
        return Err(Error::InvalidInput("potential fit is rank deficient".into()));
    }
    let coeffs = svd
        .solve(&b, 1e-14 * smax)
        .map_err(|e| Error::InvalidInput(format!("potential fit failed: {e}")))?;
    Ok(PolynomialPotential { center, scale, degree, exponents, coefficients: coeffs.iter().copied().collect() })
}
