//! Two-point boundary value problem for droplet geodesics.
//!
//! The problem is first reordered into a canonical axis order so that
//! permuting the axes of both endpoints permutes the solution exactly.

use super::ode::OdeOptions;
use super::{check_surface, geodesic_ivp_with, DropletGeodesic, DEFAULT_INTERVALS};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Budgets and tolerances for [`geodesic_bvp`].
#[derive(Clone, Copy, Debug)]
pub struct BvpOptions {
    /// Endpoint tolerance; `None` means `1e-8 r`.
    pub tol: Option<f64>,
    pub max_newton: usize,
    pub max_descent: usize,
    /// Nodes of the discretized path used by the descent fallback.
    pub descent_nodes: usize,
    pub intervals: usize,
    pub ode: OdeOptions,
}

impl Default for BvpOptions {
    fn default() -> Self {
        Self {
            tol: None,
            max_newton: 200,
            max_descent: 5000,
            descent_nodes: 64,
            intervals: DEFAULT_INTERVALS,
            ode: OdeOptions::default(),
        }
    }
}

/// Geodesic on `[0, 1]` from `a_start` to `a_end`.
pub fn geodesic_bvp(r: f64, a_start: &[f64], a_end: &[f64], opts: &BvpOptions) -> Result<DropletGeodesic> {
    check_surface(r, a_start)?;
    check_surface(r, a_end)?;
    let d = a_start.len();
    if a_end.len() != d {
        return Err(Error::InvalidInput("endpoint dimension mismatch".into()));
    }
    if a_start == a_end {
        return DropletGeodesic::constant(r, a_start, opts.intervals);
    }
    let tol = opts.tol.unwrap_or(1e-8 * r);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a_start[i].total_cmp(&a_start[j]).then(a_end[i].total_cmp(&a_end[j])).then(i.cmp(&j)));
    let s: Vec<f64> = order.iter().map(|&i| a_start[i]).collect();
    let e: Vec<f64> = order.iter().map(|&i| a_end[i]).collect();

    let w0 = solve_canonical(r, &s, &e, tol, opts)?;
    let adot0: Vec<f64> = s.iter().zip(&w0).map(|(a, w)| a * w).collect();
    let g = geodesic_ivp_with(r, &s, &adot0, 1.0, opts.intervals, &opts.ode)?;
    let err = max_diff(g.end(), &e);
    if err >= tol {
        return Err(Error::NonConvergence { iterations: opts.max_newton, residual: err });
    }
    Ok(unpermute(g, &order))
}

fn unpermute(mut g: DropletGeodesic, order: &[usize]) -> DropletGeodesic {
    let inv = |v: &Vec<f64>| {
        let mut out = vec![0.0; v.len()];
        for (k, &i) in order.iter().enumerate() {
            out[i] = v[k];
        }
        out
    };
    g.a = g.a.iter().map(inv).collect();
    g.adot = g.adot.iter().map(inv).collect();
    let d = order.len();
    for step in g.dense.iter_mut() {
        step.map_coordinates(|y| {
            let mut out = y.to_vec();
            for (k, &i) in order.iter().enumerate() {
                out[i] = y[k];
                out[d + i] = y[d + k];
            }
            out
        });
    }
    g
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Orthonormal basis of `{w : sum w = 0}` as columns.
fn hyperplane_basis(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d - 1, |i, k| {
        let k1 = k + 1;
        let norm = ((k1 * (k1 + 1)) as f64).sqrt();
        if i < k1 {
            1.0 / norm
        } else if i == k1 {
            -(k1 as f64) / norm
        } else {
            0.0
        }
    })
}

/// Shooting residual in log coordinates, or `None` if the shot failed.
fn shoot(r: f64, s: &[f64], e: &[f64], w0: &DVector<f64>, opts: &BvpOptions) -> Option<(DVector<f64>, f64)> {
    let adot0: Vec<f64> = s.iter().zip(w0.iter()).map(|(a, w)| a * w).collect();
    let g = geodesic_ivp_with(r, s, &adot0, 1.0, 1, &opts.ode).ok()?;
    let end = g.end();
    let res = DVector::from_iterator(s.len(), end.iter().zip(e).map(|(x, y)| x.ln() - y.ln()));
    Some((res, max_diff(end, e)))
}

fn solve_canonical(r: f64, s: &[f64], e: &[f64], tol: f64, opts: &BvpOptions) -> Result<Vec<f64>> {
    let d = s.len();
    let basis = hyperplane_basis(d);
    let du = DVector::from_iterator(d, s.iter().zip(e).map(|(a, b)| b.ln() - a.ln()));
    let z0 = basis.transpose() * &du;
    let (z, err) = newton(r, s, e, &basis, z0.clone(), tol, opts);
    if err < tol {
        return Ok((&basis * z).iter().copied().collect());
    }
    let guess = descent_guess(r, s, e, opts);
    let (z2, err2) = newton(r, s, e, &basis, basis.transpose() * guess, tol, opts);
    if err2 < tol {
        return Ok((&basis * z2).iter().copied().collect());
    }
    Err(Error::NonConvergence { iterations: opts.max_newton + opts.max_descent, residual: err.min(err2) })
}

/// Damped Newton on the initial log-velocity; returns the best iterate.
fn newton(
    r: f64,
    s: &[f64],
    e: &[f64],
    basis: &DMatrix<f64>,
    mut z: DVector<f64>,
    tol: f64,
    opts: &BvpOptions,
) -> (DVector<f64>, f64) {
    let bt = basis.transpose();
    let eval = |z: &DVector<f64>| shoot(r, s, e, &(basis * z), opts).map(|(res, err)| (&bt * res, err));
    let Some((mut f, mut err)) = eval(&z) else {
        return (z, f64::INFINITY);
    };
    let m = z.len();
    let mut stalls = 0;
    for _ in 0..opts.max_newton {
        if err < 1e-3 * tol {
            break;
        }
        let mut jac = DMatrix::zeros(m, m);
        let mut ok = true;
        for k in 0..m {
            let h = 1e-6 * z.norm().max(1.0);
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[k] += h;
            zm[k] -= h;
            match (eval(&zp), eval(&zm)) {
                (Some((fp, _)), Some((fm, _))) => jac.set_column(k, &((fp - fm) / (2.0 * h))),
                _ => ok = false,
            }
        }
        if !ok {
            break;
        }
        let Some(step) = jac.lu().solve(&(-&f)) else {
            break;
        };
        let fnorm = f.norm();
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-4 {
            let zt = &z + alpha * &step;
            if let Some((ft, et)) = eval(&zt) {
                if ft.norm() < fnorm {
                    z = zt;
                    f = ft;
                    err = et;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            stalls += 1;
            if stalls >= 3 || err < tol {
                break;
            }
        }
    }
    (z, err)
}

/// Initial log-velocity from projected gradient descent on the discrete
/// energy of a path with fixed endpoints.
fn descent_guess(r: f64, s: &[f64], e: &[f64], opts: &BvpOptions) -> DVector<f64> {
    let d = s.len();
    let n = opts.descent_nodes.max(2);
    let us: Vec<f64> = s.iter().map(|v| v.ln()).collect();
    let ue: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let target = d as f64 * r.ln();
    let mut u: Vec<Vec<f64>> = (0..=n)
        .map(|k| {
            let t = k as f64 / n as f64;
            (0..d).map(|j| (1.0 - t) * us[j] + t * ue[j]).collect()
        })
        .collect();
    let energy = |u: &Vec<Vec<f64>>| -> f64 {
        (0..n)
            .map(|k| (0..d).map(|j| (u[k + 1][j].exp() - u[k][j].exp()).powi(2)).sum::<f64>())
            .sum::<f64>()
            * n as f64
    };
    let mut en = energy(&u);
    let mut step = 1.0 / n as f64;
    for _ in 0..opts.max_descent {
        let mut grad = vec![vec![0.0; d]; n + 1];
        for k in 1..n {
            for j in 0..d {
                let a = u[k][j].exp();
                grad[k][j] = 2.0 * n as f64 * a * (2.0 * a - u[k - 1][j].exp() - u[k + 1][j].exp());
            }
            let mean = grad[k].iter().sum::<f64>() / d as f64;
            grad[k].iter_mut().for_each(|g| *g -= mean);
        }
        let gnorm: f64 = grad.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-12 {
            break;
        }
        loop {
            let mut trial = u.clone();
            for k in 1..n {
                for j in 0..d {
                    trial[k][j] -= step * grad[k][j];
                }
                let shift = (target - trial[k].iter().sum::<f64>()) / d as f64;
                trial[k].iter_mut().for_each(|v| *v += shift);
            }
            let et = energy(&trial);
            if et <= en - 1e-4 * step * gnorm * gnorm {
                u = trial;
                en = et;
                step *= 1.5;
                break;
            }
            step *= 0.5;
            if step < 1e-16 {
                break;
            }
        }
        if step < 1e-16 {
            break;
        }
    }
    let mut w = DVector::from_iterator(d, (0..d).map(|j| (u[1][j] - u[0][j]) * n as f64));
    let mean = w.sum() / d as f64;
    w.add_scalar_mut(-mean);
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_orthonormal() {
        let b = hyperplane_basis(4);
        let g = b.transpose() * &b;
        assert!((g - DMatrix::identity(3, 3)).norm() < 1e-14);
        for k in 0..3 {
            assert!(b.column(k).sum().abs() < 1e-14);
        }
    }

    #[test]
    fn descent_guess_points_toward_target() {
        let w = descent_guess(1.0, &[1.0, 1.0], &[2.0, 0.5], &BvpOptions { max_descent: 300, ..Default::default() });
        assert!(w[0] > 0.0 && w[1] < 0.0);
    }

    #[test]
    fn constant_when_endpoints_agree() {
        let g = geodesic_bvp(1.0, &[2.0, 0.5], &[2.0, 0.5], &BvpOptions::default()).unwrap();
        assert_eq!(g.c, 0.0);
    }
}
