//! Relaxed two-fluid kinetic energy and its weak constraints.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, Point};
use crate::interpolation::DensityPath;
use crate::weak::TestFunctionBank;

/// Tolerance on `c0 + c1 = 1` and on the range `[0, 1]`.
pub const SUM_TOL: f64 = 1e-9;

/// Kinetic energy density of a fluid with reference density `rho_hat`,
/// concentration `x` and momentum `y`: `|y|^2 / (2 rho_hat x)` when `y != 0`
/// and `rho_hat x > 0`, zero when `y = 0` and `x >= 0`, infinite otherwise.
pub fn khat(x: f64, y: &[f64], rho_hat: f64) -> f64 {
    let y2: f64 = y.iter().map(|v| v * v).sum();
    if y2 == 0.0 {
        if x >= 0.0 { 0.0 } else { f64::INFINITY }
    } else if rho_hat * x > 0.0 {
        0.5 * y2 / (rho_hat * x)
    } else {
        f64::INFINITY
    }
}

/// `khat` against its dual description `sup { a x + b.y : a + rho_hat |b|^2 / 2 <= 0 }`.
#[derive(Clone, Debug, Serialize)]
pub struct LegendreReport {
    pub khat: f64,
    /// Largest `a x + b.y` over the grid.
    pub grid_max: f64,
    /// Largest `a x + b.y - khat` over the grid, clamped at zero.
    pub max_violation: f64,
    /// `a* x + b*.y` at the analytic maximizer, when one exists.
    pub at_maximizer: Option<f64>,
}

/// Evaluates `a x + b.y` on an `n x n` grid of the paraboloid: `b = s e`
/// along the direction `e` of `y` and `a = -rho_hat s^2 / 2 - depth`. Parts
/// of `b` orthogonal to `y` only lower the value, so this slice contains the
/// supremum.
pub fn legendre_check(x: f64, y: &[f64], rho_hat: f64, n: usize) -> LegendreReport {
    let k = khat(x, y, rho_hat);
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let maximizer = (ny > 0.0 && rho_hat * x > 0.0).then(|| ny / (rho_hat * x));
    let reach = 2.0 * maximizer.unwrap_or(0.0) + 1.0;
    let mut grid_max = f64::NEG_INFINITY;
    let mut max_violation: f64 = 0.0;
    let steps = n.max(2) - 1;
    for i in 0..=steps {
        let s = -reach + 2.0 * reach * i as f64 / steps as f64;
        for j in 0..=steps {
            let depth = reach * j as f64 / steps as f64;
            let a = -0.5 * rho_hat * s * s - depth;
            let val = a * x + s * ny;
            grid_max = grid_max.max(val);
            max_violation = max_violation.max(val - k);
        }
    }
    let at_maximizer = maximizer.map(|s| -0.5 * rho_hat * s * s * x + s * ny);
    LegendreReport { khat: k, grid_max, max_violation, at_maximizer }
}

/// Concentrations and momenta of two fluids on space-time frames.
///
/// Frame `k` lives at `times[k]`; `c[i][k]` holds one value per cell and
/// `m[i][k]` holds `d` values per cell. `start` and `end` are the prescribed
/// concentrations of fluid 1 at `t = 0` and `t = 1`; fluid 0 takes the
/// complement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxedState {
    pub spec: GridSpec,
    pub times: Vec<f64>,
    pub rho_hat: [f64; 2],
    pub c: [Vec<Vec<f64>>; 2],
    pub m: [Vec<Vec<f64>>; 2],
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

impl RelaxedState {
    /// Checks shapes, ranges, `c0 + c1 = 1` and the time grid.
    pub fn new(
        spec: GridSpec,
        times: Vec<f64>,
        rho_hat: [f64; 2],
        c: [Vec<Vec<f64>>; 2],
        m: [Vec<Vec<f64>>; 2],
        start: Vec<f64>,
        end: Vec<f64>,
    ) -> Result<Self> {
        let state = Self { spec, times, rho_hat, c, m, start, end };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.spec.n_cells();
        let d = self.spec.dimension();
        let nt = self.times.len();
        if nt < 2 || self.times[0] != 0.0 || self.times[nt - 1] != 1.0 || self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("times must increase from 0 to 1".into()));
        }
        if self.rho_hat.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidInput("reference densities must be finite and nonnegative".into()));
        }
        let unit = |v: &[f64]| v.iter().all(|x| x.is_finite() && *x >= -SUM_TOL && *x <= 1.0 + SUM_TOL);
        for i in 0..2 {
            if self.c[i].len() != nt || self.m[i].len() != nt {
                return Err(Error::InvalidInput(format!("fluid {i} needs one frame per time")));
            }
            for k in 0..nt {
                if self.c[i][k].len() != n || self.m[i][k].len() != n * d {
                    return Err(Error::InvalidInput(format!("fluid {i} frame {k} has the wrong size")));
                }
                if !unit(&self.c[i][k]) {
                    return Err(Error::InvalidInput(format!("fluid {i} frame {k} leaves [0, 1]")));
                }
                if self.m[i][k].iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput(format!("fluid {i} frame {k} has a non-finite momentum")));
                }
            }
        }
        if self.start.len() != n || self.end.len() != n || !unit(&self.start) || !unit(&self.end) {
            return Err(Error::InvalidInput("endpoint concentrations must be cell fields in [0, 1]".into()));
        }
        let sum_error = self.sum_error();
        if sum_error > SUM_TOL {
            return Err(Error::InvalidInput(format!("concentrations do not sum to 1 (error {sum_error:e})")));
        }
        Ok(())
    }

    /// `max |c0 + c1 - 1|` over all cells and frames.
    pub fn sum_error(&self) -> f64 {
        self.c[0]
            .iter()
            .flatten()
            .zip(self.c[1].iter().flatten())
            .map(|(a, b)| (a + b - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Light fluid of density 0 at rest around a unit-density fluid with
    /// concentration `c1` and momentum `m1`.
    pub fn two_fluid(
        spec: GridSpec,
        times: Vec<f64>,
        c1: Vec<Vec<f64>>,
        m1: Vec<Vec<f64>>,
        start: Vec<f64>,
        end: Vec<f64>,
    ) -> Result<Self> {
        let c0 = c1.iter().map(|f| f.iter().map(|c| 1.0 - c).collect()).collect();
        let m0 = m1.iter().map(|f| vec![0.0; f.len()]).collect();
        Self::new(spec, times, [0.0, 1.0], [c0, c1], [m0, m1], start, end)
    }

    /// Two-fluid state whose heavy fluid has the cell averages of a density
    /// and momentum field. `field(x, t)` returns `(rho, v)` inside the
    /// support and `None` outside; averages use an `s^d` sub-lattice. The
    /// endpoint data are the fields at `t = 0` and `t = 1`.
    pub fn sample_two_fluid(
        spec: GridSpec,
        times: Vec<f64>,
        s: usize,
        field: impl Fn(&Point, f64) -> Option<(f64, Point)> + Sync,
    ) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidInput("sub-lattice needs at least one point per axis".into()));
        }
        let d = spec.dimension();
        let h = spec.cell_size;
        let sub = s.pow(d as u32);
        let frame = |t: f64| -> (Vec<f64>, Vec<f64>) {
            let cells: Vec<(f64, Vec<f64>)> = (0..spec.n_cells())
                .into_par_iter()
                .map(|cell| {
                    let center = spec.cell_center(cell);
                    let mut x = center.clone();
                    let (mut rho, mut mom) = (0.0, vec![0.0; d]);
                    for q in 0..sub {
                        let mut rem = q;
                        for ax in 0..d {
                            x[ax] = center[ax] - 0.5 * h + ((rem % s) as f64 + 0.5) * h / s as f64;
                            rem /= s;
                        }
                        if let Some((r, v)) = field(&x, t) {
                            rho += r;
                            mom.iter_mut().zip(v.iter()).for_each(|(m, v)| *m += r * v);
                        }
                    }
                    let inv = 1.0 / sub as f64;
                    (rho * inv, mom.into_iter().map(|m| m * inv).collect())
                })
                .collect();
            let c = cells.iter().map(|c| c.0).collect();
            let m = cells.into_iter().flat_map(|c| c.1).collect();
            (c, m)
        };
        let (c1, m1): (Vec<_>, Vec<_>) = times.iter().map(|&t| frame(t)).unzip();
        let (start, end) = (c1[0].clone(), c1[c1.len() - 1].clone());
        Self::two_fluid(spec, times, c1, m1, start, end)
    }

    /// Two-fluid state of a rasterized interpolant spanning `[0, 1]`.
    /// Deposition noise can push densities slightly above 1; such cells are
    /// clipped to 1 with their velocity kept.
    pub fn from_path(path: &DensityPath) -> Result<Self> {
        let first = path.frames.first().ok_or(Error::EmptySupport)?;
        let spec = first.density.spec().clone();
        let d = spec.dimension();
        let c1: Vec<Vec<f64>> = path.frames.iter().map(|f| f.density.values().iter().map(|v| v.min(1.0)).collect()).collect();
        let m1: Vec<Vec<f64>> = path
            .frames
            .iter()
            .map(|f| {
                let mut m = vec![0.0; spec.n_cells() * d];
                for (cell, v) in &f.velocity {
                    let rho = f.density.value(*cell).min(1.0);
                    for j in 0..d {
                        m[cell * d + j] = rho * v[j];
                    }
                }
                m
            })
            .collect();
        let (start, end) = (c1[0].clone(), c1[c1.len() - 1].clone());
        Self::two_fluid(spec, path.times.clone(), c1, m1, start, end)
    }

    pub fn dim(&self) -> usize {
        self.spec.dimension()
    }

    /// Trapezoid weights of the frames.
    pub fn time_weights(&self) -> Vec<f64> {
        let n = self.times.len();
        (0..n)
            .map(|k| {
                let left = if k > 0 { self.times[k] - self.times[k - 1] } else { 0.0 };
                let right = if k + 1 < n { self.times[k + 1] - self.times[k] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }

    /// Every cell with nonzero momentum has positive concentration, and a
    /// fluid of density zero carries no momentum.
    pub fn absolutely_continuous(&self) -> bool {
        let d = self.dim();
        (0..2).all(|i| {
            self.c[i].iter().zip(&self.m[i]).all(|(c, m)| {
                c.iter().enumerate().all(|(cell, &c)| {
                    let moving = m[cell * d..(cell + 1) * d].iter().any(|v| *v != 0.0);
                    !moving || self.rho_hat[i] * c > 0.0
                })
            })
        })
    }
}

/// Value of the relaxed kinetic energy.
#[derive(Clone, Debug, Serialize)]
pub struct ActionReport {
    /// `+inf` when some cell has infinite energy density.
    pub value: f64,
    /// Set when the action is infinite.
    pub infinite_action: bool,
    pub infinite_cells: usize,
    /// `(fluid, frame, cell)` of the first infinite cell.
    pub first_infinite: Option<(usize, usize, usize)>,
    /// Energy of each fluid, each possibly infinite.
    pub per_fluid: [f64; 2],
}

/// `sum_i int int khat(c_i, m_i; rho_hat_i)` by the midpoint rule in space
/// and the trapezoid rule in time. Infinite energy is reported, not raised.
pub fn relaxed_action(state: &RelaxedState) -> ActionReport {
    let d = state.dim();
    let vol = state.spec.cell_volume();
    let weights = state.time_weights();
    let mut per_fluid = [0.0; 2];
    let mut infinite = [false; 2];
    let mut infinite_cells = 0;
    let mut first_infinite = None;
    for i in 0..2 {
        for (k, w) in weights.iter().enumerate() {
            let (c, m) = (&state.c[i][k], &state.m[i][k]);
            let (sum, bad, first): (f64, usize, Option<usize>) = c
                .par_iter()
                .enumerate()
                .map(|(cell, &ci)| {
                    let e = khat(ci, &m[cell * d..(cell + 1) * d], state.rho_hat[i]);
                    if e.is_finite() { (e, 0, None) } else { (0.0, 1, Some(cell)) }
                })
                .reduce(|| (0.0, 0, None), |a, b| (a.0 + b.0, a.1 + b.1, match (a.2, b.2) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (x, y) => x.or(y),
                }));
            per_fluid[i] += w * vol * sum;
            if bad > 0 {
                infinite_cells += bad;
                infinite[i] = true;
                first_infinite = first_infinite.or(first.map(|cell| (i, k, cell)));
            }
        }
        if infinite[i] {
            per_fluid[i] = f64::INFINITY;
        }
    }
    let infinite_action = infinite_cells > 0;
    ActionReport {
        value: if infinite_action { f64::INFINITY } else { per_fluid[0] + per_fluid[1] },
        infinite_action,
        infinite_cells,
        first_infinite,
        per_fluid,
    }
}

/// Residuals of the weak constraints for every bank function.
#[derive(Clone, Debug, Serialize)]
pub struct ConstraintReport {
    /// `|int_Q p (1 - c0 - c1)|` with `p` the bank function.
    pub saturation: Vec<f64>,
    /// `|rho_hat_i [int c_i phi]_0^1 - int_Q (rho_hat_i c_i d_t phi + m_i . grad phi)|`
    /// per fluid, with `phi` the bank function and prescribed endpoint data.
    pub transport: [Vec<f64>; 2],
    /// Sum of the three parts per function.
    pub total: Vec<f64>,
}

impl ConstraintReport {
    pub fn max_total(&self) -> f64 {
        self.total.iter().copied().fold(0.0, f64::max)
    }
}

fn check_bank(state: &RelaxedState, bank: &TestFunctionBank) -> Result<()> {
    let h = state.spec.cell_size;
    if (bank.h - h).abs() > 1e-12 * h {
        return Err(Error::QuadratureMismatch(format!("bank h {} differs from cell size {h}", bank.h)));
    }
    if bank.times.len() != state.times.len()
        || bank.times.iter().zip(&state.times).any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::QuadratureMismatch("bank times differ from the state frames".into()));
    }
    if bank.functions.iter().any(|f| f.dim() != state.dim()) {
        return Err(Error::QuadratureMismatch("bank dimension differs from the state".into()));
    }
    Ok(())
}

/// Signed parts `(saturation, fluid 0, fluid 1)` of the constraint functional
/// for one test function, on the given fields.
fn constraint_parts(
    state: &RelaxedState,
    f: &crate::weak::Bump,
    c: &[Vec<Vec<f64>>; 2],
    m: &[Vec<Vec<f64>>; 2],
    endpoints: bool,
    cells: &[usize],
) -> [f64; 3] {
    let d = state.dim();
    let vol = state.spec.cell_volume();
    let weights = state.time_weights();
    let nt = state.times.len();
    let mut out = [0.0; 3];
    for &cell in cells {
        let x = state.spec.cell_center(cell);
        if !f.contains(x.as_slice()) {
            continue;
        }
        for k in 0..nt {
            let t = state.times[k];
            let e = f.eval(x.as_slice(), t);
            let w = weights[k] * vol;
            out[0] += w * e.value * (1.0 - c[0][k][cell] - c[1][k][cell]);
            for i in 0..2 {
                let flux: f64 = (0..d).map(|j| e.grad[j] * m[i][k][cell * d + j]).sum();
                out[1 + i] -= w * (state.rho_hat[i] * e.dt * c[i][k][cell] + flux);
            }
        }
        if endpoints {
            let (v0, v1) = (f.value(x.as_slice(), 0.0), f.value(x.as_slice(), 1.0));
            let (s, e) = (state.start[cell], state.end[cell]);
            out[1] += state.rho_hat[0] * vol * (v1 * (1.0 - e) - v0 * (1.0 - s));
            out[2] += state.rho_hat[1] * vol * (v1 * e - v0 * s);
        }
    }
    out
}

/// Weak constraint residuals of `state` against every bank function, used
/// both as the pressure test function and as the potential of each fluid.
/// The bank must share the state's cell size and time frames.
pub fn constraint_residual(state: &RelaxedState, bank: &TestFunctionBank) -> Result<ConstraintReport> {
    check_bank(state, bank)?;
    let cells: Vec<usize> = (0..state.spec.n_cells()).collect();
    let parts: Vec<[f64; 3]> = bank
        .functions
        .par_iter()
        .map(|f| constraint_parts(state, f, &state.c, &state.m, true, &cells))
        .collect();
    Ok(ConstraintReport {
        saturation: parts.iter().map(|p| p[0].abs()).collect(),
        transport: [parts.iter().map(|p| p[1].abs()).collect(), parts.iter().map(|p| p[2].abs()).collect()],
        total: parts.iter().map(|p| p.iter().map(|x| x.abs()).sum()).collect(),
    })
}
