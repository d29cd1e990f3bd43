//! Seeded banks of compactly supported test functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::flows::LagrangianFlow;
use crate::error::{Error, Result};

/// `amplitude * tau(t) * prod_j (1 - s_j^2)^4` with `s_j = (x_j - c_j) / w_j`,
/// where `tau(t) = c0 + c1 t + c2 t^2`. Vanishes outside the box `|s_j| < 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub half_widths: Vec<f64>,
    pub time_coeffs: [f64; 3],
    pub amplitude: f64,
}

/// Value and first derivatives of a bump at one space-time point.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpEval {
    pub value: f64,
    pub dt: f64,
    pub grad: Vec<f64>,
}

impl Bump {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.center).zip(&self.half_widths).all(|((x, c), w)| (x - c).abs() < *w)
    }

    fn tau(&self, t: f64) -> (f64, f64) {
        let [c0, c1, c2] = self.time_coeffs;
        (c0 + t * (c1 + t * c2), c1 + 2.0 * c2 * t)
    }

    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        self.eval(x, t).value
    }

    pub fn eval(&self, x: &[f64], t: f64) -> BumpEval {
        let d = self.dim();
        let mut f = [0.0; 3];
        let mut g = [0.0; 3];
        let mut grad = vec![0.0; d];
        for j in 0..d {
            let s = (x[j] - self.center[j]) / self.half_widths[j];
            if s.abs() >= 1.0 {
                return BumpEval { value: 0.0, dt: 0.0, grad };
            }
            let u = 1.0 - s * s;
            let u3 = u * u * u;
            f[j] = u3 * u;
            g[j] = -8.0 * s * u3 / self.half_widths[j];
        }
        let profile: f64 = f[..d].iter().product();
        let (tau, dtau) = self.tau(t);
        for j in 0..d {
            let others: f64 = (0..d).filter(|&k| k != j).map(|k| f[k]).product();
            grad[j] = self.amplitude * tau * g[j] * others;
        }
        BumpEval { value: self.amplitude * tau * profile, dt: self.amplitude * dtau * profile, grad }
    }
}

/// Test functions together with the quadrature they are paired on: spatial
/// resolution `h` and the time nodes of the trapezoid rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionBank {
    pub functions: Vec<Bump>,
    pub h: f64,
    pub times: Vec<f64>,
}

/// Uniform nodes `t0, ..., t1` with `steps` intervals.
pub fn uniform_times(t0: f64, t1: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| t0 + (t1 - t0) * k as f64 / steps as f64).collect()
}

impl TestFunctionBank {
    /// `count` bumps with centers uniform in the box `[lo, hi]`, half-widths
    /// between 0.35 and 0.7 of the box extent, and random time factors.
    pub fn random(seed: u64, count: usize, lo: &[f64], hi: &[f64], h: f64, times: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.len() > 3 {
            return Err(Error::InvalidInput("bank box must have matching corners in 1 to 3 dimensions".into()));
        }
        if !(h > 0.0) || times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("bank needs h > 0 and increasing times".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let functions = (0..count)
            .map(|_| {
                let mut center = Vec::with_capacity(lo.len());
                let mut half_widths = Vec::with_capacity(lo.len());
                for (a, b) in lo.iter().zip(hi) {
                    let ext = (b - a).max(4.0 * h);
                    center.push(rng.random_range(*a..=a + (b - a).max(0.0)));
                    half_widths.push(ext * rng.random_range(0.35..0.7));
                }
                let time_coeffs = [rng.random_range(0.5..1.5), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                Bump { center, half_widths, time_coeffs, amplitude: 1.0 }
            })
            .collect();
        Ok(Self { functions, h, times })
    }

    /// Random bank over the space-time bounding box of `flow`, with `steps`
    /// uniform time intervals across its time span.
    pub fn for_flow(flow: &dyn LagrangianFlow, seed: u64, count: usize, h: f64, steps: usize) -> Result<Self> {
        let (t0, t1) = flow.time_span();
        let labels = flow.labels(h.max(flow_scale_hint(flow)?))?;
        let d = flow.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for t in uniform_times(t0, t1, 8) {
            for p in flow.advance(&labels, t)? {
                for j in 0..d {
                    lo[j] = lo[j].min(p.x[j]);
                    hi[j] = hi[j].max(p.x[j]);
                }
            }
        }
        Self::random(seed, count, &lo, &hi, h, uniform_times(t0, t1, steps))
    }

    /// Halves `h` and inserts the midpoint of every time interval.
    pub fn refined(&self) -> Self {
        let mut times = Vec::with_capacity(2 * self.times.len() - 1);
        for w in self.times.windows(2) {
            times.push(w[0]);
            times.push(0.5 * (w[0] + w[1]));
        }
        times.push(*self.times.last().expect("bank has times"));
        Self { functions: self.functions.clone(), h: 0.5 * self.h, times }
    }

    /// Same bank with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.functions.iter_mut().for_each(|f| f.amplitude *= factor);
        out
    }

    /// Trapezoid weights of the time nodes.
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

    /// Largest discrepancy between the analytic derivatives and central
    /// differences with step `step`, over `samples` random points in each
    /// function's box.
    pub fn gradient_check(&self, samples: usize, step: f64, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (t0, t1) = (self.times[0], *self.times.last().expect("bank has times"));
        let mut worst: f64 = 0.0;
        for f in &self.functions {
            for _ in 0..samples {
                let x: Vec<f64> =
                    f.center.iter().zip(&f.half_widths).map(|(c, w)| c + w * rng.random_range(-1.0..1.0)).collect();
                let t = rng.random_range(t0..=t1);
                let e = f.eval(&x, t);
                let fd_t = (f.value(&x, t + step) - f.value(&x, t - step)) / (2.0 * step);
                worst = worst.max((fd_t - e.dt).abs());
                for j in 0..x.len() {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += step;
                    xm[j] -= step;
                    let fd = (f.value(&xp, t) - f.value(&xm, t)) / (2.0 * step);
                    worst = worst.max((fd - e.grad[j]).abs());
                }
            }
        }
        worst
    }
}

/// Coarse label spacing used to find a flow's bounding box.
fn flow_scale_hint(flow: &dyn LagrangianFlow) -> Result<f64> {
    let probe = flow.labels(f64::INFINITY)?;
    let d = flow.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for z in &probe.points {
        for j in 0..d {
            lo[j] = lo[j].min(z[j]);
            hi[j] = hi[j].max(z[j]);
        }
    }
    let ext = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    Ok(ext / 16.0)
}
