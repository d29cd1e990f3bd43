//! Dormand-Prince 5(4) integrator with step control, dense output and a
//! per-step projection hook.

use crate::error::{Error, Result};

/// Tolerances and budget.
#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_steps: 1_000_000 }
    }
}

/// One accepted step with its continuous extension.
#[derive(Clone, Debug)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    t1: f64,
    /// Five coefficient vectors of the quartic interpolant.
    rcont: [Vec<f64>; 5],
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t1
    }

    /// Applies a coordinate permutation or other linear map to the step.
    pub fn map_coordinates(&mut self, f: impl Fn(&[f64]) -> Vec<f64>) {
        for r in self.rcont.iter_mut() {
            *r = f(r);
        }
    }

    /// State at `t` within the step.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let th = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        (0..r1.len())
            .map(|i| r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i]))))
            .collect()
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates `y' = f(t, y)` from `t0` through each of `stops` (ascending,
/// all `> t0`), landing exactly on every stop.
///
/// `project` is applied to each accepted state; `check` may abort the run.
/// Returns the states at the stops and the dense steps.
pub fn integrate(
    f: &impl Fn(f64, &[f64], &mut [f64]),
    t0: f64,
    y0: &[f64],
    stops: &[f64],
    opts: &OdeOptions,
    project: &impl Fn(&mut [f64]),
    check: &impl Fn(f64, &[f64]) -> Result<()>,
) -> Result<(Vec<Vec<f64>>, Vec<DenseStep>)> {
    let n = y0.len();
    let mut y = y0.to_vec();
    project(&mut y);
    let mut t = t0;
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    f(t, &y, &mut k[0]);
    let span = stops.last().map_or(0.0, |&s| s - t0).abs().max(1e-300);
    let mut h = initial_step(&y, &k[0], span, opts);
    let mut out = Vec::with_capacity(stops.len());
    let mut dense = Vec::new();
    let mut steps = 0usize;
    let mut fac_old: f64 = 1e-4;

    for &stop in stops {
        while t < stop {
            if steps >= opts.max_steps {
                return Err(Error::NonConvergence { iterations: steps, residual: stop - t });
            }
            steps += 1;
            let last = t + h * (1.0 + 1e-10) >= stop;
            let hs = if last { stop - t } else { h };
            stage(&y, &[(&k[0], A21)], hs, &mut tmp);
            f(t + C2 * hs, &tmp, &mut k[1]);
            stage(&y, &[(&k[0], A31), (&k[1], A32)], hs, &mut tmp);
            f(t + C3 * hs, &tmp, &mut k[2]);
            stage(&y, &[(&k[0], A41), (&k[1], A42), (&k[2], A43)], hs, &mut tmp);
            f(t + C4 * hs, &tmp, &mut k[3]);
            stage(&y, &[(&k[0], A51), (&k[1], A52), (&k[2], A53), (&k[3], A54)], hs, &mut tmp);
            f(t + C5 * hs, &tmp, &mut k[4]);
            stage(&y, &[(&k[0], A61), (&k[1], A62), (&k[2], A63), (&k[3], A64), (&k[4], A65)], hs, &mut tmp);
            f(t + hs, &tmp, &mut k[5]);
            stage(&y, &[(&k[0], A71), (&k[2], A73), (&k[3], A74), (&k[4], A75), (&k[5], A76)], hs, &mut ynew);
            f(t + hs, &ynew, &mut k[6]);

            let mut err = 0.0;
            for i in 0..n {
                let e = hs
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                h *= 0.1;
                continue;
            }
            if err <= 1.0 {
                // Dense output coefficients before projection.
                let ydiff: Vec<f64> = (0..n).map(|i| ynew[i] - y[i]).collect();
                let bspl: Vec<f64> = (0..n).map(|i| hs * k[0][i] - ydiff[i]).collect();
                let r4: Vec<f64> = (0..n).map(|i| ydiff[i] - hs * k[6][i] - bspl[i]).collect();
                let r5: Vec<f64> = (0..n)
                    .map(|i| {
                        hs * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i])
                    })
                    .collect();
                let t_new = if last { stop } else { t + hs };
                project(&mut ynew);
                check(t_new, &ynew)?;
                dense.push(DenseStep { t0: t, h: hs, t1: t_new, rcont: [y.clone(), ydiff, bspl, r4, r5] });
                std::mem::swap(&mut y, &mut ynew);
                t = t_new;
                f(t, &y, &mut k[0]);
                // PI step control (Hairer's dopri5 settings).
                let fac11 = err.max(1e-10).powf(0.17);
                let fac = (fac11 / fac_old.powf(0.04) / 0.9).clamp(0.1, 5.0);
                fac_old = err.max(1e-4);
                h = hs / fac;
                if last {
                    h = h.max(hs);
                }
            } else {
                let fac11 = err.powf(0.17);
                h = hs / (fac11 / 0.9).min(5.0);
            }
        }
        out.push(y.clone());
    }
    Ok((out, dense))
}

fn stage(y: &[f64], terms: &[(&Vec<f64>, f64)], h: f64, out: &mut [f64]) {
    for i in 0..y.len() {
        let mut s = 0.0;
        for (k, a) in terms {
            s += a * k[i];
        }
        out[i] = y[i] + h * s;
    }
}

fn initial_step(y: &[f64], dy: &[f64], span: f64, opts: &OdeOptions) -> f64 {
    let n = y.len() as f64;
    let sc = |i: usize| opts.atol + opts.rtol * y[i].abs();
    let d0 = (y.iter().enumerate().map(|(i, v)| (v / sc(i)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (dy.iter().enumerate().map(|(i, v)| (v / sc(i)).powi(2)).sum::<f64>() / n).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span).max(1e-12 * span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let stops: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let (ys, dense) = integrate(&f, 0.0, &[1.0, 0.0], &stops, &OdeOptions::default(), &|_| {}, &|_, _| Ok(())).unwrap();
        for (k, y) in ys.iter().enumerate() {
            let t = (k + 1) as f64;
            assert!((y[0] - t.cos()).abs() < 1e-8, "{} {}", y[0], t.cos());
        }
        // Dense output inside a step.
        let s = &dense[dense.len() / 2];
        let tm = s.t0 + 0.37 * s.h;
        assert!((s.eval(tm)[0] - tm.cos()).abs() < 1e-8);
        assert_eq!(dense.last().unwrap().t1(), 10.0);
    }
}
