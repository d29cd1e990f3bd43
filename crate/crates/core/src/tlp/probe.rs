//! Sampled minimality of a relaxed state under admissible perturbations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::relaxed::{khat, relaxed_action, RelaxedState};
use crate::error::{Error, Result};
use crate::weak::{Bump, TestFunctionBank};

/// Placement attempts per bump before it is dropped.
const PLACEMENT_TRIES: usize = 50;

#[derive(Clone, Debug)]
pub struct ProbeOptions {
    /// Number of accepted perturbations.
    pub count: usize,
    /// Scale of the concentration change; `|dc| <= amplitude` everywhere.
    pub amplitude: f64,
    pub seed: u64,
    /// Vector bumps summed into one stream field.
    pub bumps: usize,
    /// Largest allowed change of any constraint residual.
    pub residual_tol: f64,
    /// Attempts before giving up on reaching `count`.
    pub max_attempts: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { count: 100, amplitude: 0.1, seed: 7, bumps: 3, residual_tol: 1e-3, max_attempts: 2000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub base_action: f64,
    pub amplitude: f64,
    /// `K(perturbed) - K(state)` per accepted probe.
    pub gaps: Vec<f64>,
    /// Smallest gap; zero when no probe was accepted.
    pub min_gap: f64,
    pub rejected: usize,
    /// Largest change of a constraint residual among accepted probes.
    pub max_residual_shift: f64,
}

impl ProbeReport {
    /// Every requested probe was accepted and none lowered the action by
    /// more than `tol`.
    pub fn passed(&self, count: usize, tol: f64) -> bool {
        self.gaps.len() == count && self.min_gap >= -tol
    }
}

/// Perturbs `state` by `(dc, dm)` solving the linearized constraints exactly:
/// for a compactly supported field `Phi` and `s(t) = 4t(1 - t)`,
/// `dc1 = -a s(t) div Phi`, `dm1 = rho_hat_1 a s'(t) Phi` and the opposite
/// change for fluid 0, so every `rho_hat_i d_t c_i + div m_i` is unchanged
/// and the endpoints stay fixed. `Phi` lives on cells where fluid 1 is
/// present at every frame and below saturation at interior frames. Probes
/// that leave `[0, 1]` or move a constraint residual of the bank by more
/// than `residual_tol` are rejected and resampled. The report holds the
/// action change of each accepted probe.
pub fn minimality_probe(state: &RelaxedState, opts: &ProbeOptions) -> Result<ProbeReport> {
    state.validate()?;
    let base = relaxed_action(state);
    if base.infinite_action {
        return Err(Error::InvalidInput("state has infinite action".into()));
    }
    let spec = &state.spec;
    let d = state.dim();
    let nt = state.times.len();
    let n = spec.n_cells();
    let safe: Vec<bool> = (0..n)
        .map(|cell| {
            (0..nt).all(|k| {
                let c1 = state.c[1][k][cell];
                // Interior frames move c1 both ways, so saturated cells are excluded.
                let interior = k > 0 && k + 1 < nt;
                c1 > 0.0 && !(interior && c1 >= 1.0) && (state.rho_hat[0] == 0.0 || state.c[0][k][cell] > 0.0)
            })
        })
        .collect();
    let safe_cells: Vec<usize> = (0..n).filter(|&c| safe[c]).collect();
    let mut report = ProbeReport {
        base_action: base.value,
        amplitude: opts.amplitude,
        gaps: Vec::new(),
        min_gap: 0.0,
        rejected: 0,
        max_residual_shift: 0.0,
    };
    if safe_cells.is_empty() {
        return Ok(report);
    }
    let (mut lo, mut hi) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
    for &cell in &safe_cells {
        let x = spec.cell_center(cell);
        for j in 0..d {
            lo[j] = lo[j].min(x[j]);
            hi[j] = hi[j].max(x[j]);
        }
    }
    let bank = TestFunctionBank::random(opts.seed ^ 0x5eed, 20, &lo, &hi, spec.cell_size, state.times.clone())?;
    let weights = state.time_weights();
    let vol = spec.cell_volume();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut attempts = 0;
    while report.gaps.len() < opts.count && attempts < opts.max_attempts {
        attempts += 1;
        let mut bumps: Vec<(Bump, Vec<f64>)> = Vec::new();
        for _ in 0..opts.bumps.max(1) {
            // Place each bump so that its box corners fall on safe cells.
            for _ in 0..PLACEMENT_TRIES {
                let center = spec.cell_center(safe_cells[rng.random_range(0..safe_cells.len())]);
                let half_widths: Vec<f64> =
                    (0..d).map(|j| (hi[j] - lo[j]).max(spec.cell_size) * rng.random_range(0.1..0.25)).collect();
                let fits = (0..1usize << d).all(|corner| {
                    let mut x = center.clone();
                    for j in 0..d {
                        x[j] += if corner >> j & 1 == 1 { half_widths[j] } else { -half_widths[j] };
                    }
                    spec.cell_of(&x).is_some_and(|c| safe[c])
                });
                if fits {
                    let mut dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                    dir.iter_mut().for_each(|x| *x /= norm);
                    let bump =
                        Bump { center: center.as_slice().to_vec(), half_widths, time_coeffs: [1.0, 0.0, 0.0], amplitude: 1.0 };
                    bumps.push((bump, dir));
                    break;
                }
            }
        }
        if bumps.is_empty() {
            report.rejected += 1;
            continue;
        }
        // Field values and divergence on the cells under any bump.
        let support: Vec<(usize, Vec<f64>, f64)> = (0..n)
            .into_par_iter()
            .filter_map(|cell| {
                let x = spec.cell_center(cell);
                let mut phi = vec![0.0; d];
                let mut div = 0.0;
                let mut inside = false;
                for (b, dir) in &bumps {
                    if !b.contains(x.as_slice()) {
                        continue;
                    }
                    inside = true;
                    let e = b.eval(x.as_slice(), 0.0);
                    for j in 0..d {
                        phi[j] += dir[j] * e.value;
                        div += dir[j] * e.grad[j];
                    }
                }
                inside.then_some((cell, phi, div))
            })
            .collect();
        if support.iter().any(|(cell, _, _)| !safe[*cell]) {
            report.rejected += 1;
            continue;
        }
        let scale = support.iter().map(|s| s.2.abs()).fold(0.0, f64::max);
        if !(scale > 0.0) {
            report.rejected += 1;
            continue;
        }
        let a = opts.amplitude / scale;
        let delta = |k: usize, phi: &[f64], div: f64| -> (f64, Vec<f64>) {
            let t = state.times[k];
            let (s, ds) = (4.0 * t * (1.0 - t), 4.0 - 8.0 * t);
            (-a * s * div, phi.iter().map(|p| a * ds * p).collect())
        };
        let in_range = support.iter().all(|(cell, phi, div)| {
            (0..nt).all(|k| {
                let c = state.c[1][k][*cell] + delta(k, phi, *div).0;
                (0.0..=1.0).contains(&c)
            })
        });
        if !in_range {
            report.rejected += 1;
            continue;
        }
        let shift = bank
            .functions
            .par_iter()
            .map(|f| {
                let mut parts = [0.0; 2];
                for (cell, phi, div) in &support {
                    let x = spec.cell_center(*cell);
                    if !f.contains(x.as_slice()) {
                        continue;
                    }
                    for k in 0..nt {
                        let e = f.eval(x.as_slice(), state.times[k]);
                        let (dc, dv) = delta(k, phi, *div);
                        let flux: f64 = (0..d).map(|j| e.grad[j] * dv[j]).sum();
                        let w = weights[k] * vol;
                        parts[1] -= w * state.rho_hat[1] * (e.dt * dc + flux);
                        parts[0] -= w * state.rho_hat[0] * (-e.dt * dc - flux);
                    }
                }
                parts[0].abs() + parts[1].abs()
            })
            .reduce(|| 0.0, f64::max);
        if shift > opts.residual_tol {
            report.rejected += 1;
            continue;
        }
        let gap: f64 = support
            .par_iter()
            .map(|(cell, phi, div)| {
                let mut g = 0.0;
                for k in 0..nt {
                    let (dc, dv) = delta(k, phi, *div);
                    for i in 0..2 {
                        let sign = if i == 1 { 1.0 } else { -1.0 };
                        let c = state.c[i][k][*cell];
                        let m = &state.m[i][k][cell * d..(cell + 1) * d];
                        let pm: Vec<f64> = m.iter().zip(&dv).map(|(m, v)| m + sign * state.rho_hat[i] * v).collect();
                        g += weights[k] * (khat(c + sign * dc, &pm, state.rho_hat[i]) - khat(c, m, state.rho_hat[i]));
                    }
                }
                g * vol
            })
            .sum();
        report.max_residual_shift = report.max_residual_shift.max(shift);
        report.gaps.push(gap);
    }
    report.min_gap = report.gaps.iter().copied().fold(f64::INFINITY, f64::min);
    if report.gaps.is_empty() {
        report.min_gap = 0.0;
    }
    Ok(report)
}
