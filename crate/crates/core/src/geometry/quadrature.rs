//! Midpoint quadrature on the unit ball in polar or spherical cells.
//!
//! Cell weights are exact cell volumes, so the weights sum to the ball
//! volume to rounding.

use crate::error::{Error, Result};

/// Nodes in the unit ball with cell-volume weights.
#[derive(Clone, Debug)]
pub struct BallQuadrature {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl BallQuadrature {
    /// `n_radial` shells; angular resolution scales with it.
    pub fn new(d: usize, n_radial: usize) -> Result<Self> {
        if n_radial == 0 {
            return Err(Error::InvalidInput("quadrature needs at least one shell".into()));
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let dr = 1.0 / n_radial as f64;
        match d {
            1 => {
                let h = 1.0 / n_radial as f64;
                for k in 0..2 * n_radial {
                    nodes.push(vec![-1.0 + (k as f64 + 0.5) * h]);
                    weights.push(h);
                }
            }
            2 => {
                let n_theta = 4 * n_radial;
                let dth = std::f64::consts::TAU / n_theta as f64;
                for i in 0..n_radial {
                    let (r0, r1) = (i as f64 * dr, (i + 1) as f64 * dr);
                    let rm = 0.5 * (r0 + r1);
                    let w = 0.5 * (r1 * r1 - r0 * r0) * dth;
                    for k in 0..n_theta {
                        let th = (k as f64 + 0.5) * dth;
                        nodes.push(vec![rm * th.cos(), rm * th.sin()]);
                        weights.push(w);
                    }
                }
            }
            3 => {
                let n_cos = 2 * n_radial;
                let n_phi = 4 * n_radial;
                let dc = 2.0 / n_cos as f64;
                let dphi = std::f64::consts::TAU / n_phi as f64;
                for i in 0..n_radial {
                    let (r0, r1) = (i as f64 * dr, (i + 1) as f64 * dr);
                    let rm = 0.5 * (r0 + r1);
                    let shell = (r1.powi(3) - r0.powi(3)) / 3.0;
                    for j in 0..n_cos {
                        let c = -1.0 + (j as f64 + 0.5) * dc;
                        let s = (1.0 - c * c).sqrt();
                        for k in 0..n_phi {
                            let ph = (k as f64 + 0.5) * dphi;
                            nodes.push(vec![rm * s * ph.cos(), rm * s * ph.sin(), rm * c]);
                            weights.push(shell * dc * dphi);
                        }
                    }
                }
            }
            _ => return Err(Error::InvalidInput(format!("ball quadrature supports d in 1..=3, got {d}"))),
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Points on the unit sphere, used to probe boundaries.
    pub fn sphere_points(d: usize, n: usize) -> Vec<Vec<f64>> {
        match d {
            1 => vec![vec![-1.0], vec![1.0]],
            2 => (0..n)
                .map(|k| {
                    let th = std::f64::consts::TAU * k as f64 / n as f64;
                    vec![th.cos(), th.sin()]
                })
                .collect(),
            _ => {
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..n)
                    .map(|k| {
                        let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                        let s = (1.0 - z * z).sqrt();
                        let ph = golden * k as f64;
                        vec![s * ph.cos(), s * ph.sin(), z]
                    })
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::unit_ball_volume;

    #[test]
    fn weights_sum_to_volume() {
        for d in 1..=3 {
            let q = BallQuadrature::new(d, 6).unwrap();
            assert!((q.volume() - unit_ball_volume(d)).abs() < 1e-12);
            assert!(q.nodes.iter().all(|z| z.iter().map(|v| v * v).sum::<f64>() < 1.0));
        }
    }

    #[test]
    fn second_moment_converges() {
        // Integral of |z|^2 over the unit disk is pi/2.
        let q = BallQuadrature::new(2, 40).unwrap();
        let m: f64 = q.nodes.iter().zip(&q.weights).map(|(z, w)| w * (z[0] * z[0] + z[1] * z[1])).sum();
        assert!((m - std::f64::consts::FRAC_PI_2).abs() < 1e-3);
    }
}
