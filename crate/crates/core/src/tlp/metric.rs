//! Transport distance between measure-function pairs and its stability runs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DiscreteMeasure, Point};
use crate::transport::{
    bottleneck_assignment, check_masses, cost_matrix, min_cost_flow, solve_cost_matrix, solve_exact, sq_dist,
    BrenierField, Coupling,
};

/// A measure together with one value vector per support point.
#[derive(Clone, Debug)]
pub struct TLpPair {
    pub measure: DiscreteMeasure,
    pub values: Vec<Vec<f64>>,
}

impl TLpPair {
    pub fn new(measure: DiscreteMeasure, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != measure.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for {} support points",
                values.len(),
                measure.len()
            )));
        }
        let width = values.first().map_or(0, Vec::len);
        if values.iter().any(|v| v.len() != width || v.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidInput("values must be finite vectors of one length".into()));
        }
        Ok(Self { measure, values })
    }

    /// Pair with vector values given as points, e.g. a transport map.
    pub fn from_points(measure: DiscreteMeasure, values: &[Point]) -> Result<Self> {
        Self::new(measure, values.iter().map(|v| v.as_slice().to_vec()).collect())
    }

    fn width(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

/// Exponent of the distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TlpOrder {
    One,
    Two,
    Infinity,
}

impl FromStr for TlpOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" => Ok(Self::One),
            "2" => Ok(Self::Two),
            "inf" | "infinity" => Ok(Self::Infinity),
            other => Err(Error::InvalidInput(format!("exponent must be 1, 2 or inf, got {other:?}"))),
        }
    }
}

impl fmt::Display for TlpOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::One => "1",
            Self::Two => "2",
            Self::Infinity => "inf",
        })
    }
}

fn value_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Lifted cost matrix `|x - y|^p + |g0(x) - g1(y)|^p`, row-major. For
/// [`TlpOrder::Infinity`] the entries are `|x - y| + |g0(x) - g1(y)|`.
pub fn lifted_cost(a: &TLpPair, b: &TLpPair, p: TlpOrder) -> Result<Vec<f64>> {
    if a.measure.dim() != b.measure.dim() || a.width() != b.width() {
        return Err(Error::InvalidInput("pairs differ in dimension or value width".into()));
    }
    let m = b.measure.len();
    let base = cost_matrix(&a.measure, &b.measure, sq_dist);
    Ok(base
        .iter()
        .enumerate()
        .map(|(k, &d2)| {
            let g = value_dist(&a.values[k / m], &b.values[k % m]);
            match p {
                TlpOrder::One | TlpOrder::Infinity => d2.sqrt() + g,
                TlpOrder::Two => d2 + g * g,
            }
        })
        .collect())
}

/// Optimal coupling and distance between two pairs of equal mass.
#[derive(Clone, Debug)]
pub struct TlpSolution {
    pub distance: f64,
    pub couplings: Vec<Coupling>,
}

/// Distance between `(mu, g0)` and `(nu, g1)`.
pub fn tlp_distance(a: &TLpPair, b: &TLpPair, p: TlpOrder) -> Result<f64> {
    Ok(tlp_solve(a, b, p)?.distance)
}

/// [`tlp_distance`] together with an optimal coupling.
pub fn tlp_solve(a: &TLpPair, b: &TLpPair, p: TlpOrder) -> Result<TlpSolution> {
    check_masses(&a.measure, &b.measure)?;
    let cost = lifted_cost(a, b, p)?;
    let (wa, wb) = (a.measure.weights(), b.measure.weights());
    match p {
        TlpOrder::One | TlpOrder::Two => {
            let couplings = solve_cost_matrix(wa, wb, &cost)?;
            let m = wb.len();
            let mut terms: Vec<f64> = couplings.iter().map(|c| c.mass * cost[c.source * m + c.target]).collect();
            // Sorted summation makes the value independent of argument order.
            terms.sort_by(f64::total_cmp);
            let total: f64 = terms.iter().sum();
            let distance = if p == TlpOrder::Two { total.max(0.0).sqrt() } else { total };
            Ok(TlpSolution { distance, couplings })
        }
        TlpOrder::Infinity => bottleneck(wa, wb, &cost),
    }
}

/// Smallest threshold admitting a coupling supported on entries below it.
fn bottleneck(a: &[f64], b: &[f64], cost: &[f64]) -> Result<TlpSolution> {
    let (n, m) = (a.len(), b.len());
    let w0 = a[0];
    if n == m && a.iter().chain(b).all(|w| (w - w0).abs() <= 1e-12 * w0) {
        let (t, perm) = bottleneck_assignment(n, cost);
        let couplings = perm.into_iter().enumerate().map(|(i, j)| Coupling { source: i, target: j, mass: a[i] }).collect();
        return Ok(TlpSolution { distance: t, couplings });
    }
    let mut cands = cost.to_vec();
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    // A coupling avoiding every entry above `t` exists iff the 0/1 cost problem has value 0.
    let total: f64 = a.iter().sum();
    let feasible = |t: f64| -> Result<Option<Vec<Coupling>>> {
        let masked: Vec<f64> = cost.iter().map(|&c| if c <= t { 0.0 } else { 1.0 }).collect();
        let plan = min_cost_flow(a, b, &masked)?;
        let excess: f64 = plan.iter().map(|c| c.mass * masked[c.source * m + c.target]).sum();
        Ok((excess <= 1e-12 * total).then_some(plan))
    };
    let (mut lo, mut hi) = (0usize, cands.len() - 1);
    let mut best = feasible(cands[hi])?.ok_or_else(|| Error::InvalidInput("no feasible coupling".into()))?;
    while lo < hi {
        let mid = (lo + hi) / 2;
        match feasible(cands[mid])? {
            Some(plan) => {
                hi = mid;
                best = plan;
            }
            None => lo = mid + 1,
        }
    }
    Ok(TlpSolution { distance: cands[hi], couplings: best })
}

/// Quadratic-cost transport distance of the underlying measures, the lower
/// bound obtained by dropping the value term.
pub fn base_distance(a: &TLpPair, b: &TLpPair, p: TlpOrder) -> Result<f64> {
    let strip = |x: &TLpPair| TLpPair { measure: x.measure.clone(), values: vec![Vec::new(); x.measure.len()] };
    tlp_distance(&strip(a), &strip(b), p)
}

/// `d_TL2((mu_k, T_k), (mu, T))` for each k, with every map read off the
/// optimal quadratic plan.
pub fn map_stability_tlp(
    mu_k: &[DiscreteMeasure],
    nu_k: &[DiscreteMeasure],
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<Vec<f64>> {
    if mu_k.len() != nu_k.len() {
        return Err(Error::InvalidInput("sequences differ in length".into()));
    }
    let limit = TLpPair::from_points(mu.clone(), &solve_exact(mu, nu)?.barycentric_map())?;
    mu_k.iter()
        .zip(nu_k)
        .map(|(mk, nk)| {
            let pair = TLpPair::from_points(mk.clone(), &solve_exact(mk, nk)?.barycentric_map())?;
            tlp_distance(&pair, &limit, TlpOrder::Two)
        })
        .collect()
}

/// Distances between two displacement interpolants along time.
#[derive(Clone, Debug, Serialize)]
pub struct UniformityReport {
    pub times: Vec<f64>,
    /// `int |x - S_{k,t}(x)|^2 d mu_t` per time.
    pub position: Vec<f64>,
    /// `int |v_t - v_{k,t} o S_{k,t}|^2 d mu_t` per time.
    pub velocity: Vec<f64>,
    /// `int |v_t (x) v_t - (v_{k,t} (x) v_{k,t}) o S_{k,t}| d mu_t` per time.
    pub tensor: Vec<f64>,
    pub sup_position: f64,
    pub sup_velocity: f64,
    pub sup_tensor: f64,
    /// `max_t velocity - min_t velocity`.
    pub velocity_spread: f64,
}

/// Compares the interpolants of `field` and `field_k` through the maps
/// `S_{k,t} = T_{k,t} o S_k o T_t^{-1}`, with `S_k` the optimal plan between
/// the two source measures. Every composition is done on labels: a label `x`
/// of the first source is carried to `T_t(x)` and its partner `S_k(x)` to
/// `T_{k,t}(S_k(x))`.
pub fn geodesic_tlp_uniformity(field: &BrenierField, field_k: &BrenierField, times: &[f64]) -> Result<UniformityReport> {
    if times.is_empty() || times.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::InvalidInput("times must lie in [0, 1]".into()));
    }
    let mu = DiscreteMeasure::new(field.sources.clone(), field.weights.clone())?;
    let mu_k = DiscreteMeasure::new(field_k.sources.clone(), field_k.weights.clone())?;
    let plan = solve_exact(&mu, &mu_k)?;
    let d = mu.dim();
    let (mut position, mut velocity, mut tensor) = (Vec::new(), Vec::new(), Vec::new());
    for &t in times {
        let (mut pos, mut vel, mut ten) = (0.0, 0.0, 0.0);
        for c in &plan.couplings {
            let (x, y) = (&field.sources[c.source], &field_k.sources[c.target]);
            let v = &field.targets[c.source] - x;
            let vk = &field_k.targets[c.target] - y;
            let xt = x + t * &v;
            let yt = y + t * &vk;
            pos += c.mass * sq_dist(&xt, &yt);
            vel += c.mass * sq_dist(&v, &vk);
            let mut f = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let e = v[i] * v[j] - vk[i] * vk[j];
                    f += e * e;
                }
            }
            ten += c.mass * f.sqrt();
        }
        position.push(pos);
        velocity.push(vel);
        tensor.push(ten);
    }
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let min = velocity.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(UniformityReport {
        times: times.to_vec(),
        sup_position: max(&position),
        sup_velocity: max(&velocity),
        sup_tensor: max(&tensor),
        velocity_spread: max(&velocity) - min,
        position,
        velocity,
        tensor,
    })
}
