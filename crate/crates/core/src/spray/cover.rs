//! Greedy disjoint ball packing of the source under the admissible-radius rule.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use nalgebra::DMatrix;

use super::{SprayBall, SprayOptions, SprayPlan};
use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, GridDensity, Point, PointIndex};
use crate::transport::{sorted_eigen, BrenierField};

/// Cells with at least this value count as fully inside the shape.
const FULL_CELL: f64 = 1.0 - 1e-9;

/// First-order data of the map at a candidate center.
pub(crate) struct Anchor {
    pub image: Point,
    pub eigenvalues: Vec<f64>,
    pub frame: DMatrix<f64>,
    /// Third-derivative norm at the center (potential model) or surrogate.
    pub d3: f64,
}

/// Source of `T`, `DT` and ball bounds for the admissibility rule.
pub(crate) struct MapModel<'a> {
    field: &'a BrenierField,
    index: PointIndex,
    /// Cached third-derivative norm when it is constant (degree <= 3).
    d3_const: Option<f64>,
    d4: f64,
    safety: f64,
}

impl<'a> MapModel<'a> {
    pub fn new(field: &'a BrenierField, safety: f64) -> Self {
        let index = field.index();
        let (d3_const, d4) = match &field.potential {
            Some(p) if p.degree <= 3 => (Some(p.third_derivative_norm(&field.sources[0])), 0.0),
            Some(p) => (None, p.fourth_derivative_norm()),
            None => (None, 0.0),
        };
        Self { field, index, d3_const, d4, safety }
    }

    pub fn anchor(&self, x: &Point) -> Anchor {
        match &self.field.potential {
            Some(p) => {
                let (eigenvalues, frame) = sorted_eigen(&p.hessian(x));
                let d3 = self.d3_const.unwrap_or_else(|| p.third_derivative_norm(x));
                Anchor { image: p.gradient(x), eigenvalues, frame, d3 }
            }
            None => {
                let i = self.index.nearest(x, 1)[0];
                Anchor {
                    image: self.field.affine_at(i, x),
                    eigenvalues: self.field.eigenvalues[i].clone(),
                    frame: self.field.frames[i].clone(),
                    d3: self.field.d3[i],
                }
            }
        }
    }

    /// `(lambda_lo, lambda_hi, d3)` over the ball of radius `r` around the anchor.
    pub fn ball_bounds(&self, a: &Anchor, r: f64) -> (f64, f64, f64) {
        let (lo0, hi0) = (a.eigenvalues[0], *a.eigenvalues.last().unwrap());
        if self.field.potential.is_some() {
            // Hessian eigenvalues move by at most r sup ||D^3 psi|| over the ball.
            let d3 = (a.d3 + r * self.d4) * (1.0 + 1e-9);
            (lo0 - r * d3, hi0 + r * d3, d3)
        } else {
            (lo0 / self.safety, hi0 * self.safety, a.d3)
        }
    }
}

/// Both inequalities of the admissible-radius rule plus `r < diam`.
pub fn radius_admissible(epsilon: f64, diam: f64, r: f64, lo: f64, hi: f64, d3: f64) -> bool {
    lo > 0.0
        && r < diam
        && epsilon / 4.0 > r * d3 / (lo * lo)
        && epsilon > (hi * hi * r / (lo * diam)).powi(2)
}

/// Largest admissible radius not exceeding `rmax`, by bisection.
fn max_radius(model: &MapModel, a: &Anchor, epsilon: f64, diam: f64, rmax: f64) -> f64 {
    let ok = |r: f64| {
        let (lo, hi, d3) = model.ball_bounds(a, r);
        radius_admissible(epsilon, diam, r, lo, hi, d3)
    };
    if ok(rmax) {
        return rmax;
    }
    let (mut lo, mut hi) = (0.0, rmax);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Distance from a point to the complement of the full cells.
struct Boundary {
    index: PointIndex,
    half: f64,
    diag: f64,
}

impl Boundary {
    fn new(omega0: &GridDensity) -> Result<Self> {
        let spec = omega0.spec();
        let d = spec.dimension();
        let full = |idx: &[i64]| -> bool {
            if idx.iter().zip(&spec.dims).any(|(&i, &n)| i < 0 || i >= n as i64) {
                return false;
            }
            let u: Vec<usize> = idx.iter().map(|&i| i as usize).collect();
            omega0.value(spec.flatten(&u)) >= FULL_CELL
        };
        let mut frontier: HashMap<Vec<i64>, ()> = HashMap::new();
        let mut any = false;
        for c in 0..spec.n_cells() {
            if omega0.value(c) < FULL_CELL {
                continue;
            }
            any = true;
            let idx: Vec<i64> = spec.unflatten(c).iter().map(|&i| i as i64).collect();
            for k in 0..d {
                for s in [-1i64, 1] {
                    let mut nb = idx.clone();
                    nb[k] += s;
                    if !full(&nb) {
                        frontier.insert(nb, ());
                    }
                }
            }
        }
        if !any {
            return Err(Error::EmptySupport);
        }
        let h = spec.cell_size;
        let mut keys: Vec<Vec<i64>> = frontier.into_keys().collect();
        keys.sort();
        let centers: Vec<Point> = keys
            .iter()
            .map(|idx| Point::from_fn(d, |k, _| spec.origin[k] + (idx[k] as f64 + 0.5) * h))
            .collect();
        Ok(Self { index: PointIndex::with_density(centers, 2.0), half: 0.5 * h, diag: h * (d as f64).sqrt() })
    }

    fn distance(&self, x: &Point) -> f64 {
        let pts = self.index.points();
        let near = self.index.nearest(x, 1)[0];
        let reach = (&pts[near] - x).norm() + self.diag;
        self.index
            .within(x, reach)
            .into_iter()
            .map(|i| {
                let c = &pts[i];
                let mut s = 0.0;
                for k in 0..x.len() {
                    let e = ((x[k] - c[k]).abs() - self.half).max(0.0);
                    s += e * e;
                }
                s.sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Hash grid over placed balls.
struct BallGrid {
    cell: f64,
    map: HashMap<Vec<i64>, Vec<usize>>,
    centers: Vec<Point>,
    radii: Vec<f64>,
    rmax: f64,
}

impl BallGrid {
    fn new(cell: f64) -> Self {
        Self { cell, map: HashMap::new(), centers: Vec::new(), radii: Vec::new(), rmax: 0.0 }
    }

    fn key(&self, x: &Point) -> Vec<i64> {
        x.iter().map(|v| (v / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, x: Point, r: f64) {
        let k = self.key(&x);
        self.map.entry(k).or_default().push(self.centers.len());
        self.centers.push(x);
        self.radii.push(r);
        self.rmax = self.rmax.max(r);
    }

    /// `min_j |x - x_j| - r_j` over balls, capped at `cap`.
    fn clearance(&self, x: &Point, cap: f64) -> f64 {
        if self.centers.is_empty() {
            return cap;
        }
        let reach = cap + self.rmax;
        let lo: Vec<i64> = x.iter().map(|v| ((v - reach) / self.cell).floor() as i64).collect();
        let hi: Vec<i64> = x.iter().map(|v| ((v + reach) / self.cell).floor() as i64).collect();
        let d = x.len();
        let mut best = cap;
        let mut idx = lo.clone();
        loop {
            if let Some(list) = self.map.get(&idx) {
                for &j in list {
                    best = best.min((x - &self.centers[j]).norm() - self.radii[j]);
                }
            }
            let mut k = 0;
            loop {
                if k == d {
                    return best;
                }
                idx[k] += 1;
                if idx[k] <= hi[k] {
                    break;
                }
                idx[k] = lo[k];
                k += 1;
            }
        }
    }
}

#[derive(PartialEq)]
struct Candidate {
    key: f64,
    cell: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key).then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy farthest-point packing of the full cells of `omega0` by disjoint
/// admissible balls, until the covered volume reaches `(1 - delta)` of the mass.
pub fn vitali_cover(omega0: &GridDensity, field: &BrenierField, opts: &SprayOptions) -> Result<SprayPlan> {
    let (epsilon, delta) = (opts.epsilon, opts.delta);
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon {epsilon} not in (0, 1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("coverage slack {delta} not in (0, 1)")));
    }
    if field.is_empty() {
        return Err(Error::EmptySupport);
    }
    let d = omega0.dimension();
    if field.dim() != d {
        return Err(Error::InvalidInput("field and shape dimensions differ".into()));
    }
    let spec = omega0.spec();
    let h = spec.cell_size;
    let mass = omega0.mass();
    let diam = field.target_diameter();
    if !(diam > 0.0) {
        return Err(Error::InvalidInput("target has zero diameter".into()));
    }
    let model = MapModel::new(field, opts.safety);
    let boundary = Boundary::new(omega0)?;
    let r_min = opts.min_radius.unwrap_or(0.25 * h);
    let omega = unit_ball_volume(d);

    let mut heap = BinaryHeap::new();
    for c in 0..spec.n_cells() {
        if omega0.value(c) >= FULL_CELL {
            let key = boundary.distance(&spec.cell_center(c));
            if key > 0.0 {
                heap.push(Candidate { key, cell: c });
            }
        }
    }
    let mut grid: Option<BallGrid> = None;
    let clearance = |grid: &Option<BallGrid>, x: &Point| {
        let b = boundary.distance(x);
        match grid {
            Some(g) => g.clearance(x, b),
            None => b,
        }
    };

    let mut balls = Vec::new();
    let mut covered = 0.0;
    let mut stall = 0usize;
    let target = (1.0 - delta) * mass;
    while covered < target {
        let Some(cand) = heap.pop() else {
            return Err(Error::Stall(stall));
        };
        let mut x = spec.cell_center(cand.cell);
        let mut dist = clearance(&grid, &x);
        if let Some(next) = heap.peek() {
            if dist < next.key {
                if dist > 0.0 {
                    heap.push(Candidate { key: dist, cell: cand.cell });
                }
                continue;
            }
        }
        // Pattern search for a locally larger empty ball.
        let mut step = 0.5 * h;
        while step > h / 64.0 {
            let mut moved = false;
            for k in 0..d {
                for s in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[k] += s * step;
                    let dy = clearance(&grid, &y);
                    if dy > dist {
                        x = y;
                        dist = dy;
                        moved = true;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        let anchor = model.anchor(&x);
        let cap = dist.min(diam * (1.0 - 1e-12));
        let r = max_radius(&model, &anchor, epsilon, diam, cap) * (1.0 - 1e-9);
        if !(r >= r_min) {
            stall += 1;
            if stall >= opts.max_stall {
                return Err(Error::Stall(stall));
            }
            continue;
        }
        stall = 0;
        let (lambda_lo, lambda_hi, d3) = model.ball_bounds(&anchor, r);
        let g = grid.get_or_insert_with(|| BallGrid::new(2.0 * r));
        g.insert(x.clone(), r);
        covered += omega * r.powi(d as i32);
        let boost = &anchor.image * (1.0 + epsilon) - &x;
        balls.push(SprayBall {
            center: x,
            radius: r,
            image: anchor.image,
            frame: anchor.frame,
            eigenvalues: anchor.eigenvalues,
            lambda_lo,
            lambda_hi,
            d3,
            boost,
        });
        // The cell may still host a smaller ball next to the new one.
        let left = clearance(&grid, &spec.cell_center(cand.cell));
        if left > 0.0 {
            heap.push(Candidate { key: left, cell: cand.cell });
        }
    }
    Ok(SprayPlan {
        epsilon,
        delta,
        balls,
        source_mass: mass,
        covered_mass: covered,
        coverage_fraction: covered / mass,
        target_diameter: diam,
        dropped: Vec::new(),
    })
}

/// Per-ball re-check of the admissibility rule on sampled points.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct AdmissibilityAudit {
    pub balls: usize,
    /// Balls failing either inequality with their stored bounds.
    pub rule_violations: Vec<usize>,
    /// Balls where a sampled Hessian eigenvalue or D3 norm leaves the stored bounds.
    pub bound_violations: Vec<usize>,
    /// Pairs of balls that intersect.
    pub overlapping_pairs: Vec<(usize, usize)>,
}

impl AdmissibilityAudit {
    pub fn passed(&self) -> bool {
        self.rule_violations.is_empty() && self.bound_violations.is_empty() && self.overlapping_pairs.is_empty()
    }
}

/// Re-audits both inequalities and ball disjointness of a plan, sampling
/// the map model on `samples_radial` shells inside each ball.
pub fn audit_plan(plan: &SprayPlan, field: &BrenierField, samples_radial: usize) -> Result<AdmissibilityAudit> {
    let mut out = AdmissibilityAudit { balls: plan.balls.len(), ..Default::default() };
    let Some(d) = plan.balls.first().map(|b| b.center.len()) else {
        return Ok(out);
    };
    let quad = crate::geometry::BallQuadrature::new(d, samples_radial.max(1))?;
    let sphere = crate::geometry::BallQuadrature::sphere_points(d, 32);
    for (i, b) in plan.balls.iter().enumerate() {
        if !radius_admissible(plan.epsilon, plan.target_diameter, b.radius, b.lambda_lo, b.lambda_hi, b.d3) {
            out.rule_violations.push(i);
        }
        if let Some(p) = &field.potential {
            let d3_const = (p.degree <= 3).then(|| p.third_derivative_norm(&b.center));
            let tol = 1e-9 * (1.0 + b.lambda_hi);
            let bad = quad.nodes.iter().chain(&sphere).any(|z| {
                let y = &b.center + Point::from_column_slice(z) * b.radius;
                let (ev, _) = sorted_eigen(&p.hessian(&y));
                ev[0] < b.lambda_lo - tol
                    || *ev.last().unwrap() > b.lambda_hi + tol
                    || d3_const.unwrap_or_else(|| p.third_derivative_norm(&y)) > b.d3 * (1.0 + 1e-6)
            });
            if bad {
                out.bound_violations.push(i);
            }
        }
    }
    let r = plan.balls.iter().map(|b| b.radius).fold(0.0, f64::max);
    let index = PointIndex::new(plan.balls.iter().map(|b| b.center.clone()).collect(), 2.0 * r);
    for (i, b) in plan.balls.iter().enumerate() {
        for j in index.within(&b.center, b.radius + r) {
            if j > i && (&plan.balls[j].center - &b.center).norm() <= b.radius + plan.balls[j].radius {
                out.overlapping_pairs.push((i, j));
            }
        }
    }
    Ok(out)
}
