//! Command handlers. Each returns a JSON report and the names of failed audits.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use shapeflow_core::droplet::{geodesic_bvp, nesting_check, BoostedDroplet, BvpOptions, DropletGeodesic};
use shapeflow_core::geometry::{sample_uniform, Ball, DiscreteMeasure, GridDensity, GridSpec, Point};
use shapeflow_core::interpolation::{pushforward_density, DensityPath, PushforwardOptions};
use shapeflow_core::io::{read_grid, read_json, read_measure, read_values, write_grid, write_json, write_plan};
use shapeflow_core::render::{render_droplet_figure, render_spray_figure};
use shapeflow_core::spray::{certify_injectivity, spray_action_audit, spray_pipeline, EulerSpray, SprayOptions};
use shapeflow_core::tlp::{
    base_distance, constraint_residual, minimality_probe, relaxed_action, tlp_distance, ProbeOptions, RelaxedState,
    TLpPair, TlpOrder,
};
use shapeflow_core::transport::{
    estimate_potential_field, fit_field_potential, solve_entropic, solve_exact, BrenierField, EntropicOptions,
    FieldOptions,
};
use shapeflow_core::weak::{
    compare_refinement, uniform_times, weak_residuals, LagrangianFlow, MapInterpolant, TestFunctionBank, WeakPath,
};
use shapeflow_core::{Error, Result};

use crate::config::{OtMethod, RunConfig};
use crate::{
    DropletCommand, InterpArgs, MethodArg, OtCommand, PipelineArgs, RelaxedCommand, RenderCommand, ShapeArgs,
    ShapeKind, SprayCommand, TlpCommand, VerifyCommand,
};

/// Ratio of refinement ratios that must land in range, as in the acceptance
/// bar of 18 functions out of 20.
const REFINE_PASS_FRACTION: f64 = 0.9;
/// Probes may lower the action by at most this much.
const PROBE_TOL: f64 = 1e-4;
/// Labels per ball radius for the spray action quadrature.
const AUDIT_RADIAL: usize = 3;

pub struct Ctx {
    pub cfg: RunConfig,
}

#[derive(Default)]
pub struct Outcome {
    pub report: Map<String, Value>,
    pub failed: Vec<String>,
}

impl Outcome {
    fn put(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.report.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    fn check(&mut self, name: &str, ok: bool) {
        if !ok {
            self.failed.push(name.to_string());
        }
    }
}

impl Ctx {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        Ok(Self { cfg })
    }

    /// Output path: relative paths go under the output directory, which is
    /// created on demand.
    fn out(&self, p: &Path) -> Result<PathBuf> {
        let full = if p.is_absolute() { p.to_path_buf() } else { self.cfg.out_dir.join(p) };
        if let Some(dir) = full.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        Ok(full)
    }
}

/// Serialized spray with the field it approximates, in recentered coordinates.
#[derive(Serialize, Deserialize)]
pub struct SprayFile {
    pub epsilon: f64,
    pub delta: f64,
    /// Translation applied to source and target by recentering.
    pub translation: Vec<f64>,
    pub spray: EulerSpray,
    pub field: BrenierField,
}

pub fn shape(ctx: &Ctx, a: ShapeArgs) -> Result<Outcome> {
    let d = a.axes.len();
    if !(1..=3).contains(&d) || a.axes.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidInput("axes must be 1 to 3 positive numbers".into()));
    }
    let center = a.center.unwrap_or_else(|| vec![0.0; d]);
    if center.len() != d {
        return Err(Error::InvalidInput("center and axes differ in length".into()));
    }
    let n = a.resolution.unwrap_or(ctx.cfg.grid.resolution);
    let longest = a.axes.iter().copied().fold(0.0, f64::max);
    let h = 2.2 * longest / n as f64;
    let dims: Vec<usize> = a.axes.iter().map(|ax| (2.2 * ax / h).ceil() as usize).collect();
    let origin: Vec<f64> = center.iter().zip(&dims).map(|(c, k)| c - 0.5 * *k as f64 * h).collect();
    let spec = GridSpec::new(origin, h, dims.clone())?;
    let rho = match a.kind {
        ShapeKind::Ellipse => GridDensity::indicator(spec, |x| {
            (0..d).map(|i| ((x[i] - center[i]) / a.axes[i]).powi(2)).sum::<f64>() <= 1.0
        })?,
        ShapeKind::Box => GridDensity::indicator(spec, |x| (0..d).all(|i| (x[i] - center[i]).abs() <= a.axes[i]))?,
    };
    write_grid(&ctx.out(&a.out)?, &rho)?;
    let mut o = Outcome::default();
    o.put("dims", dims)?;
    o.put("cell_size", h)?;
    o.put("mass", rho.mass())?;
    Ok(o)
}

/// Reads two shapes and rejects masses differing by more than the tolerance.
fn read_shape_pair(cfg: &RunConfig, source: &Path, target: &Path) -> Result<(GridDensity, GridDensity)> {
    let (rho0, rho1) = (read_grid(source)?, read_grid(target)?);
    let (m0, m1) = (rho0.mass(), rho1.mass());
    if m0 <= 0.0 || m1 <= 0.0 {
        return Err(Error::ZeroMass);
    }
    if (m0 - m1).abs() > cfg.ot.mass_tolerance * m0.max(m1) {
        return Err(Error::MassMismatch { left: m0, right: m1 });
    }
    Ok((rho0, rho1))
}

/// Samples both shapes, rescales the target samples to the source mass and
/// fits the map as the gradient of a polynomial potential.
fn fit_shape_field(cfg: &RunConfig, rho0: &GridDensity, rho1: &GridDensity) -> Result<BrenierField> {
    let mu = sample_uniform(rho0, cfg.ot.samples, cfg.seed)?;
    let nu = sample_uniform(rho1, cfg.ot.samples, cfg.seed.wrapping_add(1))?.with_mass(mu.mass())?;
    match cfg.ot.method {
        OtMethod::Exact => estimate_potential_field(&mu, &nu, cfg.ot.degree, &FieldOptions::default()),
        OtMethod::Entropic => {
            let (plan, _) = solve_entropic(&mu, &nu, &EntropicOptions::default())?;
            let targets = plan.barycentric_map();
            fit_field_potential(mu.points().to_vec(), targets, mu.weights().to_vec(), cfg.ot.degree, &FieldOptions::default())
        }
    }
}

pub fn ot(ctx: &Ctx, c: OtCommand) -> Result<Outcome> {
    let mut o = Outcome::default();
    match c {
        OtCommand::Solve { source, target, method, out } => {
            let (mu, nu) = (read_measure(&source)?, read_measure(&target)?);
            let method = match method {
                Some(MethodArg::Exact) => OtMethod::Exact,
                Some(MethodArg::Entropic) => OtMethod::Entropic,
                None => ctx.cfg.ot.method,
            };
            let plan = match method {
                OtMethod::Exact => solve_exact(&mu, &nu)?,
                OtMethod::Entropic => {
                    let (plan, rep) = solve_entropic(&mu, &nu, &EntropicOptions::default())?;
                    o.put("entropic", rep)?;
                    plan
                }
            };
            write_plan(&ctx.out(&out)?, &plan)?;
            o.put("method", if method == OtMethod::Exact { "exact" } else { "entropic" })?;
            o.put("total_cost", plan.quadratic_cost())?;
            o.put("couplings", plan.couplings.len())?;
            o.put("marginal_error", plan.marginal_error())?;
        }
        OtCommand::Field { source, target, out } => {
            let (rho0, rho1) = read_shape_pair(&ctx.cfg, &source, &target)?;
            let field = fit_shape_field(&ctx.cfg, &rho0, &rho1)?;
            write_json(&ctx.out(&out)?, &field)?;
            o.put("samples", field.sources.len())?;
            o.put("potential_degree", field.potential.as_ref().map(|p| p.degree))?;
        }
    }
    Ok(o)
}

/// Grid with the source's cell size covering the source grid and every
/// sampled target.
fn covering_spec(rho0: &GridDensity, field: &BrenierField) -> Result<GridSpec> {
    let spec = rho0.spec();
    let h = spec.cell_size;
    let d = spec.dimension();
    let mut lo = spec.origin.clone();
    let mut hi: Vec<f64> = (0..d).map(|i| spec.origin[i] + spec.dims[i] as f64 * h).collect();
    for y in &field.targets {
        for i in 0..d {
            lo[i] = lo[i].min(y[i] - 2.0 * h);
            hi[i] = hi[i].max(y[i] + 2.0 * h);
        }
    }
    // Keep the source cells aligned with the new grid.
    let origin: Vec<f64> = (0..d).map(|i| spec.origin[i] - ((spec.origin[i] - lo[i]) / h).ceil() * h).collect();
    let dims = (0..d).map(|i| ((hi[i] - origin[i]) / h).ceil() as usize).collect();
    GridSpec::new(origin, h, dims)
}

pub fn interp(ctx: &Ctx, a: InterpArgs) -> Result<Outcome> {
    if !(0.0..=1.0).contains(&a.t) {
        return Err(Error::InvalidInput(format!("t = {} outside [0, 1]", a.t)));
    }
    let field: BrenierField = read_json(&a.field)?;
    let rho0 = read_grid(&a.source)?;
    let opts = PushforwardOptions { grid: Some(covering_spec(&rho0, &field)?), ..Default::default() };
    let rho_t = pushforward_density(&field, &rho0, a.t, &opts)?;
    write_grid(&ctx.out(&a.out)?, &rho_t)?;
    let mut o = Outcome::default();
    o.put("t", a.t)?;
    o.put("mass", rho_t.mass())?;
    o.put("mass_drift", (rho_t.mass() - rho0.mass()).abs() / rho0.mass())?;
    o.put("max_density", rho_t.max_value())?;
    Ok(o)
}

pub fn droplet(ctx: &Ctx, c: DropletCommand) -> Result<Outcome> {
    let DropletCommand::Bvp { r, a0, a1, out } = c;
    let g = geodesic_bvp(r, &a0, &a1, &BvpOptions::default())?;
    let action = shapeflow_core::droplet::droplet_action(&g);
    let endpoint_error = g.end().iter().zip(&a1).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let nesting = nesting_check(&g)?;
    let mut file = serde_json::to_value(&g)?;
    file["action"] = json!(action);
    write_json(&ctx.out(&out)?, &file)?;
    let mut o = Outcome::default();
    o.put("action", action)?;
    o.put("c", g.c)?;
    o.put("t_end", g.t_end())?;
    o.put("endpoint_error", endpoint_error)?;
    o.put("volume_drift", g.volume_drift())?;
    o.put("speed_drift", g.speed_drift())?;
    o.put("nesting", &nesting)?;
    o.check("nesting", nesting.passed());
    Ok(o)
}

fn spray_options(cfg: &RunConfig, epsilon: Option<f64>, delta: Option<f64>) -> Result<SprayOptions> {
    let opts = SprayOptions {
        epsilon: epsilon.unwrap_or(cfg.spray.epsilon),
        delta: delta.unwrap_or(cfg.spray.delta),
        ..Default::default()
    };
    if !(opts.epsilon > 0.0 && opts.epsilon <= 1.0 && opts.delta > 0.0 && opts.delta < 1.0) {
        return Err(Error::InvalidInput("epsilon must be in (0, 1] and delta in (0, 1)".into()));
    }
    Ok(opts)
}

fn build_spray_file(cfg: &RunConfig, source: &Path, target: &Path, opts: &SprayOptions) -> Result<(SprayFile, bool)> {
    let (rho0, rho1) = read_shape_pair(cfg, source, target)?;
    let mut field = fit_shape_field(cfg, &rho0, &rho1)?;
    let (spray, recenter, _) = spray_pipeline(&rho0, &mut field, opts)?;
    let file = SprayFile {
        epsilon: opts.epsilon,
        delta: opts.delta,
        translation: recenter.translation.iter().copied().collect(),
        spray,
        field,
    };
    Ok((file, recenter.passed))
}

fn spray_summary(o: &mut Outcome, f: &SprayFile) -> Result<()> {
    o.put("epsilon", f.epsilon)?;
    o.put("delta", f.delta)?;
    o.put("droplets", f.spray.len())?;
    o.put("dropped", f.spray.plan.dropped.len())?;
    o.put("coverage_fraction", f.spray.plan.coverage_fraction)?;
    o.put("total_action", f.spray.total_action)?;
    o.put("translation", &f.translation)
}

/// Coverage, injectivity and action audits; appends to `o`.
fn audit_spray(o: &mut Outcome, f: &SprayFile, time_samples: usize) -> Result<()> {
    if time_samples < 2 {
        return Err(Error::InvalidInput("need at least 2 time samples".into()));
    }
    let times: Vec<f64> = (0..time_samples).map(|k| k as f64 / (time_samples - 1) as f64).collect();
    let coverage_ok = f.spray.plan.coverage_fraction >= 1.0 - f.delta;
    o.put("coverage_ok", coverage_ok)?;
    o.check("coverage", coverage_ok);
    let inj = certify_injectivity(&f.spray, &times)?;
    o.put(
        "injectivity",
        json!({
            "time_samples": time_samples,
            "pairs_checked": inj.pairs_checked,
            "analytic_violations": inj.analytic_violations.len(),
            "geometric_violations": inj.geometric_violations.len(),
            "nesting_violations": inj.nesting_violations.len(),
            "min_analytic_margin": inj.min_analytic_margin,
            "min_geometric_gap": inj.min_geometric_gap,
        }),
    )?;
    o.check("injectivity", inj.passed());
    let action = spray_action_audit(&f.spray, &f.field, AUDIT_RADIAL)?;
    o.check("action", action.action_ok);
    o.check("per_droplet_action", action.per_droplet_violations.is_empty());
    o.check("taylor", action.taylor_violations.is_empty());
    o.check("bottleneck", action.dinf_ok);
    o.put("action", &action)
}

pub fn spray(ctx: &Ctx, c: SprayCommand) -> Result<Outcome> {
    let mut o = Outcome::default();
    match c {
        SprayCommand::Build { source, target, epsilon, delta, out } => {
            let opts = spray_options(&ctx.cfg, epsilon, delta)?;
            let (file, recentered) = build_spray_file(&ctx.cfg, &source, &target, &opts)?;
            write_json(&ctx.out(&out)?, &file)?;
            spray_summary(&mut o, &file)?;
            o.put("recenter_ok", recentered)?;
            o.check("recenter", recentered);
        }
        SprayCommand::Audit { spray, time_samples } => {
            let file: SprayFile = read_json(&spray)?;
            spray_summary(&mut o, &file)?;
            audit_spray(&mut o, &file, time_samples)?;
        }
    }
    Ok(o)
}

/// Flow description for weak-form verification.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum PathSpec {
    /// A droplet geodesic (as written by `droplet bvp`) moved by `boost`.
    Droplet {
        geodesic: DropletGeodesic,
        boost: Vec<f64>,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// Displacement interpolant of `x -> matrix x + translation` on a ball,
    /// checked against the pressureless system.
    Affine { center: Vec<f64>, radius: f64, matrix: Vec<Vec<f64>>, translation: Vec<f64> },
    /// A spray file, relative to the path file.
    Spray { spray: PathBuf },
}

fn parse_bank(s: &str) -> Result<(u64, usize)> {
    let (mut seed, mut count) = (None, None);
    for part in s.split(',') {
        let (k, v) = part.split_once(':').ok_or_else(|| Error::InvalidInput(format!("bad bank item {part:?}")))?;
        let bad = |_| Error::InvalidInput(format!("bad bank value {v:?}"));
        match k.trim() {
            "seed" => seed = Some(v.trim().parse::<u64>().map_err(bad)?),
            "count" => count = Some(v.trim().parse::<usize>().map_err(bad)?),
            other => return Err(Error::InvalidInput(format!("unknown bank key {other:?}"))),
        }
    }
    match (seed, count) {
        (Some(s), Some(c)) if c > 0 => Ok((s, c)),
        _ => Err(Error::InvalidInput("bank needs seed:N,count:M with M > 0".into())),
    }
}

fn point_of(v: &[f64]) -> Point {
    Point::from_column_slice(v)
}

pub fn verify(_ctx: &Ctx, c: VerifyCommand) -> Result<Outcome> {
    let VerifyCommand::WeakEuler { path, bank, refine, h, steps } = c;
    if refine < 2 {
        return Err(Error::InvalidInput("--refine needs at least 2 resolutions".into()));
    }
    let (seed, count) = parse_bank(&bank)?;
    let spec: PathSpec = read_json(&path)?;
    let (flow, with_pressure, kind): (Box<dyn LagrangianFlow>, bool, &str) = match spec {
        PathSpec::Droplet { geodesic, boost, center } => {
            let d = geodesic.dim();
            let center = center.unwrap_or_else(|| vec![0.0; d]);
            let dr = BoostedDroplet::new(geodesic, point_of(&boost), point_of(&center), DMatrix::identity(d, d))?;
            (Box::new(dr), true, "droplet")
        }
        PathSpec::Affine { center, radius, matrix, translation } => {
            let d = center.len();
            if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
                return Err(Error::InvalidInput("matrix must be d x d".into()));
            }
            let a = DMatrix::from_fn(d, d, |i, j| matrix[i][j]);
            let flow = MapInterpolant::affine(Ball::new(point_of(&center), radius)?, a, point_of(&translation))?;
            (Box::new(flow), false, "affine")
        }
        PathSpec::Spray { spray } => {
            let file = path.parent().map_or(spray.clone(), |dir| dir.join(&spray));
            let f: SprayFile = read_json(&file)?;
            (Box::new(f.spray), true, "spray")
        }
    };
    let mut bank = TestFunctionBank::for_flow(flow.as_ref(), seed, count, h, steps)?;
    let mut levels = vec![weak_residuals(WeakPath::Flow(flow.as_ref()), &bank, with_pressure)?];
    for _ in 1..refine {
        bank = bank.refined();
        levels.push(weak_residuals(WeakPath::Flow(flow.as_ref()), &bank, with_pressure)?);
    }
    let need = (REFINE_PASS_FRACTION * count as f64).ceil() as usize;
    let mut o = Outcome::default();
    let mut halvings = Vec::new();
    for (k, w) in levels.windows(2).enumerate() {
        let cmp = compare_refinement(w[0].clone(), w[1].clone());
        o.check(&format!("continuity_halving_{k}"), cmp.continuity_in_range >= need);
        o.check(&format!("momentum_halving_{k}"), cmp.momentum_in_range >= need);
        halvings.push(json!({
            "continuity_ratios": cmp.continuity_ratios,
            "momentum_ratios": cmp.momentum_ratios,
            "continuity_in_range": cmp.continuity_in_range,
            "momentum_in_range": cmp.momentum_in_range,
        }));
    }
    o.put("kind", kind)?;
    o.put("with_pressure", with_pressure)?;
    o.put("bank", json!({ "seed": seed, "count": count }))?;
    o.put("required_in_range", need)?;
    o.put("levels", &levels)?;
    o.put("halvings", halvings)?;
    Ok(o)
}

fn read_pair(spec: &str) -> Result<TLpPair> {
    let (pts, vals) = spec
        .split_once(':')
        .ok_or_else(|| Error::InvalidInput(format!("expected points.csv:values.csv, got {spec:?}")))?;
    let measure: DiscreteMeasure = read_measure(Path::new(pts))?;
    TLpPair::new(measure, read_values(Path::new(vals))?)
}

pub fn tlp(_ctx: &Ctx, c: TlpCommand) -> Result<Outcome> {
    let TlpCommand::Dist { a, b, p } = c;
    let p: TlpOrder = p.parse()?;
    let (a, b) = (read_pair(&a)?, read_pair(&b)?);
    let mut o = Outcome::default();
    o.put("p", p.to_string())?;
    o.put("distance", tlp_distance(&a, &b, p)?)?;
    o.put("base_distance", base_distance(&a, &b, p)?)?;
    Ok(o)
}

/// Box of cells where the second fluid is present in some frame, padded by
/// two cells and kept one cell inside the grid.
fn support_box(state: &RelaxedState) -> (Vec<f64>, Vec<f64>) {
    let spec = &state.spec;
    let d = spec.dimension();
    let h = spec.cell_size;
    let (mut lo, mut hi) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
    for frame in &state.c[1] {
        for (cell, v) in frame.iter().enumerate() {
            if *v > 0.0 {
                let x = spec.cell_center(cell);
                for i in 0..d {
                    lo[i] = lo[i].min(x[i]);
                    hi[i] = hi[i].max(x[i]);
                }
            }
        }
    }
    for i in 0..d {
        let (g0, g1) = (spec.origin[i] + h, spec.origin[i] + (spec.dims[i] as f64 - 1.0) * h);
        lo[i] = (lo[i] - 2.0 * h).clamp(g0, g1);
        hi[i] = (hi[i] + 2.0 * h).clamp(g0, g1);
    }
    (lo, hi)
}

pub fn relaxed(ctx: &Ctx, c: RelaxedCommand) -> Result<Outcome> {
    let mut o = Outcome::default();
    match c {
        RelaxedCommand::Sample { field, source, steps, supersample, out } => {
            if steps == 0 || supersample == 0 {
                return Err(Error::InvalidInput("steps and supersample must be positive".into()));
            }
            let field: BrenierField = read_json(&field)?;
            let rho0 = read_grid(&source)?;
            let opts = PushforwardOptions { grid: Some(covering_spec(&rho0, &field)?), supersample };
            let path = DensityPath::from_field(&field, &rho0, &uniform_times(0.0, 1.0, steps), &opts)?;
            let state = RelaxedState::from_path(&path)?;
            write_json(&ctx.out(&out)?, &state)?;
            o.put("frames", state.times.len())?;
            o.put("cells", state.spec.n_cells())?;
            o.put("action", relaxed_action(&state).value)?;
        }
        RelaxedCommand::Audit { state, probes, seed, amplitude } => {
            let state: RelaxedState = read_json(&state)?;
            state.validate()?;
            let seed = seed.unwrap_or(ctx.cfg.seed);
            let action = relaxed_action(&state);
            let (lo, hi) = support_box(&state);
            let bank = TestFunctionBank::random(seed, 20, &lo, &hi, state.spec.cell_size, state.times.clone())?;
            let constraint = constraint_residual(&state, &bank)?;
            o.put("action", &action)?;
            o.put("constraint_max", constraint.max_total())?;
            o.put("sum_error", state.sum_error())?;
            o.check("finite_action", !action.infinite_action);
            if !action.infinite_action {
                let opts = ProbeOptions { count: probes, amplitude, seed, ..Default::default() };
                let rep = minimality_probe(&state, &opts)?;
                o.check("probes", rep.passed(probes, PROBE_TOL));
                o.put("probes", &rep)?;
            }
        }
    }
    Ok(o)
}

pub fn render(ctx: &Ctx, c: RenderCommand) -> Result<Outcome> {
    let mut o = Outcome::default();
    let (svg, out) = match c {
        RenderCommand::Spray { spray, times, out } => {
            let f: SprayFile = read_json(&spray)?;
            o.put("droplets", f.spray.len())?;
            o.put("panels", times.len())?;
            (render_spray_figure(&f.spray, &times)?, out)
        }
        RenderCommand::Droplet { geodesic, boost, out } => {
            let g: DropletGeodesic = read_json(&geodesic)?;
            (render_droplet_figure(&g, &point_of(&boost))?, out)
        }
    };
    let path = ctx.out(&out)?;
    fs::write(&path, &svg)?;
    o.put("bytes", svg.len())?;
    Ok(o)
}

pub fn pipeline(ctx: &Ctx, a: PipelineArgs) -> Result<Outcome> {
    let opts = spray_options(&ctx.cfg, a.epsilon, a.delta)?;
    let (file, recentered) = build_spray_file(&ctx.cfg, &a.source, &a.target, &opts)?;
    let mut o = Outcome::default();
    spray_summary(&mut o, &file)?;
    o.put("recenter_ok", recentered)?;
    o.check("recenter", recentered);
    audit_spray(&mut o, &file, shapeflow_core::spray::DEFAULT_TIME_SAMPLES)?;

    write_json(&ctx.out(Path::new("field.json"))?, &file.field)?;
    write_json(&ctx.out(Path::new("spray.json"))?, &file)?;
    fs::write(ctx.out(Path::new("spray.svg"))?, render_spray_figure(&file.spray, &[0.0, 0.5, 1.0])?)?;
    let mut artifacts = vec!["field.json", "spray.json", "spray.svg", "report.json"];
    // The droplet with the largest action is the most deformed one.
    let largest = (0..file.spray.len()).max_by(|&i, &j| {
        file.spray.droplets[i].action().total_cmp(&file.spray.droplets[j].action())
    });
    if let Some(k) = largest {
        let dr = &file.spray.droplets[k];
        if dr.dim() == 2 {
            fs::write(ctx.out(Path::new("droplet.svg"))?, render_droplet_figure(&dr.geodesic, &dr.boost)?)?;
            artifacts.push("droplet.svg");
        }
    }
    o.put("artifacts", artifacts)?;
    o.put("failed", &o.failed.clone())?;
    write_json(&ctx.out(Path::new("report.json"))?, &o.report)?;
    Ok(o)
}
