use nalgebra::DMatrix;
use shapeflow_core::droplet::{geodesic_bvp, BoostedDroplet, BvpOptions, DropletGeodesic};
use shapeflow_core::error::Error;
use shapeflow_core::geometry::{point, Ball, GridDensity, GridSpec};
use shapeflow_core::interpolation::{DensityPath, PushforwardOptions};
use shapeflow_core::weak::{
    continuity_residual, mean_velocity_check, momentum_residual, refinement_study, uniform_times, weak_residuals,
    weak_star_gap, LagrangianFlow, MapInterpolant, TestFunctionBank, WeakPath,
};

fn ellipse_droplet() -> BoostedDroplet {
    BoostedDroplet::at_rest(geodesic_bvp(1.0, &[1.0, 1.0], &[2.0, 0.5], &BvpOptions::default()).unwrap())
}

fn ellipse_interpolant() -> MapInterpolant {
    let a = DMatrix::from_diagonal(&point(&[2.0, 0.5]));
    MapInterpolant::affine(Ball::new(point(&[0.0, 0.0]), 1.0).unwrap(), a, point(&[0.0, 0.0])).unwrap()
}

fn rigid(b: &[f64]) -> BoostedDroplet {
    let g = DropletGeodesic::constant(0.5, &[0.5, 0.5], 8).unwrap();
    BoostedDroplet::new(g, point(b), point(&[0.0, 0.0]), DMatrix::identity(2, 2)).unwrap()
}

#[test]
fn bank_gradients_match_differences() {
    let bank = TestFunctionBank::for_flow(&ellipse_droplet(), 42, 20, 0.1, 16).unwrap();
    assert_eq!(bank.functions.len(), 20);
    assert!(bank.gradient_check(50, 1e-6, 1) < 1e-8);
    let again = TestFunctionBank::for_flow(&ellipse_droplet(), 42, 20, 0.1, 16).unwrap();
    assert_eq!(bank, again);
}

#[test]
fn static_density_has_machine_residual() {
    let spec = GridSpec::cube(2, -1.5, 1.5, 48).unwrap();
    let disk = GridDensity::indicator(spec.clone(), |x| x.norm() <= 1.0).unwrap();
    let times = uniform_times(0.0, 1.0, 8);
    let path = DensityPath::build(&disk, &|x| x.clone(), &times, &PushforwardOptions::default()).unwrap();
    let bank = TestFunctionBank::random(3, 20, &[-1.0, -1.0], &[1.0, 1.0], spec.cell_size, times).unwrap();
    let report = weak_residuals(WeakPath::Grid(&path), &bank, false).unwrap();
    assert!(report.continuity.iter().all(|r| *r < 1e-13), "{:?}", report.continuity);
    assert!(report.momentum.iter().all(|r| *r < 1e-13));
}

#[test]
fn leaking_path_is_flagged() {
    let spec = GridSpec::cube(2, -1.5, 1.5, 48).unwrap();
    let disk = GridDensity::indicator(spec.clone(), |x| x.norm() <= 1.0).unwrap();
    let times = uniform_times(0.0, 1.0, 8);
    let mut path = DensityPath::build(&disk, &|x| x.clone(), &times, &PushforwardOptions::default()).unwrap();
    for f in path.frames.iter_mut() {
        let keep = 1.0 - 0.5 * f.t;
        f.density.values_mut().iter_mut().for_each(|v| *v *= keep);
    }
    let bank = TestFunctionBank::random(3, 20, &[-1.0, -1.0], &[1.0, 1.0], spec.cell_size, times).unwrap();
    let res = continuity_residual(WeakPath::Grid(&path), &bank).unwrap();
    let worst = res.iter().cloned().fold(0.0, f64::max);
    assert!(worst > 1e-2, "{worst}");
}

#[test]
fn mismatched_quadrature_is_rejected() {
    let spec = GridSpec::cube(2, -1.5, 1.5, 48).unwrap();
    let disk = GridDensity::indicator(spec.clone(), |x| x.norm() <= 1.0).unwrap();
    let times = uniform_times(0.0, 1.0, 8);
    let path = DensityPath::build(&disk, &|x| x.clone(), &times, &PushforwardOptions::default()).unwrap();
    let coarse = TestFunctionBank::random(3, 4, &[-1.0, -1.0], &[1.0, 1.0], 2.0 * spec.cell_size, times.clone()).unwrap();
    assert!(matches!(continuity_residual(WeakPath::Grid(&path), &coarse), Err(Error::QuadratureMismatch(_))));
    let other_times = TestFunctionBank::random(3, 4, &[-1.0, -1.0], &[1.0, 1.0], spec.cell_size, uniform_times(0.0, 1.0, 4)).unwrap();
    assert!(matches!(continuity_residual(WeakPath::Grid(&path), &other_times), Err(Error::QuadratureMismatch(_))));
    let late = TestFunctionBank::random(3, 4, &[-1.0, -1.0], &[1.0, 1.0], 0.1, uniform_times(0.0, 2.0, 4)).unwrap();
    assert!(matches!(
        continuity_residual(WeakPath::Flow(&ellipse_droplet()), &late),
        Err(Error::QuadratureMismatch(_))
    ));
}

#[test]
fn rigid_translation_is_pure_quadrature_error() {
    let flow = rigid(&[0.8, -0.3]);
    let bank = TestFunctionBank::for_flow(&flow, 5, 20, 0.1, 8).unwrap();
    let study = refinement_study(&flow, &bank, true).unwrap();
    for (c, f) in study.coarse.continuity.iter().zip(&study.fine.continuity) {
        assert!(*c < 1e-2);
        assert!(*f * 3.0 <= *c || *c < 1e-14, "{c} -> {f}");
    }
    for (c, f) in study.coarse.momentum.iter().zip(&study.fine.momentum) {
        assert!(*f * 3.0 <= *c || *c < 1e-14, "{c} -> {f}");
    }
}

#[test]
fn droplet_residuals_converge_at_second_order() {
    let flow = ellipse_droplet();
    let bank = TestFunctionBank::for_flow(&flow, 42, 20, 0.125, 16).unwrap();
    let study = refinement_study(&flow, &bank, true).unwrap();
    assert!(study.continuity_in_range >= 18, "{:?}", study.continuity_ratios);
    assert!(study.momentum_in_range >= 18, "{:?}", study.momentum_ratios);
}

#[test]
fn interpolant_solves_pressureless_system() {
    let flow = ellipse_interpolant();
    let bank = TestFunctionBank::for_flow(&flow, 42, 20, 0.125, 16).unwrap();
    let study = refinement_study(&flow, &bank, false).unwrap();
    assert!(study.continuity_in_range >= 18, "{:?}", study.continuity_ratios);
    assert!(study.momentum_in_range >= 18, "{:?}", study.momentum_ratios);
}

#[test]
fn droplet_without_pressure_fails_momentum() {
    let flow = ellipse_droplet();
    let bank = TestFunctionBank::for_flow(&flow, 42, 20, 0.0625, 32).unwrap();
    let with = momentum_residual(WeakPath::Flow(&flow), &bank, true).unwrap();
    let without = momentum_residual(WeakPath::Flow(&flow), &bank, false).unwrap();
    let (a, b) = (with.iter().sum::<f64>(), without.iter().sum::<f64>());
    assert!(b > 10.0 * a, "{a} vs {b}");
}

#[test]
fn residuals_are_linear_in_amplitude() {
    let flow = ellipse_droplet();
    let bank = TestFunctionBank::for_flow(&flow, 7, 20, 0.25, 8).unwrap();
    let one = weak_residuals(WeakPath::Flow(&flow), &bank, true).unwrap();
    let ten = weak_residuals(WeakPath::Flow(&flow), &bank.scaled(10.0), true).unwrap();
    for (a, b) in one.continuity.iter().zip(&ten.continuity).chain(one.momentum.iter().zip(&ten.momentum)) {
        assert!((b - 10.0 * a).abs() <= 1e-9 * b, "{a} {b}");
    }
}

#[test]
fn droplet_pressure_is_nonnegative() {
    let flow = ellipse_droplet();
    let labels = flow.labels(0.05).unwrap();
    for t in uniform_times(0.0, 1.0, 10) {
        for p in flow.advance(&labels, t).unwrap() {
            assert!(p.p >= -1e-10);
        }
    }
}

#[test]
fn identical_flows_have_zero_gap() {
    let drop = rigid(&[0.6, 0.2]);
    let b = point(&[0.6, 0.2]);
    let interp = MapInterpolant::new(vec![Ball::new(point(&[0.0, 0.0]), 0.5).unwrap()], move |x| x + &b).unwrap();
    let bank = TestFunctionBank::for_flow(&drop, 9, 20, 0.05, 8).unwrap();
    let gap = weak_star_gap(&drop, &interp, &bank).unwrap();
    for v in gap.rho.iter().chain(&gap.momentum).chain(&gap.stress) {
        assert!(*v < 1e-13, "{v}");
    }
    assert!(gap.particle_gap < 1e-14 && gap.sup_pressure == 0.0);
}

#[test]
fn mean_velocity_is_the_boost() {
    let g = geodesic_bvp(1.0, &[1.0, 1.0], &[2.0, 0.5], &BvpOptions::default()).unwrap();
    let th: f64 = 0.3;
    let rot = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
    let boosted = BoostedDroplet::new(g.clone(), point(&[0.5, -1.0]), point(&[2.0, 1.0]), rot).unwrap();
    let rest = BoostedDroplet::at_rest(g);
    let report = mean_velocity_check(&[rest, boosted], 0.05, 16).unwrap();
    assert!(report.passed(), "{report:?}");
    assert!(report.droplets[0].boost_error < 1e-12);
    assert!(report.droplets[1].boost_error < 1e-12);
    for d in &report.droplets {
        assert!((d.action_quadrature - d.action).abs() / d.action < 5e-3);
    }
}
