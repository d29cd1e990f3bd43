use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapeflow_core::geometry::{point, sample_uniform, GridDensity, GridSpec, Point};
use shapeflow_core::interpolation::{
    geodesic_property_check, interpolate_position, monotone_map_1d, pushforward_density, pushforward_with,
    DensityPath, ParticlePathSample, PushforwardOptions,
};
use shapeflow_core::transport::{estimate_potential_field, BrenierField, FieldOptions};

fn disk(n: usize) -> GridDensity {
    let spec = GridSpec::cube(2, -2.5, 2.5, n).unwrap();
    GridDensity::coverage(spec, 4, |x: &Point| x[0] * x[0] + x[1] * x[1] < 1.0).unwrap()
}

fn ellipse(n: usize) -> GridDensity {
    let spec = GridSpec::cube(2, -2.5, 2.5, n).unwrap();
    GridDensity::coverage(spec, 4, |x: &Point| (x[0] / 2.0).powi(2) + (x[1] / 0.5).powi(2) < 1.0).unwrap()
}

fn disk_field(n: usize) -> BrenierField {
    let mu = sample_uniform(&disk(200), n, 1).unwrap();
    let nu = sample_uniform(&ellipse(200), n, 2).unwrap().with_mass(mu.mass()).unwrap();
    estimate_potential_field(&mu, &nu, 3, &FieldOptions::default()).unwrap()
}

#[test]
fn positions_and_separation() {
    let field = disk_field(400);
    let i = 7;
    assert_eq!(interpolate_position(&field, i, 0.0).unwrap(), field.sources[i]);
    assert_eq!(interpolate_position(&field, i, 1.0).unwrap(), field.targets[i]);
    let s = ParticlePathSample::from_field(&field, i);
    assert_eq!(s.velocity, &field.targets[i] - &field.sources[i]);
    assert!(s.density(0.5) > 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let (a, b) = (rng.random_range(0..field.len()), rng.random_range(0..field.len()));
        let t = rng.random_range(0.0..1.0);
        let gap = (field.interpolate(a, t) - field.interpolate(b, t)).norm();
        let z = (&field.sources[a] - &field.sources[b]).norm();
        assert!(gap >= (1.0 - t) * z - 1e-12);
    }
}

#[test]
fn diagonal_map_half_time_density() {
    let rho0 = disk(256);
    let map = |x: &Point| point(&[2.0 * x[0], 0.5 * x[1]]);
    let rho = pushforward_with(&rho0, &map, 0.5, &PushforwardOptions::default()).unwrap();
    assert!((rho.mass() - rho0.mass()).abs() < 1e-6 * rho0.mass());
    let spec = rho.spec().clone();
    let h = spec.cell_size;
    let mut checked = 0;
    for c in 0..spec.n_cells() {
        let x = spec.cell_center(c);
        // Cells at least two cells inside the interpolated ellipse E_(3/2, 3/4).
        let q = (x[0] / (1.5 - 2.0 * h)).powi(2) + (x[1] / (0.75 - 2.0 * h)).powi(2);
        if q < 1.0 {
            checked += 1;
            let v = rho.values()[c];
            assert!((v - 8.0 / 9.0).abs() < 0.05 * 8.0 / 9.0, "cell {c}: {v}");
        }
    }
    assert!(checked > 1000);
}

#[test]
fn estimated_field_half_time_density() {
    let field = disk_field(2000);
    let rho0 = disk(128);
    let rho = pushforward_density(&field, &rho0, 0.5, &PushforwardOptions::default()).unwrap();
    assert!((rho.mass() - rho0.mass()).abs() < 1e-6 * rho0.mass());
    let spec = rho.spec().clone();
    let h = spec.cell_size;
    for c in 0..spec.n_cells() {
        let x = spec.cell_center(c);
        let q = (x[0] / (1.5 - 3.0 * h)).powi(2) + (x[1] / (0.75 - 3.0 * h)).powi(2);
        if q < 1.0 {
            let v = rho.values()[c];
            assert!((v - 8.0 / 9.0).abs() < 0.05 * 8.0 / 9.0, "cell {c}: {v}");
        }
    }
}

#[test]
fn identity_and_translation() {
    let rho0 = disk(128);
    let h = rho0.spec().cell_size;
    let id = pushforward_with(&rho0, &|x: &Point| x.clone(), 0.0, &PushforwardOptions::default()).unwrap();
    let perimeter = 2.0 * std::f64::consts::PI;
    let gap = id.l1_distance(&rho0).unwrap();
    assert!(gap < 2.0 * h * perimeter, "L1 gap {gap}");

    let b = point(&[0.5, -0.25]);
    let moved = pushforward_with(&rho0, &|x: &Point| x + &b, 1.0, &PushforwardOptions::default()).unwrap();
    let shifted = GridDensity::coverage(rho0.spec().clone(), 4, |x: &Point| {
        (x[0] - 0.5).powi(2) + (x[1] + 0.25).powi(2) < 1.0
    })
    .unwrap();
    assert!(moved.l1_distance(&shifted).unwrap() < 2.0 * h * perimeter);
}

#[test]
fn path_conserves_mass_and_action() {
    let rho0 = disk(128);
    let map = |x: &Point| point(&[2.0 * x[0], 0.5 * x[1]]);
    let times: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
    let path = DensityPath::build(&rho0, &map, &times, &PushforwardOptions::default()).unwrap();
    let diag = path.diagnostics();
    assert!(diag.mass_drift < 1e-6);
    // Kinetic energy of the linear map on the unit disk: (pi/4)(1 + 1/4).
    let exact = std::f64::consts::PI / 4.0 * 1.25;
    assert!((path.action - exact).abs() / exact < 0.02, "{}", path.action);
}

#[test]
fn geodesic_profile() {
    let field = disk_field(500);
    let rep = geodesic_property_check(&field, &[0.25, 0.75], 0.03).unwrap();
    assert!(rep.passed(), "{rep:?}");
    let rep = geodesic_property_check(&field, &[0.0, 1.0], 0.03).unwrap();
    assert!((rep.pairs[0].2 - 1.0).abs() < 1e-12);
}

#[test]
fn one_dimensional_characteristic_functions_stay_binary() {
    let spec = GridSpec::cube(1, 0.0, 10.0, 1000).unwrap();
    let rho0 = GridDensity::indicator(spec.clone(), |x| (x[0] > 1.0 && x[0] < 2.5) || (x[0] > 4.0 && x[0] < 5.0)).unwrap();
    let rho1 = GridDensity::indicator(spec, |x| {
        (x[0] > 5.5 && x[0] < 6.0) || (x[0] > 6.5 && x[0] < 7.5) || (x[0] > 8.0 && x[0] < 9.0)
    })
    .unwrap();
    let t = monotone_map_1d(&rho0, &rho1).unwrap();
    let times: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let path = DensityPath::build(&rho0, &|x: &Point| point(&[t(x[0])]), &times, &PushforwardOptions::default()).unwrap();
    for f in &path.frames {
        let smeared = f.density.values().iter().filter(|v| **v > 1e-9 && **v < 1.0 - 1e-9).count();
        // Four pieces with two ends each, two cells of smear per end.
        assert!(smeared <= 16, "t={} smeared={smeared}", f.t);
        assert!(f.density.values().iter().all(|v| *v <= 1.0 + 1e-9));
    }
}
