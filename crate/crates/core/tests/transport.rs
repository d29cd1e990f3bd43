use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapeflow_core::geometry::{point, sample_uniform, DiscreteMeasure, GridDensity, GridSpec, Point};
use shapeflow_core::stats::linear_fit;
use shapeflow_core::transport::{
    assignment_sap, cost_matrix, estimate_brenier_field, linf_distance, plan_stability_experiment, solve_entropic,
    solve_exact, sq_dist, wasserstein_distance, EntropicOptions, FieldOptions,
};
use shapeflow_core::Error;

fn cloud(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DiscreteMeasure {
    let pts = (0..n).map(|_| Point::from_fn(d, |_, _| rng.random_range(-1.0..1.0))).collect();
    DiscreteMeasure::uniform(pts, 1.0).unwrap()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

fn brute_force(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let n = mu.len();
    let w = mu.weights()[0];
    permutations(n)
        .iter()
        .map(|p| (0..n).map(|i| w * sq_dist(&mu.points()[i], &nu.points()[p[i]])).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn identity_plan_for_equal_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mu = cloud(&mut rng, 20, 2);
    let plan = solve_exact(&mu, &mu).unwrap();
    assert_eq!(plan.permutation().unwrap(), (0..20).collect::<Vec<_>>());
    assert_eq!(plan.quadratic_cost(), 0.0);
    assert_eq!(linf_distance(&mu, &mu).unwrap(), 0.0);
}

#[test]
fn one_dimensional_monotone_matching() {
    let mu = DiscreteMeasure::uniform(vec![point(&[0.0]), point(&[1.0])], 1.0).unwrap();
    let nu = DiscreteMeasure::uniform(vec![point(&[3.0]), point(&[2.0])], 1.0).unwrap();
    let plan = solve_exact(&mu, &nu).unwrap();
    assert_eq!(plan.permutation().unwrap(), vec![1, 0]);
    assert!((plan.quadratic_cost() - 4.0).abs() < 1e-12);
}

#[test]
fn matches_brute_force_on_small_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let (mu, nu) = (cloud(&mut rng, 6, 2), cloud(&mut rng, 6, 2));
        let plan = solve_exact(&mu, &nu).unwrap();
        assert_eq!(plan.quadratic_cost(), brute_force(&mu, &nu));
    }
}

#[test]
fn mass_mismatch_and_size_guard() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mu = cloud(&mut rng, 5, 2);
    let nu = DiscreteMeasure::uniform(mu.points().to_vec(), 2.0).unwrap();
    assert!(matches!(solve_exact(&mu, &nu), Err(Error::MassMismatch { .. })));
    assert!(matches!(solve_entropic(&mu, &nu, &EntropicOptions::default()), Err(Error::MassMismatch { .. })));
    let big = DiscreteMeasure::uniform(vec![point(&[0.0]); 5000], 1.0).unwrap();
    assert!(matches!(solve_exact(&big, &big), Err(Error::SizeGuardExceeded { .. })));
}

#[test]
fn general_weights_marginals() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a: Vec<Point> = (0..7).map(|_| Point::from_fn(2, |_, _| rng.random::<f64>())).collect();
    let b: Vec<Point> = (0..4).map(|_| Point::from_fn(2, |_, _| rng.random::<f64>())).collect();
    let wa: Vec<f64> = (0..7).map(|_| rng.random_range(0.1..1.0)).collect();
    let mut wb: Vec<f64> = (0..4).map(|_| rng.random_range(0.1..1.0)).collect();
    let k = wa.iter().sum::<f64>() / wb.iter().sum::<f64>();
    wb.iter_mut().for_each(|w| *w *= k);
    let plan = solve_exact(&DiscreteMeasure::new(a, wa).unwrap(), &DiscreteMeasure::new(b, wb).unwrap()).unwrap();
    assert!(plan.marginal_error() < 1e-9);
    assert!(plan.couplings.iter().all(|c| c.mass > 0.0));
}

#[test]
fn multiscale_path_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mu, nu) = (cloud(&mut rng, 800, 2), cloud(&mut rng, 800, 2));
    let plan = solve_exact(&mu, &nu).unwrap();
    let c = cost_matrix(&mu, &nu, sq_dist);
    let perm = assignment_sap(800, &c);
    let direct: f64 = (0..800).map(|i| c[i * 800 + perm[i]]).sum::<f64>() / 800.0;
    assert!((plan.quadratic_cost() - direct).abs() < 1e-12);
}

#[test]
fn cyclical_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mu, nu) = (cloud(&mut rng, 300, 2), cloud(&mut rng, 300, 2));
    let plan = solve_exact(&mu, &nu).unwrap();
    let p = plan.permutation().unwrap();
    let (x, y) = (mu.points(), nu.points());
    for _ in 0..1000 {
        let (i, j) = (rng.random_range(0..300), rng.random_range(0..300));
        let kept = sq_dist(&x[i], &y[p[i]]) + sq_dist(&x[j], &y[p[j]]);
        let swapped = sq_dist(&x[i], &y[p[j]]) + sq_dist(&x[j], &y[p[i]]);
        assert!(kept <= swapped + 1e-12);
    }
}

#[test]
fn entropic_close_to_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mu, nu) = (cloud(&mut rng, 300, 2), cloud(&mut rng, 300, 2));
    let exact = solve_exact(&mu, &nu).unwrap().quadratic_cost();
    let (plan, rep) = solve_entropic(&mu, &nu, &EntropicOptions::default()).unwrap();
    assert!(rep.marginal_error < 1e-7);
    assert!((plan.quadratic_cost() - exact).abs() / exact < 0.01, "{} vs {exact}", plan.quadratic_cost());
}

#[test]
fn translation_distances() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let b = point(&[0.3, -0.4]);
    for n in 2..=7 {
        let mu = cloud(&mut rng, n, 2);
        let nu = mu.translated(&b);
        let dw = wasserstein_distance(&mu, &nu).unwrap();
        let bound = mu.mass().sqrt() * b.norm();
        assert!(dw <= bound + 1e-12);
        assert!((dw * dw - brute_force(&mu, &nu)).abs() < 1e-12);
        let dinf = linf_distance(&mu, &nu).unwrap();
        assert!(dinf <= b.norm() + 1e-12);
        assert!(dw <= mu.mass().sqrt() * dinf + 1e-12);
    }
}

#[test]
fn distance_symmetry_and_triangle() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let (a, b, c) = (cloud(&mut rng, 30, 2), cloud(&mut rng, 30, 2), cloud(&mut rng, 30, 2));
        let ab = wasserstein_distance(&a, &b).unwrap();
        let ba = wasserstein_distance(&b, &a).unwrap();
        let bc = wasserstein_distance(&b, &c).unwrap();
        let ac = wasserstein_distance(&a, &c).unwrap();
        assert!((ab - ba).abs() < 1e-8);
        assert!(ac <= ab + bc + 1e-8);
    }
}

fn disk_and_ellipse(n: usize) -> (DiscreteMeasure, DiscreteMeasure) {
    let spec = GridSpec::cube(2, -2.5, 2.5, 250).unwrap();
    let d = GridDensity::coverage(spec.clone(), 4, |x: &Point| x.norm_squared() < 1.0).unwrap();
    let e = GridDensity::coverage(spec, 4, |x: &Point| (x[0] / 2.0).powi(2) + (x[1] / 0.5).powi(2) < 1.0).unwrap();
    let mu = sample_uniform(&d, n, 11).unwrap();
    let mu = mu.with_mass(1.0).unwrap();
    let nu = sample_uniform(&e, n, 12).unwrap().with_mass(1.0).unwrap();
    (mu, nu)
}

#[test]
fn disk_to_ellipse_distance() {
    let (mu, nu) = disk_and_ellipse(1500);
    // Unit mass: E|T(x) - x|^2 = (1 + 1/4) / 4 for the diagonal map.
    let exact = 1.25 / 4.0;
    let dw2 = wasserstein_distance(&mu, &nu).unwrap().powi(2);
    assert!((dw2 - exact).abs() / exact < 0.03, "{dw2}");
}

#[test]
fn brenier_field_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mu = cloud(&mut rng, 400, 2);
    let b = point(&[0.5, 0.25]);
    let f = estimate_brenier_field(&mu, &mu.translated(&b), &FieldOptions::default()).unwrap();
    for i in 0..f.len() {
        assert!((&f.targets[i] - &f.sources[i] - &b).norm() < 1e-12);
        assert!((f.lambda_lo(i) - 1.0).abs() < 1e-8 && (f.lambda_hi(i) - 1.0).abs() < 1e-8);
        assert!(f.d3[i] < 1e-6);
    }

    let stretched = mu.mapped(|x| point(&[2.0 * x[0], 0.5 * x[1]])).unwrap();
    let f = estimate_brenier_field(&mu, &stretched, &FieldOptions::default()).unwrap();
    for i in 0..f.len() {
        if f.sources[i].amax() < 0.7 {
            assert!((f.jacobians[i][(0, 0)] - 2.0).abs() < 0.1 && (f.jacobians[i][(1, 1)] - 0.5).abs() < 0.025);
        }
        let j = &f.jacobians[i];
        assert!((j - j.transpose()).amax() < 1e-8);
    }
    assert!(f.monotonicity_violations(1e-6).is_empty());

    // psi = |x|^2/2 + 0.1 x1^3 is convex for x1 > -10/6; its D3 norm is 0.6.
    let pts: Vec<Point> = (0..900).map(|_| Point::from_fn(2, |_, _| rng.random_range(0.0..1.0))).collect();
    let mu = DiscreteMeasure::uniform(pts, 1.0).unwrap();
    let image = mu.mapped(|x| point(&[x[0] + 0.3 * x[0] * x[0], x[1]])).unwrap();
    let f = estimate_brenier_field(&mu, &image, &FieldOptions::default()).unwrap();
    let mut d3 = f.d3.clone();
    d3.sort_by(f64::total_cmp);
    let median = d3[d3.len() / 2];
    assert!(median > 0.3 && median < 1.2, "median D3 surrogate {median}");
}

#[test]
fn equal_volume_mean_determinant() {
    let (mu, nu) = disk_and_ellipse(1000);
    let f = estimate_brenier_field(&mu, &nu, &FieldOptions::default()).unwrap();
    let m = f.mean_det();
    assert!((0.8..=1.25).contains(&m), "{m}");
}

#[test]
fn stability_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (mu, nu) = (cloud(&mut rng, 60, 2), cloud(&mut rng, 60, 2));
    let same = plan_stability_experiment(&[mu.clone(), mu.clone()], &[nu.clone(), nu.clone()], &mu, &nu).unwrap();
    assert!(same.costs.iter().all(|c| c.abs() < 1e-9));

    let b = point(&[0.2, 0.1]);
    let ks: Vec<f64> = (1..=6).map(|k| k as f64).collect();
    let nus: Vec<DiscreteMeasure> = ks.iter().map(|k| nu.translated(&(&b / *k))).collect();
    let mus = vec![mu.clone(); ks.len()];
    let rep = plan_stability_experiment(&mus, &nus, &mu, &nu).unwrap();
    let x: Vec<f64> = ks.iter().map(|k| 1.0 / (k * k)).collect();
    let fit = linear_fit(&x, &rep.costs);
    assert!(fit.r_squared > 0.99, "{fit:?}");

    let noisy = |s: f64, rng: &mut ChaCha8Rng| {
        let pts = nu.points().iter().map(|x| x + Point::from_fn(2, |_, _| s * rng.random_range(-1.0..1.0))).collect();
        DiscreteMeasure::new(pts, nu.weights().to_vec()).unwrap()
    };
    let nus: Vec<DiscreteMeasure> = [0.1, 0.05, 0.02].iter().map(|s| noisy(*s, &mut rng)).collect();
    let rep = plan_stability_experiment(&vec![mu.clone(); 3], &nus, &mu, &nu).unwrap();
    assert!(rep.costs.windows(2).all(|w| w[1] < w[0]), "{:?}", rep.costs);
}
