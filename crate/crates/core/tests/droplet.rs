use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapeflow_core::droplet::{
    action_bound_check, bound_check, droplet_action, geodesic_bvp, geodesic_ivp, nesting_check, quadrature_action,
    BvpOptions, DropletGeodesic,
};
use std::f64::consts::PI;

fn disk_to_ellipse() -> DropletGeodesic {
    geodesic_bvp(1.0, &[1.0, 1.0], &[2.0, 0.5], &BvpOptions::default()).unwrap()
}

fn hyperbola_length(a0: f64, a1: f64, n: usize) -> f64 {
    let pt = |k: usize| {
        let a = a0 + (a1 - a0) * k as f64 / n as f64;
        (a, 1.0 / a)
    };
    (0..n)
        .map(|k| {
            let (p, q) = (pt(k), pt(k + 1));
            ((q.0 - p.0).powi(2) + (q.1 - p.1).powi(2)).sqrt()
        })
        .sum()
}

#[test]
fn bvp_disk_to_ellipse() {
    let g = disk_to_ellipse();
    let end = g.end();
    assert!((end[0] - 2.0).abs() < 1e-8 && (end[1] - 0.5).abs() < 1e-8, "{end:?}");
    let len = hyperbola_length(1.0, 2.0, 100_000);
    assert!((g.c - len).abs() / len < 1e-3, "c {} vs length {len}", g.c);
    assert!(g.volume_drift() < 1e-9);
    assert!(g.speed_drift() < 1e-8);
    for k in 1..g.times.len() - 1 {
        assert!(g.state(k).addot().iter().all(|v| *v > 0.0));
    }
    let dens = g.action_density();
    let expected = PI * g.c * g.c / 4.0;
    for v in dens {
        assert!((v - expected).abs() < 1e-6);
    }
    assert!((droplet_action(&g) - expected).abs() < 1e-12);
}

#[test]
fn planar_closed_forms() {
    let g = geodesic_ivp(1.3, &[1.3, 1.3], &[0.9, -0.9], 1.0).unwrap();
    let c = g.c;
    for k in 0..g.times.len() {
        let s = g.state(k);
        let (a, b) = (s.a[0], s.a[1]);
        let rate = c / (a * a + b * b).sqrt();
        assert!((s.adot[0] / a - rate).abs() < 1e-7);
        assert!((-s.adot[1] / b - rate).abs() < 1e-7);
        let bd = (c * a * b / (a * a + b * b)).powi(2);
        assert!((s.beta_dot - bd).abs() < 1e-7);
    }
}

#[test]
fn field_examples_and_bernoulli() {
    let g = disk_to_ellipse();
    let s = g.state_at(0.37).unwrap();
    let (_, v, p) = s.fields(&[0.0, 0.0]);
    assert_eq!(v, vec![0.0, 0.0]);
    assert_eq!(p, s.beta_dot);
    let (_, _, pb) = s.fields(&[s.a[0], 0.0]);
    assert_eq!(pb, 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c2 = g.c * g.c;
    let dt = 1e-5;
    for _ in 0..100 {
        let t = rng.random_range(0.05..0.95);
        let s = g.state_at(t).unwrap();
        let (rad, th) = (rng.random_range(0.0..0.95f64).sqrt(), rng.random_range(0.0..2.0 * PI));
        let x = [rad * th.cos() * s.a[0], rad * th.sin() * s.a[1]];
        let (_, v, p) = s.fields(&x);
        let (fp, _, _) = g.fields(&x, t + dt).unwrap();
        let (fm, _, _) = g.fields(&x, t - dt).unwrap();
        let res = (fp - fm) / (2.0 * dt) + 0.5 * (v[0] * v[0] + v[1] * v[1]) + p;
        assert!(res.abs() < 1e-6 * c2, "{res}");
    }
}

#[test]
fn action_formula_and_quadrature() {
    let g = geodesic_ivp(1.0, &[1.0, 1.0], &[1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()], 1.0).unwrap();
    assert!((droplet_action(&g) - PI / 4.0).abs() < 1e-12);
    let g = disk_to_ellipse();
    let q = quadrature_action(&g, 24).unwrap();
    let a = droplet_action(&g);
    assert!((q - a).abs() / a < 5e-3, "{q} vs {a}");
    let rest = geodesic_ivp(1.0, &[2.0, 0.5], &[0.0, 0.0], 1.0).unwrap();
    assert_eq!(droplet_action(&rest), 0.0);
}

#[test]
fn pressure_and_velocity_bounds() {
    let g = disk_to_ellipse();
    let rep = bound_check(&g, 0.5, 2.0).unwrap();
    assert_eq!(rep.bound, 128.0);
    assert!(rep.violations.is_empty());
    assert!(rep.min_pressure >= 0.0);
    let max_bd = g.beta_dot.iter().cloned().fold(0.0, f64::max);
    assert!((rep.max_pressure - max_bd).abs() < 1e-12);

    let rest = geodesic_ivp(1.0, &[1.0, 1.0], &[0.0, 0.0], 1.0).unwrap();
    let rep = bound_check(&rest, 1.0, 1.0).unwrap();
    assert!(rep.violations.is_empty() && rep.max_pressure == 0.0);
}

#[test]
fn nesting_strict_inside() {
    let g = disk_to_ellipse();
    let rep = nesting_check(&g).unwrap();
    assert!(rep.passed());
    assert!(rep.min_interior_gap > 0.0);
    let rest = geodesic_ivp(1.0, &[2.0, 0.5], &[0.0, 0.0], 1.0).unwrap();
    let rep = nesting_check(&rest).unwrap();
    assert!(rep.passed() && rep.max_excess == 0.0);
}

#[test]
fn nesting_detects_corruption() {
    let mut g = disk_to_ellipse();
    let mid = g.times.len() / 2;
    let lin = 0.5 * (g.a[0][0] + g.end()[0]);
    g.a[mid][0] = lin + 1e-6;
    assert!(!nesting_check(&g).unwrap().passed());
}

#[test]
fn action_bound_reference_case() {
    let rep = action_bound_check(1.0, &[2.0, 0.5], &[0.0, 0.0], &BvpOptions::default()).unwrap();
    assert!((rep.dw2 - 5.0 * PI / 16.0).abs() < 1e-12);
    assert!((rep.slack - 64.0 * PI).abs() < 1e-9);
    assert!(rep.passed());
    let rep = action_bound_check(0.7, &[0.7, 0.7], &[0.3, -0.1], &BvpOptions::default()).unwrap();
    assert!((rep.action - rep.dw2).abs() < 1e-14);
}

#[test]
fn permutation_symmetry_is_exact() {
    let o = BvpOptions::default();
    let a0 = [1.0, 1.5, 1.0 / 1.5];
    let a1 = [2.0, 0.8, 1.0 / 1.6];
    let g = geodesic_bvp(1.0, &a0, &a1, &o).unwrap();
    let p = [2, 0, 1];
    let pa0: Vec<f64> = p.iter().map(|&i| a0[i]).collect();
    let pa1: Vec<f64> = p.iter().map(|&i| a1[i]).collect();
    let h = geodesic_bvp(1.0, &pa0, &pa1, &o).unwrap();
    for k in 0..g.times.len() {
        for (j, &i) in p.iter().enumerate() {
            assert_eq!(h.a[k][j], g.a[k][i]);
            assert_eq!(h.adot[k][j], g.adot[k][i]);
        }
    }
    let sm = g.state_at(0.3).unwrap();
    let hm = h.state_at(0.3).unwrap();
    for (j, &i) in p.iter().enumerate() {
        assert_eq!(hm.a[j], sm.a[i]);
    }
}

#[test]
fn time_reversal_recovers_start() {
    let g = disk_to_ellipse();
    let back = g.reversed().unwrap();
    let end = back.end();
    assert!((end[0] - 1.0).abs() < 1e-7 && (end[1] - 1.0).abs() < 1e-7);
}

#[test]
fn scaling_covariance() {
    let o = BvpOptions::default();
    let base = droplet_action(&geodesic_bvp(1.0, &[1.0, 1.0], &[2.0, 0.5], &o).unwrap());
    for s in [0.5, 2.0] {
        let g = geodesic_bvp(s, &[s, s], &[2.0 * s, 0.5 * s], &o).unwrap();
        let a = droplet_action(&g);
        assert!((a / base - s.powi(4)).abs() / s.powi(4) < 1e-6);
    }
}

#[test]
fn random_endpoint_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let o = BvpOptions::default();
    for _ in 0..25 {
        let d = rng.random_range(2..=3usize);
        let r = rng.random_range(0.2..2.0);
        let mut logs: Vec<f64> = (0..d).map(|_| rng.random_range(-0.69..0.69)).collect();
        let mean = logs.iter().sum::<f64>() / d as f64;
        logs.iter_mut().for_each(|l| *l -= mean);
        let a: Vec<f64> = logs.iter().map(|l| r * l.exp()).collect();
        let lo = a.iter().cloned().fold(f64::INFINITY, f64::min) / r;
        let hi = a.iter().cloned().fold(0.0, f64::max) / r;
        if hi / lo > 4.0 {
            continue;
        }
        let b: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rep = action_bound_check(r, &a, &b, &o).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let g = rep.geodesic.unwrap();
        assert!(nesting_check(&g).unwrap().passed());
        assert!(bound_check(&g, lo, hi).unwrap().violations.is_empty());
    }
}
