use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapeflow_core::error::Error;
use shapeflow_core::geometry::{point, DiscreteMeasure, Point};
use shapeflow_core::stats::linear_fit;
use shapeflow_core::tlp::{
    base_distance, geodesic_tlp_uniformity, lifted_cost, map_stability_tlp, tlp_distance, TLpPair, TlpOrder,
};
use shapeflow_core::transport::{estimate_brenier_field, BrenierField, FieldOptions};

const ORDERS: [TlpOrder; 3] = [TlpOrder::One, TlpOrder::Two, TlpOrder::Infinity];

fn random_pair(rng: &mut ChaCha8Rng, n: usize, width: usize) -> TLpPair {
    let pts: Vec<Point> = (0..n).map(|_| point(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])).collect();
    let values = (0..n).map(|_| (0..width).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    TLpPair::new(DiscreteMeasure::uniform(pts, 1.0).unwrap(), values).unwrap()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Minimum over all permutation couplings of equal-weight pairs, summing
/// terms in increasing order like the solver.
fn brute_force(a: &TLpPair, b: &TLpPair, p: TlpOrder) -> f64 {
    let n = a.measure.len();
    let cost = lifted_cost(a, b, p).unwrap();
    let w = a.measure.weights();
    let best = permutations(n)
        .iter()
        .map(|perm| match p {
            TlpOrder::Infinity => perm.iter().enumerate().map(|(i, &j)| cost[i * n + j]).fold(0.0, f64::max),
            _ => {
                let mut terms: Vec<f64> = perm.iter().enumerate().map(|(i, &j)| w[i] * cost[i * n + j]).collect();
                terms.sort_by(f64::total_cmp);
                terms.iter().sum()
            }
        })
        .fold(f64::INFINITY, f64::min);
    match p {
        TlpOrder::Two => best.max(0.0).sqrt(),
        _ => best,
    }
}

#[test]
fn matches_brute_force_on_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for trial in 0..60 {
        let n = 1 + trial % 6;
        let a = random_pair(&mut rng, n, 2);
        let b = random_pair(&mut rng, n, 2);
        for p in ORDERS {
            assert_eq!(tlp_distance(&a, &b, p).unwrap(), brute_force(&a, &b, p), "trial {trial} p {p}");
        }
    }
}

#[test]
fn constant_value_shift_costs_at_most_the_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = random_pair(&mut rng, 5, 2);
    let c = [0.3, -0.4];
    let b = TLpPair::new(
        a.measure.clone(),
        a.values.iter().map(|v| vec![v[0] + c[0], v[1] + c[1]]).collect(),
    )
    .unwrap();
    assert_eq!(tlp_distance(&a, &a, TlpOrder::Two).unwrap(), 0.0);
    for p in ORDERS {
        let d = tlp_distance(&a, &b, p).unwrap();
        assert_eq!(d, brute_force(&a, &b, p));
        // Identity coupling with total mass 1.
        assert!(d <= 0.5 + 1e-15, "{p}: {d}");
    }
}

#[test]
fn unequal_masses_are_rejected() {
    let a = TLpPair::new(DiscreteMeasure::uniform(vec![point(&[0.0])], 1.0).unwrap(), vec![vec![0.0]]).unwrap();
    let b = TLpPair::new(DiscreteMeasure::uniform(vec![point(&[0.0])], 2.0).unwrap(), vec![vec![0.0]]).unwrap();
    assert!(matches!(tlp_distance(&a, &b, TlpOrder::One), Err(Error::MassMismatch { .. })));
}

#[test]
fn weighted_bottleneck_matches_split_atoms() {
    let pts_a = vec![point(&[0.0, 0.0]), point(&[1.0, 0.0]), point(&[0.0, 2.0])];
    let pts_b = vec![point(&[0.1, 0.3]), point(&[1.5, -0.2]), point(&[-0.4, 1.7])];
    let ga = vec![vec![0.0], vec![1.0], vec![0.5]];
    let gb = vec![vec![0.2], vec![0.9], vec![0.1]];
    let a = TLpPair::new(DiscreteMeasure::new(pts_a.clone(), vec![0.5, 0.25, 0.25]).unwrap(), ga.clone()).unwrap();
    let b = TLpPair::new(DiscreteMeasure::new(pts_b.clone(), vec![0.25, 0.25, 0.5]).unwrap(), gb.clone()).unwrap();
    // The same measures as four equal atoms each.
    let split = |pts: &[Point], g: &[Vec<f64>], twice: usize| {
        let mut p = pts.to_vec();
        let mut v = g.to_vec();
        p.push(pts[twice].clone());
        v.push(g[twice].clone());
        TLpPair::new(DiscreteMeasure::uniform(p, 1.0).unwrap(), v).unwrap()
    };
    let (a4, b4) = (split(&pts_a, &ga, 0), split(&pts_b, &gb, 2));
    for p in ORDERS {
        let d = tlp_distance(&a, &b, p).unwrap();
        let e = brute_force(&a4, &b4, p);
        assert!((d - e).abs() < 1e-12, "{p}: {d} vs {e}");
    }
}

#[test]
fn metric_axioms_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..100 {
        let n = 4 + trial % 12;
        let (a, b, c) = (random_pair(&mut rng, n, 1), random_pair(&mut rng, n, 1), random_pair(&mut rng, n, 1));
        for p in ORDERS {
            let ab = tlp_distance(&a, &b, p).unwrap();
            assert_eq!(ab, tlp_distance(&b, &a, p).unwrap());
            assert_eq!(tlp_distance(&a, &a, p).unwrap(), 0.0);
            let (bc, ac) = (tlp_distance(&b, &c, p).unwrap(), tlp_distance(&a, &c, p).unwrap());
            assert!(ac <= ab + bc + 2e-12, "trial {trial} p {p}");
            assert!(ab >= base_distance(&a, &b, p).unwrap());
        }
    }
}

fn cloud(rng: &mut ChaCha8Rng, n: usize) -> DiscreteMeasure {
    let pts = (0..n)
        .map(|_| {
            let r = rng.random_range(0.0f64..1.0).sqrt();
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            point(&[r * th.cos(), r * th.sin()])
        })
        .collect();
    DiscreteMeasure::uniform(pts, 1.0).unwrap()
}

#[test]
fn stability_under_translated_targets() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mu = cloud(&mut rng, 60);
    let nu = mu.mapped(|x| point(&[2.0 * x[0], 0.5 * x[1]])).unwrap();
    let b = point(&[0.6, -0.3]);
    let ks: Vec<f64> = (1..=8).map(|k| k as f64).collect();
    let nu_k: Vec<_> = ks.iter().map(|k| nu.translated(&(&b / *k))).collect();
    let mu_k = vec![mu.clone(); ks.len()];
    let dists = map_stability_tlp(&mu_k, &nu_k, &mu, &nu).unwrap();
    let inv: Vec<f64> = ks.iter().map(|k| 1.0 / k).collect();
    let fit = linear_fit(&inv, &dists);
    assert!(fit.r_squared > 0.98, "{fit:?}");
    for (d, k) in dists.iter().zip(&ks) {
        assert!((d - b.norm() / k).abs() < 1e-9, "{d}");
    }
    let same = map_stability_tlp(&[mu.clone()], &[nu.clone()], &mu, &nu).unwrap();
    assert!(same[0] < 1e-12);
}

#[test]
fn stability_under_jitter_trends_down() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mu = cloud(&mut rng, 90);
    let nu = mu.mapped(|x| point(&[2.0 * x[0], 0.5 * x[1]])).unwrap();
    let jitter = |m: &DiscreteMeasure, s: f64| {
        m.mapped(|x| x + point(&[s * (x[0] * 7.0).sin(), s * (x[1] * 5.0).cos()])).unwrap()
    };
    let scales = [0.2, 0.1, 0.05, 0.025];
    let mu_k: Vec<_> = scales.iter().map(|s| jitter(&mu, *s)).collect();
    let nu_k: Vec<_> = scales.iter().map(|s| jitter(&nu, *s)).collect();
    let d = map_stability_tlp(&mu_k, &nu_k, &mu, &nu).unwrap();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
}

fn field_of(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> BrenierField {
    estimate_brenier_field(mu, nu, &FieldOptions::default()).unwrap()
}

#[test]
fn interpolant_distances_along_time() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mu = cloud(&mut rng, 80);
    let nu = mu.mapped(|x| point(&[2.0 * x[0], 0.5 * x[1]])).unwrap();
    let field = field_of(&mu, &nu);
    let times = [0.0, 0.25, 0.5, 0.75, 1.0];
    let same = geodesic_tlp_uniformity(&field, &field, &times).unwrap();
    assert_eq!((same.sup_position, same.sup_velocity, same.sup_tensor), (0.0, 0.0, 0.0));

    let b = point(&[0.4, 0.2]);
    for k in [1.0, 2.0, 4.0] {
        let fk = field_of(&mu, &nu.translated(&(&b / k)));
        let rep = geodesic_tlp_uniformity(&field, &fk, &times).unwrap();
        let expected = b.norm_squared() / (k * k);
        assert!((rep.sup_position - expected).abs() < 1e-12, "{rep:?}");
        assert!(rep.velocity_spread <= 1e-9);
    }

    let other = cloud(&mut rng, 80);
    let fk = field_of(&other, &other.mapped(|x| point(&[1.5 * x[0] + 0.1, 0.7 * x[1]])).unwrap());
    let rep = geodesic_tlp_uniformity(&field, &fk, &times).unwrap();
    assert!(rep.velocity_spread <= 1e-9 * rep.sup_velocity.max(1.0), "{rep:?}");
    assert!(rep.position[0] > 0.0);
}
