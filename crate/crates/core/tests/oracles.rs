mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stochtop::cech::{build_cech, FULL_DIMENSION};
use stochtop::homology::{betti_numbers, boundary_matrix, euler_characteristic};
use stochtop::manifold::{
    ball_volume_capped, g_function, integrate_adaptive, sample_poisson, unit_ball_volume, upper_incomplete_gamma,
};
use stochtop::morse::{
    enumerate_critical_points, enumerate_critical_points_with, CandidateStrategy, CriticalQuery, EnumerationOptions,
};
use stochtop::{CechComplex, Manifold, PointSample};

fn manifolds() -> Vec<Manifold> {
    vec![
        Manifold::torus(&[1.0, 1.0]).unwrap(),
        Manifold::cylinder(&[1.0], 1.0).unwrap(),
        Manifold::disk(0.5).unwrap(),
        Manifold::torus(&[1.0, 1.0, 1.0]).unwrap(),
    ]
}

fn levels(c: &CechComplex) -> Vec<Vec<Vec<usize>>> {
    (0..=c.max_dim())
        .map(|k| c.simplices(k).iter().map(|s| s.vertices.to_vec()).collect())
        .collect()
}

/// A sample of roughly `target` points with `2r` below the chart limit.
fn small_instance(m: &Manifold, target: f64, rng: &mut ChaCha8Rng) -> (PointSample, f64) {
    let s = sample_poisson(m, target / m.total_volume(), rng.random()).unwrap();
    let r = rng.random_range(0.03..0.45) * m.injectivity_radius().min(0.5);
    (s, r)
}

#[test]
fn cech_matches_brute_force_subsets() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for m in manifolds() {
        for _ in 0..50 {
            let (s, r) = small_instance(&m, 18.0, &mut rng);
            if s.len() > 25 {
                continue;
            }
            let c = build_cech(&m, &s, r, 3).unwrap();
            let mut got = levels(&c);
            got.resize(4, Vec::new());
            let want = brute_cech(&m, &s, r, 3);
            assert_eq!(got, want, "{} n={} r={r}", m.label(), s.len());
            let counts: Vec<usize> = want.iter().map(Vec::len).collect();
            let mut have = c.simplex_counts();
            have.resize(4, 0);
            assert_eq!(have, counts);
        }
    }
}

#[test]
fn betti_matches_dense_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for m in manifolds() {
        let mut accepted = 0;
        while accepted < 50 {
            let (s, r) = small_instance(&m, 14.0, &mut rng);
            let c = build_cech(&m, &s, r, FULL_DIMENSION).unwrap();
            if c.simplex_counts().iter().sum::<usize>() > 300 {
                continue;
            }
            accepted += 1;
            let kmax = c.max_dim().saturating_sub(1);
            let b = betti_numbers(&c, kmax);
            let mut lv = levels(&c);
            lv.resize(kmax + 2, Vec::new());
            assert_eq!(b.values, dense_betti(&lv, kmax), "{} r={r}", m.label());
            assert!(!b.upper_bound_only);
        }
    }
}

#[test]
fn beta0_equals_union_find_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for m in manifolds() {
        for _ in 0..20 {
            let s = sample_poisson(&m, 200.0 / m.total_volume(), rng.random()).unwrap();
            let r = rng.random_range(0.01..0.06);
            let c = build_cech(&m, &s, r, 1).unwrap();
            let edges = c.simplices(1).iter().map(|e| (e.vertices[0], e.vertices[1]));
            assert_eq!(betti_numbers(&c, 0).values[0], union_find_components(s.len(), edges));
        }
    }
}

#[test]
fn boundary_of_boundary_vanishes_and_euler_identity_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for m in manifolds() {
        for _ in 0..10 {
            let (s, r) = small_instance(&m, 40.0, &mut rng);
            let c = build_cech(&m, &s, r.min(0.12), FULL_DIMENSION).unwrap();
            for k in 1..c.max_dim() {
                let lower = boundary_matrix(&c, k).unwrap();
                let upper = boundary_matrix(&c, k + 1).unwrap();
                assert!(lower.compose(&upper).unwrap().iter().all(Vec::is_empty));
            }
            let b = betti_numbers(&c, c.max_dim());
            assert_eq!(euler_characteristic(&c), b.euler_characteristic());
        }
    }
}

#[test]
fn critical_points_match_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for m in manifolds().into_iter().take(3) {
        for _ in 0..15 {
            let s = sample_poisson(&m, 30.0 / m.total_volume(), rng.random()).unwrap();
            let hi = rng.random_range(0.05..0.2);
            let lo = if rng.random_bool(0.5) { 0.0 } else { hi * 0.3 };
            for k in 0..=m.dim() {
                let want = brute_critical(&m, &s, k, lo, hi);
                for strategy in [CandidateStrategy::Voronoi, CandidateStrategy::NeighborGraph] {
                    let opts = EnumerationOptions {
                        strategy,
                        cell_size: None,
                    };
                    let mut got = enumerate_critical_points_with(&s, &m, &CriticalQuery::new(lo, hi, k), &opts)
                        .unwrap()
                        .points;
                    got.sort_by(|a, b| a.vertices.cmp(&b.vertices));
                    let gv: Vec<Vec<usize>> = got.iter().map(|c| c.vertices.to_vec()).collect();
                    let wv: Vec<Vec<usize>> = want.iter().map(|c| c.vertices.clone()).collect();
                    assert_eq!(gv, wv, "{} k={k} ({lo}, {hi}] {strategy:?}", m.label());
                    for (g, w) in got.iter().zip(&want) {
                        assert!((g.radius - w.radius).abs() < 1e-12);
                        assert!(geodesic(&m, &g.center.coords, &w.center) < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn weak_morse_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for m in manifolds().into_iter().take(2) {
        for _ in 0..20 {
            let s = sample_poisson(&m, 150.0, rng.random()).unwrap();
            let r = rng.random_range(0.03..0.1);
            let c = build_cech(&m, &s, r, 3).unwrap();
            let b = betti_numbers(&c, 2);
            for k in 0..=2 {
                let count = enumerate_critical_points(&s, &m, &CriticalQuery::new(0.0, r, k)).unwrap().len();
                assert!(b.values[k] <= count, "β_{k} = {} > {count}", b.values[k]);
            }
        }
    }
}

#[test]
fn miniball_agrees_with_circumsphere_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let d = rng.random_range(2..=3);
        let size = rng.random_range(1..=d + 2);
        let pts: Vec<Vec<f64>> = (0..size).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let coords: Vec<_> = pts.iter().map(|p| stochtop::manifold::Coords::from_slice(p)).collect();
        let got = stochtop::geometry::miniball_radius(&coords).unwrap();
        assert!((got - brute_miniball(&pts)).abs() < 1e-9, "{pts:?}");
    }
}

#[test]
fn incomplete_gamma_matches_simpson() {
    for k in 1..=10u32 {
        for x in [0.0, 0.5, 1.0, 2.5, 5.0, 12.0, 30.0] {
            let f = |t: f64| t.powi(k as i32 - 1) * (-t).exp();
            let want = simpson(f, x, x + 250.0, 500_000);
            let got = upper_incomplete_gamma(k, x).unwrap();
            assert!(((got - want) / want).abs() < 1e-10, "k={k} x={x}: {got} vs {want}");
        }
    }
}

#[test]
fn g_function_matches_simpson() {
    for d in 1..=7 {
        for u in [0.0, 0.1, 0.5, 0.9, 1.0] {
            // t = sin θ removes the endpoint singularity of the derivative
            let want = simpson(|th: f64| th.cos().powi(d as i32), 0.0, f64::asin(u), 200_000);
            let got = g_function(d, u).unwrap();
            assert!((got - want).abs() <= 1e-9 * want.max(1e-300) + 1e-15, "d={d} u={u}: {got} vs {want}");
        }
    }
}

#[test]
fn capped_ball_matches_segment_formulas() {
    for (r, delta) in [(1.0f64, 0.0f64), (1.0, 0.5), (0.05, 0.015), (0.05, 0.035), (2.0, 2.0)] {
        let seg = r * r * (delta / r).acos() - delta * (r * r - delta * delta).sqrt();
        let disk = std::f64::consts::PI * r * r - seg;
        assert!((ball_volume_capped(2, r, delta).unwrap() - disk).abs() < 1e-12 * disk);
        let h = r - delta;
        let cap = std::f64::consts::PI * h * h * (3.0 * r - h) / 3.0;
        let ball = 4.0 / 3.0 * std::f64::consts::PI * r.powi(3) - cap;
        assert!((ball_volume_capped(3, r, delta).unwrap() - ball).abs() < 1e-12 * ball);
    }
}

#[test]
fn capped_disk_monte_carlo() {
    let (r, delta) = (1.0, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let trials = 400_000;
    let hits = (0..trials)
        .filter(|_| {
            let (x, y): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            x * x + y * y <= 1.0 && y >= -delta
        })
        .count();
    let p = hits as f64 / trials as f64;
    let est = 4.0 * p;
    let sigma = 4.0 * (p * (1.0 - p) / trials as f64).sqrt();
    let want = ball_volume_capped(2, r, delta).unwrap();
    assert!((est - want).abs() < 4.0 * sigma, "{est} vs {want}");
}

#[test]
fn adaptive_quadrature_matches_simpson() {
    let f = |t: f64| (3.0 * t).sin() * (-t).exp() + t * t;
    let a = integrate_adaptive(f, 0.0, 4.0, 1e-13);
    let b = simpson(f, 0.0, 4.0, 2_000_000);
    assert!((a - b).abs() < 1e-9);
    assert!((unit_ball_volume::<f64>(4) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-14);
}
