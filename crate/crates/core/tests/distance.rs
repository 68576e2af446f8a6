use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tgraph::construction::{build_window, rotate_lambda, Params, Triangle};
use tgraph::geometry::{pseudo_distance, WindowIndex};

fn generic() -> Params {
    Params::with_angle(Triangle::from_sides(0.8, 1.3, 1.1).unwrap(), 1.1)
}

#[test]
fn identical_pointed_graphs_are_at_distance_zero() {
    let w = build_window(&generic(), 20).unwrap();
    let idx = WindowIndex::new(&w);
    let p = w.vertex(0, 0);
    assert!(pseudo_distance(&idx, p, &idx, p, 4.0).unwrap() < 1e-12);
}

#[test]
fn translation_equals_lambda_rotation() {
    let p = generic();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let base = build_window(&p, 24).unwrap();
    let a = WindowIndex::new(&base);
    for _ in 0..10 {
        let (m, n) = (rng.gen_range(-4..=4), rng.gen_range(-4..=4));
        let q = rotate_lambda(&p, m, n);
        let shifted = build_window(&q, 20).unwrap();
        let b = WindowIndex::new(&shifted);
        let pa = base.psi(tgraph::lattice::DualVertex::new(m, n)).unwrap();
        let pb = shifted.psi(tgraph::lattice::DualVertex::new(0, 0)).unwrap();
        let d = pseudo_distance(&a, pa, &b, pb, 4.0).unwrap();
        assert!(d < 1e-9, "({m},{n}): {d}");
    }
}

#[test]
fn triangle_inequality_on_sampled_triples() {
    let p = generic();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let windows: Vec<_> = [0.3, 1.1, 2.0, 4.4]
        .iter()
        .map(|&t| build_window(&Params::with_angle(p.triangle.clone(), t), 22).unwrap())
        .collect();
    let idx: Vec<_> = windows.iter().map(WindowIndex::new).collect();
    let point = |k: usize, rng: &mut ChaCha8Rng| {
        let (m, n) = (rng.gen_range(-2..=2), rng.gen_range(-2..=2));
        (k, windows[k].vertex(m, n))
    };
    let d = |x: (usize, Complex64), y: (usize, Complex64)| pseudo_distance(&idx[x.0], x.1, &idx[y.0], y.1, 3.0).unwrap();
    for _ in 0..20 {
        let a = point(rng.gen_range(0..4), &mut rng);
        let b = point(rng.gen_range(0..4), &mut rng);
        let c = point(rng.gen_range(0..4), &mut rng);
        let (ab, ac, cb) = (d(a, b), d(a, c), d(c, b));
        // eps lives on a grid of ratio EPS_RATIO, so allow one grid step
        assert!(ab <= (ac + cb) * tgraph::geometry::EPS_RATIO + 1e-12, "{ab} > {ac} + {cb}");
        assert!((ab - d(b, a)).abs() < 1e-12);
    }
}

#[test]
fn insufficient_window_is_rejected() {
    let w = build_window(&generic(), 4).unwrap();
    let idx = WindowIndex::new(&w);
    let p = w.vertex(0, 0);
    assert!(pseudo_distance(&idx, p, &idx, p, 50.0).is_err());
}
