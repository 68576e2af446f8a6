use nalgebra::DMatrix;
use proptest::prelude::*;
use tgraph::construction::{build_window, psi, psi_along, rotate_lambda, Params, Triangle};
use tgraph::lattice::{black_neighbors, edge_kind, face_dual_vertices, white_neighbors, HexCoord};
use tgraph::periodic::{density_diagnostic, stationary_matrix};
use tgraph::walk::jump_rates;

fn triangle_strategy() -> impl Strategy<Value = Triangle> {
    (0.5f64..2.0, 0.5f64..2.0, 0.2f64..0.8)
        .prop_filter_map("valid triangle", |(a, b, t)| {
            let c = (a - b).abs() + t * (a + b - (a - b).abs());
            Triangle::from_sides(a, b, c).ok()
        })
}

fn unit_step() -> impl Strategy<Value = (i64, i64)> {
    prop_oneof![Just((1, 0)), Just((-1, 0)), Just((0, 1)), Just((0, -1))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjacency_is_symmetric(m in -50i64..50, n in -50i64..50) {
        for (w, kind) in black_neighbors(m, n) {
            let back = white_neighbors(w.m, w.n);
            prop_assert!(back.iter().any(|(b, k)| *b == HexCoord::black(m, n) && *k == kind));
            prop_assert_eq!(edge_kind((w.m, w.n), (m, n)), Some(kind));
            let shared = face_dual_vertices(w)
                .iter()
                .filter(|v| face_dual_vertices(HexCoord::black(m, n)).contains(v))
                .count();
            prop_assert_eq!(shared, 2);
        }
    }

    #[test]
    fn triangle_closes_with_unit_area(t in triangle_strategy()) {
        prop_assert!((t.a * t.alpha + t.b * t.beta + t.c * t.gamma).norm() < 1e-12);
        prop_assert!((t.area() - 1.0).abs() < 1e-12);
        for u in [t.alpha, t.beta, t.gamma] {
            prop_assert!((u.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_is_path_independent(
        t in triangle_strategy(),
        theta in 0.0f64..std::f64::consts::TAU,
        steps in prop::collection::vec(unit_step(), 1..60),
    ) {
        let p = Params::with_angle(t, theta);
        let (mut m, mut n) = (0, 0);
        for (dm, dn) in &steps {
            m += dm;
            n += dn;
        }
        let along = psi_along(&steps, &p);
        prop_assert!((along - psi(m, n, &p)).norm() < 1e-9 * (1.0 + steps.len() as f64));
        // closing the loop returns to zero
        let mut closed = steps.clone();
        closed.extend(steps.iter().rev().map(|(a, b)| (-a, -b)));
        prop_assert!(psi_along(&closed, &p).norm() < 1e-9 * (1.0 + steps.len() as f64));
    }

    #[test]
    fn translation_is_a_lambda_rotation(
        t in triangle_strategy(),
        theta in 0.0f64..std::f64::consts::TAU,
        m in -20i64..20, n in -20i64..20, j in -5i64..5, k in -5i64..5,
    ) {
        let p = Params::with_angle(t, theta);
        let q = rotate_lambda(&p, m, n);
        prop_assert!((q.scale(j, k) - p.scale(j + m, k + n)).abs() < 1e-12);
        prop_assert!((q.lambda.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn walk_is_balanced(t in triangle_strategy(), theta in 0.0f64..std::f64::consts::TAU) {
        let p = Params::with_angle(t, theta);
        if let Ok(w) = build_window(&p, 6) {
            for (m, n) in [(0, 0), (2, -3), (-4, 1), (5, 5)] {
                let r = jump_rates(HexCoord::black(m, n), &w).unwrap();
                prop_assert!(r.drift().norm() < 1e-12, "{}", r.drift());
            }
        }
    }

    #[test]
    fn stationary_law_of_positive_matrices(entries in prop::collection::vec(0.01f64..1.0, 25)) {
        let mut p = DMatrix::from_row_slice(5, 5, &entries);
        for i in 0..5 {
            let s: f64 = p.row(i).sum();
            p.row_mut(i).iter_mut().for_each(|x| *x /= s);
        }
        let pi = stationary_matrix(&p).unwrap();
        prop_assert!(pi.residual <= 1e-12);
        prop_assert!((pi.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Cauchy-Schwarz: the density norm is at least 1
        prop_assert!(density_diagnostic(&pi.probabilities) >= 1.0 - 1e-12);
    }

    #[test]
    fn asymptotic_kernel_decays(dm in -40i64..40, dn in -40i64..40) {
        prop_assume!(dm.abs() + dn.abs() > 2);
        let t = Triangle::from_sides(0.8, 1.3, 1.1).unwrap();
        let v = tgraph::kernel::kinv_asymptotic(HexCoord::black(dm, dn), HexCoord::white(0, 0), &t).unwrap();
        let l = tgraph::construction::ell(dm as f64, dn as f64, &t).norm();
        // |g| = 1, so |Im(g / l)| <= 1 / |l|
        prop_assert!(v.abs() * l <= (1.0 + 1e-12) / (2.0 * std::f64::consts::PI), "{v} at {l}");
    }
}
