use super::triangle::{exact_unit, Angle, Triangle};
use crate::error::{Result, TGraphError};
use crate::lattice::{edge_kind, EdgeKind, HexCoord};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A triangle together with the unit parameter `lambda`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub triangle: Triangle,
    pub lambda: Complex64,
}

impl Params {
    pub fn new(triangle: Triangle, lambda: Complex64) -> Result<Self> {
        if (lambda.norm() - 1.0).abs() > 1e-12 {
            return Err(TGraphError::InvalidArgument(format!("|lambda| = {} is not 1", lambda.norm())));
        }
        Ok(Params { triangle, lambda })
    }

    pub fn with_angle(triangle: Triangle, theta: f64) -> Self {
        Params { triangle, lambda: Complex64::from_polar(1.0, theta) }
    }

    pub fn f(&self, m: i64, n: i64) -> Complex64 {
        f_white(m, n, &self.triangle)
    }

    /// Signed scale of the white face `w(m,n)`: `Re(conj(lambda) conj(f(w)))`.
    pub fn scale(&self, m: i64, n: i64) -> f64 {
        (self.lambda.conj() * self.f(m, n).conj()).re
    }

    /// `phi(w, b)` for the edge of the given kind at `w(m,n)`.
    pub fn phi_kind(&self, m: i64, n: i64, kind: EdgeKind) -> Complex64 {
        let t = &self.triangle;
        let f = self.f(m, n);
        let s = (self.lambda.conj() * f.conj()).re;
        let (k, dir) = match kind {
            EdgeKind::Vertical => (t.a, t.alpha),
            EdgeKind::NeSw => (t.b, t.beta),
            EdgeKind::NwSe => (t.c, t.gamma),
        };
        // g at the black endpoint equals f(w) times the side direction
        k * s * self.lambda * f * dir
    }
}

/// `f(w(m,n)) = (beta/gamma)^m (beta/alpha)^n`.
pub fn f_white(m: i64, n: i64, t: &Triangle) -> Complex64 {
    match (t.theta1.pi_fraction, t.theta2.pi_fraction) {
        (Some((p1, q1)), Some((p2, q2))) => {
            let (p1, q1, p2, q2) = (p1 as i128, q1 as i128, p2 as i128, q2 as i128);
            exact_unit(m as i128 * p1 * q2 + n as i128 * p2 * q1, q1 * q2)
        }
        _ => Complex64::from_polar(1.0, m as f64 * t.theta1.radians + n as f64 * t.theta2.radians),
    }
}

/// `g(b(m,n)) = alpha (beta/gamma)^m (beta/alpha)^n`.
pub fn g_black(m: i64, n: i64, t: &Triangle) -> Complex64 {
    t.alpha * f_white(m, n, t)
}

pub fn k_weight(kind: EdgeKind, t: &Triangle) -> f64 {
    match kind {
        EdgeKind::Vertical => t.a,
        EdgeKind::NeSw => t.b,
        EdgeKind::NwSe => t.c,
    }
}

/// The flow `phi(wb) = K(w,b) Re(conj(lambda) conj(f(w))) lambda g(b)`, with
/// `phi(bw) = -phi(wb)`.
pub fn phi(x: HexCoord, y: HexCoord, params: &Params) -> Result<Complex64> {
    let (w, b, sign) = match (x.is_black(), y.is_black()) {
        (false, true) => (x, y, 1.0),
        (true, false) => (y, x, -1.0),
        _ => return Err(TGraphError::NotAdjacent(x, y)),
    };
    let kind = edge_kind((w.m, w.n), (b.m, b.n)).ok_or(TGraphError::NotAdjacent(x, y))?;
    let t = &params.triangle;
    let s = params.scale(w.m, w.n);
    Ok(sign * k_weight(kind, t) * s * params.lambda * g_black(b.m, b.n, t))
}

/// `ell(m,n) = a alpha m / 2 - c gamma n / 2`.
pub fn ell(m: f64, n: f64, t: &Triangle) -> Complex64 {
    t.a * t.alpha * (m / 2.0) - t.c * t.gamma * (n / 2.0)
}

/// Increment of `psi` from `v(m,n)` to `v(m+1,n)`.
pub(crate) fn row_step(m: i64, n: i64, p: &Params) -> Complex64 {
    p.phi_kind(m, n, EdgeKind::Vertical)
}

/// Increment of `psi` from `v(m,n)` to `v(m,n+1)`.
pub(crate) fn column_step(m: i64, n: i64, p: &Params) -> Complex64 {
    -p.phi_kind(m, n, EdgeKind::NwSe)
}

/// `psi(v(m,n))`, summed along row 0 and then along column `m`.
pub fn psi(m: i64, n: i64, params: &Params) -> Complex64 {
    let mut z = Complex64::new(0.0, 0.0);
    if m >= 0 {
        for j in 0..m {
            z += row_step(j, 0, params);
        }
    } else {
        for j in (m..0).rev() {
            z -= row_step(j, 0, params);
        }
    }
    if n >= 0 {
        for k in 0..n {
            z += column_step(m, k, params);
        }
    } else {
        for k in (n..0).rev() {
            z -= column_step(m, k, params);
        }
    }
    z
}

/// Sum of the dual flow along a path of unit lattice steps starting at `v(0,0)`.
pub fn psi_along(path: &[(i64, i64)], params: &Params) -> Complex64 {
    let mut z = Complex64::new(0.0, 0.0);
    let (mut m, mut n) = (0i64, 0i64);
    for &(dm, dn) in path {
        z += match (dm, dn) {
            (1, 0) => row_step(m, n, params),
            (-1, 0) => -row_step(m - 1, n, params),
            (0, 1) => column_step(m, n, params),
            (0, -1) => -column_step(m, n - 1, params),
            _ => panic!("path step ({dm},{dn}) is not a unit lattice step"),
        };
        m += dm;
        n += dn;
    }
    z
}

/// `lambda' = lambda (beta/gamma)^m (beta/alpha)^n`; the graph for `lambda'`
/// pointed at `v(0,0)` is the graph for `lambda` pointed at `v(m,n)`.
pub fn rotate_lambda(params: &Params, m: i64, n: i64) -> Params {
    Params { triangle: params.triangle.clone(), lambda: params.lambda * params.f(m, n) }
}

/// `min |Re(conj(lambda) conj(f(w)))|` over white `w` with `|m|, |n| <= r`.
pub fn genericity_margin(params: &Params, r: i64) -> f64 {
    let mut best = f64::INFINITY;
    for m in -r..=r {
        for n in -r..=r {
            best = best.min(params.scale(m, n).abs());
        }
    }
    best
}

/// A `lambda` making the face `w(m,n)` collapse to a point.
pub fn degenerate_lambda(params: &Params, m: i64, n: i64) -> Complex64 {
    Complex64::i() * params.f(m, n).conj()
}

/// A `lambda` whose genericity margin over `|m|, |n| <= r` is roughly `target`,
/// obtained by tilting the collapsing parameter of `w(m,n)`.
pub fn lambda_with_margin(params: &Params, m: i64, n: i64, target: f64) -> Complex64 {
    degenerate_lambda(params, m, n) * Complex64::from_polar(1.0, target.asin())
}

/// Angle of `lambda` in `[0, 2pi)`.
pub fn lambda_angle(lambda: Complex64) -> Angle {
    Angle::radians(lambda.arg().rem_euclid(std::f64::consts::TAU))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{black_neighbors, white_neighbors};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn generic() -> Params {
        let t = Triangle::from_angles(Angle::radians(0.8), Angle::radians(1.3), Angle::radians(PI - 2.1)).unwrap();
        Params::with_angle(t, 0.37)
    }

    #[test]
    fn f_and_g_basics() {
        let p = generic();
        let t = &p.triangle;
        assert_eq!(f_white(0, 0, t), Complex64::new(1.0, 0.0));
        assert_abs_diff_eq!((f_white(1, 0, t) - t.beta / t.gamma).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((f_white(0, 1, t) - t.beta / t.alpha).norm(), 0.0, epsilon = 1e-14);
        assert_eq!(g_black(0, 0, t), t.alpha);
        let e = Triangle::equilateral();
        let direct = e.beta * e.beta / (e.alpha * e.gamma);
        assert_abs_diff_eq!((direct - 1.0).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((f_white(1, 1, &e) - direct).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn f_matches_repeated_products() {
        let t = generic().triangle;
        let (r1, r2) = (t.beta / t.gamma, t.beta / t.alpha);
        for (m, n) in [(3, -2), (-5, 4), (7, 7)] {
            let prod = r1.powi(m) * r2.powi(n);
            assert_abs_diff_eq!((f_white(m as i64, n as i64, &t) - prod).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn edge_products_are_side_directions() {
        let t = generic().triangle;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let (m, n) = (rng.gen_range(-100..100), rng.gen_range(-100..100));
            assert_abs_diff_eq!((g_black(m, n, &t) - t.alpha * f_white(m, n, &t)).norm(), 0.0, epsilon = 1e-12);
            for (b, kind) in white_neighbors(m, n) {
                let z = f_white(m, n, &t).conj() * g_black(b.m, b.n, &t);
                let want = match kind {
                    EdgeKind::Vertical => t.alpha,
                    EdgeKind::NeSw => t.beta,
                    EdgeKind::NwSe => t.gamma,
                };
                assert_abs_diff_eq!((z - want).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn weights_by_kind() {
        let t = generic().triangle;
        assert_eq!(k_weight(EdgeKind::Vertical, &t), t.a);
        assert_eq!(k_weight(EdgeKind::NeSw, &t), t.b);
        assert_eq!(k_weight(EdgeKind::NwSe, &t), t.c);
    }

    #[test]
    fn phi_at_lambda_one() {
        let t = generic().triangle;
        let p = Params::with_angle(t.clone(), 0.0);
        let z = phi(HexCoord::white(0, 0), HexCoord::black(0, 0), &p).unwrap();
        assert_abs_diff_eq!((z - t.a * t.alpha).norm(), 0.0, epsilon = 1e-15);
        let back = phi(HexCoord::black(0, 0), HexCoord::white(0, 0), &p).unwrap();
        assert_eq!(back, -z);
        assert!(phi(HexCoord::white(0, 0), HexCoord::black(3, 3), &p).is_err());
        assert!(phi(HexCoord::white(0, 0), HexCoord::white(0, 1), &p).is_err());
    }

    #[test]
    fn zero_divergence() {
        let p = generic();
        let t = &p.triangle;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let (m, n) = (rng.gen_range(-200..200), rng.gen_range(-200..200));
            let s: Complex64 = black_neighbors(m, n)
                .iter()
                .map(|&(w, k)| f_white(w.m, w.n, t) * k_weight(k, t))
                .sum();
            assert!(s.norm() < 1e-12);
            let s: Complex64 = white_neighbors(m, n)
                .iter()
                .map(|&(b, k)| g_black(b.m, b.n, t) * k_weight(k, t))
                .sum();
            assert!(s.norm() < 1e-12);
            let s: Complex64 = white_neighbors(m, n)
                .iter()
                .map(|&(b, _)| phi(HexCoord::white(m, n), b, &p).unwrap())
                .sum();
            assert!(s.norm() < 1e-12);
        }
    }

    #[test]
    fn dual_flow_closes_around_dual_faces() {
        // The unit index square encloses the faces of w(m,n) and b(m,n+1).
        let p = generic();
        for (m, n) in [(0, 0), (4, -9), (-13, 2)] {
            let around = [(1, 0), (0, 1), (-1, 0), (0, -1)];
            let mut z = Complex64::new(0.0, 0.0);
            let (mut a, mut b) = (m, n);
            for (dm, dn) in around {
                z += match (dm, dn) {
                    (1, 0) => row_step(a, b, &p),
                    (-1, 0) => -row_step(a - 1, b, &p),
                    (0, 1) => column_step(a, b, &p),
                    _ => -column_step(a, b - 1, &p),
                };
                a += dm;
                b += dn;
            }
            assert!(z.norm() < 1e-12, "{z}");
        }
    }

    #[test]
    fn psi_base_point_and_paths() {
        let p = generic();
        assert_eq!(psi(0, 0, &p), Complex64::new(0.0, 0.0));
        let l_path: Vec<_> = std::iter::repeat((1, 0)).take(7).chain(std::iter::repeat((0, -1)).take(4)).collect();
        let mut stair = Vec::new();
        for i in 0..7 {
            stair.push((1, 0));
            if i < 4 {
                stair.push((0, -1));
            }
        }
        let a = psi_along(&l_path, &p);
        let b = psi_along(&stair, &p);
        assert!((a - b).norm() < 1e-10);
        assert!((a - psi(7, -4, &p)).norm() < 1e-10);
    }

    #[test]
    fn ell_values() {
        let t = generic().triangle;
        assert_eq!(ell(0.0, 0.0, &t), Complex64::new(0.0, 0.0));
        assert_abs_diff_eq!((ell(1.0, 0.0, &t) - t.a * t.alpha / 2.0).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((ell(0.0, 1.0, &t) + t.c * t.gamma / 2.0).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn psi_stays_near_ell() {
        let p = generic();
        let mut worst: f64 = 0.0;
        for m in -40..=40 {
            for n in -40..=40 {
                worst = worst.max((psi(m, n, &p) - ell(m as f64, n as f64, &p.triangle)).norm());
            }
        }
        assert!(worst < 10.0, "{worst}");
    }

    #[test]
    fn rotate_lambda_identities() {
        let p = generic();
        assert_eq!(rotate_lambda(&p, 0, 0).lambda, p.lambda);
        let t = &p.triangle;
        let q = rotate_lambda(&p, 1, 0);
        assert_abs_diff_eq!((q.lambda - p.lambda * t.beta / t.gamma).norm(), 0.0, epsilon = 1e-14);
        for (m, n) in [(2, 3), (-4, 1)] {
            let q = rotate_lambda(&p, m, n);
            for (j, k) in [(0, 0), (1, -1), (5, 2)] {
                assert_abs_diff_eq!(q.scale(j, k), p.scale(j + m, k + n), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn margin_behaviour() {
        let p = Params::with_angle(Triangle::equilateral(), 0.37);
        assert!(genericity_margin(&p, 20) > 0.0);
        let bad = Params::new(p.triangle.clone(), degenerate_lambda(&p, 3, -2)).unwrap();
        assert!(genericity_margin(&bad, 20) < 1e-15);
        assert!(bad.scale(3, -2).abs() < 1e-15);
        let near = Params::new(p.triangle.clone(), lambda_with_margin(&p, 0, 0, 1e-3)).unwrap();
        assert_abs_diff_eq!(near.scale(0, 0).abs(), 1e-3, epsilon = 1e-12);
    }
}
