use crate::analysis::linsolve::{conjugate_gradient, SolveStats};
use crate::construction::{ell, g_black, k_weight, Params, Triangle};
use crate::error::{Result, TGraphError};
use crate::lattice::{white_neighbors, HexCoord};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Residual bound for `K K^-1 = delta` on interior whites.
pub const KERNEL_TOL: f64 = 1e-10;
const CG_TOL: f64 = 1e-12;
const CG_MAX_ITERATIONS: usize = 200_000;

/// Leading term of the bounded inverse:
/// `(1/2pi) Im(conj(f(w)) g(b) / (ell(b) - ell(w)))`.
pub fn kinv_asymptotic(b: HexCoord, w: HexCoord, t: &Triangle) -> Result<f64> {
    if !b.is_black() || w.is_black() {
        return Err(TGraphError::InvalidArgument(format!("expected a black and a white vertex, got {b}, {w}")));
    }
    let (dm, dn) = (b.m - w.m, b.n - w.n);
    if (dm, dn) == (0, 0) {
        return Err(TGraphError::InvalidArgument(format!("{b} and {w} have the same lattice coordinates")));
    }
    Ok(kinv_asymptotic_offset(dm, dn, t))
}

/// `kinv_asymptotic` as a function of the offset `b - w`, which is all it
/// depends on.
pub(crate) fn kinv_asymptotic_offset(dm: i64, dn: i64, t: &Triangle) -> f64 {
    // conj(f(w)) g(b) = alpha f(b - w)
    let num = g_black(dm, dn, t);
    let z = ell(dm as f64, dn as f64, t);
    (num / z).im / (2.0 * PI)
}

/// `K^-1(., w0)` on the blacks `b` with `max(|m - m0|, |n - n0|) <= R`.
///
/// Values on the outer ring are the asymptotic ones; inside, the asymptotic
/// values are corrected by the smallest weighted perturbation that makes
/// `sum_b K(w, b) x(b) = [w = w0]` hold at every white whose three
/// neighbours lie strictly inside the ring.
#[derive(Clone, Debug, Serialize)]
pub struct KernelWindow {
    pub w0: HexCoord,
    pub radius: i64,
    /// Row-major over offsets `(dm, dn)` in `[-R, R]^2`.
    values: Vec<f64>,
    pub max_residual: f64,
    pub solve: SolveStats,
}

impl KernelWindow {
    fn side(&self) -> i64 {
        2 * self.radius + 1
    }

    /// `K^-1(b, w0)`, if `b` lies in the box.
    pub fn value(&self, b: HexCoord) -> Option<f64> {
        let (dm, dn) = (b.m - self.w0.m, b.n - self.w0.n);
        if !b.is_black() || dm.abs().max(dn.abs()) > self.radius {
            return None;
        }
        Some(self.values[((dm + self.radius) * self.side() + dn + self.radius) as usize])
    }

    /// Whether `b` was solved for rather than prescribed.
    pub fn is_interior(&self, b: HexCoord) -> bool {
        (b.m - self.w0.m).abs().max((b.n - self.w0.n).abs()) < self.radius
    }

    /// Whether the identity `K K^-1 = delta` is enforced at `w`.
    pub fn is_interior_white(&self, w: HexCoord) -> bool {
        !w.is_black() && white_neighbors(w.m, w.n).iter().all(|(b, _)| self.is_interior(*b))
    }

    /// `sum_b K(w, b) K^-1(b, w0) - [w = w0]`, if all three blacks are in the box.
    pub fn residual_at(&self, w: HexCoord, t: &Triangle) -> Option<f64> {
        let mut s = if w == self.w0 { -1.0 } else { 0.0 };
        for (b, kind) in white_neighbors(w.m, w.n) {
            s += k_weight(kind, t) * self.value(b)?;
        }
        Some(s)
    }

    /// `(m, n, value)` rows for export.
    pub fn rows(&self) -> Vec<(i64, i64, f64)> {
        let r = self.radius;
        let mut out = Vec::with_capacity(self.values.len());
        for dm in -r..=r {
            for dn in -r..=r {
                let b = HexCoord::black(self.w0.m + dm, self.w0.n + dn);
                out.push((b.m, b.n, self.value(b).unwrap()));
            }
        }
        out
    }
}

/// Solve for `K^-1(., w0)` in a box of radius `R >= 10`.
pub fn kinv_exact(w0: HexCoord, params: &Params, radius: i64) -> Result<KernelWindow> {
    kinv_solve(w0, &params.triangle, radius, 1.0)
}

/// `sign` multiplies the asymptotic data; only `1.0` gives the bounded inverse.
pub(crate) fn kinv_solve(w0: HexCoord, t: &Triangle, radius: i64, sign: f64) -> Result<KernelWindow> {
    if w0.is_black() {
        return Err(TGraphError::InvalidArgument(format!("{w0} is not white")));
    }
    if radius < 10 {
        return Err(TGraphError::InvalidArgument(format!("kernel radius {radius} < 10")));
    }
    let r = radius;
    let side = 2 * r + 1;
    let idx = |dm: i64, dn: i64| ((dm + r) * side + dn + r) as usize;
    let nb = (side * side) as usize;
    let mut x = vec![0.0; nb];
    let mut weight = vec![0.0; nb];
    for dm in -r..=r {
        for dn in -r..=r {
            let i = idx(dm, dn);
            if (dm, dn) != (0, 0) {
                x[i] = sign * kinv_asymptotic_offset(dm, dn, t);
            }
            let rho = ell(dm as f64, dn as f64, t).norm();
            // inverse cost of changing x(b), largest near w0 where the
            // asymptotic data is worst; zero on the prescribed ring
            weight[i] = if dm.abs().max(dn.abs()) < r { 1.0 / (1.0 + rho * rho).sqrt() } else { 0.0 };
        }
    }
    // rows: whites with all three blacks strictly inside the ring
    let mut rows: Vec<[(usize, f64); 3]> = Vec::new();
    let mut rhs = Vec::new();
    for i in -r + 2..=r - 1 {
        for j in -r + 1..=r - 2 {
            let mut row = [(0usize, 0.0); 3];
            let mut s = 0.0;
            for (k, (b, kind)) in white_neighbors(i, j).into_iter().enumerate() {
                let col = idx(b.m, b.n);
                row[k] = (col, k_weight(kind, t));
                s += row[k].1 * x[col];
            }
            rows.push(row);
            rhs.push(if (i, j) == (0, 0) { 1.0 } else { 0.0 } - s);
        }
    }
    // min over delta of sum delta^2 / weight subject to A delta = rhs:
    // delta = W A^T z with (A W A^T) z = rhs.
    let apply = |z: &[f64], out: &mut [f64]| {
        let mut tmp = vec![0.0; nb];
        for (row, zi) in rows.iter().zip(z) {
            for &(c, k) in row {
                tmp[c] += k * zi;
            }
        }
        for (c, v) in tmp.iter_mut().enumerate() {
            *v *= weight[c];
        }
        for (o, row) in out.iter_mut().zip(&rows) {
            *o = row.iter().map(|&(c, k)| k * tmp[c]).sum();
        }
    };
    let mut z = vec![0.0; rows.len()];
    let stats = conjugate_gradient(apply, &rhs, &mut z, CG_TOL, CG_MAX_ITERATIONS);
    for (row, zi) in rows.iter().zip(&z) {
        for &(c, k) in row {
            x[c] += weight[c] * k * zi;
        }
    }
    let mut kw = KernelWindow { w0, radius, values: x, max_residual: 0.0, solve: stats };
    let mut worst: f64 = 0.0;
    for i in -r + 2..=r - 1 {
        for j in -r + 1..=r - 2 {
            let w = HexCoord::white(w0.m + i, w0.n + j);
            worst = worst.max(kw.residual_at(w, t).unwrap().abs());
        }
    }
    kw.max_residual = worst;
    if worst > KERNEL_TOL {
        return Err(TGraphError::NoConvergence { iterations: stats.iterations, residual: worst });
    }
    Ok(kw)
}

/// `K_T^-1(b, w) = K^-1(b, w) / (Re(conj(lambda) conj(f(w))) lambda g(b))`.
pub fn kt_inv(b: HexCoord, w: HexCoord, kernel: &KernelWindow, params: &Params) -> Result<Complex64> {
    if w != kernel.w0 {
        return Err(TGraphError::InvalidArgument(format!("kernel is based at {}, not {w}", kernel.w0)));
    }
    let k = kernel
        .value(b)
        .ok_or_else(|| TGraphError::OutsideWindow(format!("{b} outside the kernel box")))?;
    let s = params.scale(w.m, w.n);
    if s.abs() < crate::construction::ZERO_SCALE {
        return Err(TGraphError::DegenerateFace { face: w, scale: s });
    }
    Ok(k / (s * params.lambda * g_black(b.m, b.n, &params.triangle)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{lambda_with_margin, phi, Angle};
    use crate::stats::linear_fit;

    fn generic() -> Params {
        let t = Triangle::from_angles(Angle::radians(0.8), Angle::radians(1.3), Angle::radians(PI - 2.1)).unwrap();
        Params::with_angle(t, 1.1)
    }

    /// Probabilities `K(w,b) K^-1(b,w)` of the three edges at `w0`.
    fn edge_probabilities(k: &KernelWindow, t: &Triangle) -> [f64; 3] {
        let w = k.w0;
        let mut out = [0.0; 3];
        for (i, (b, kind)) in white_neighbors(w.m, w.n).into_iter().enumerate() {
            out[i] = k_weight(kind, t) * k.value(b).unwrap();
        }
        out
    }

    #[test]
    fn asymptotic_decay_and_errors() {
        let t = generic().triangle;
        let w = HexCoord::white(2, -1);
        for dm in -6i64..=6 {
            for dn in -6i64..=6 {
                if (dm, dn) == (0, 0) {
                    continue;
                }
                let b = HexCoord::black(2 + dm, -1 + dn);
                let v = kinv_asymptotic(b, w, &t).unwrap();
                let z = ell(dm as f64, dn as f64, &t).norm();
                assert!(v.abs() <= 1.0 / (2.0 * PI * z) + 1e-15);
            }
        }
        assert!(kinv_asymptotic(HexCoord::black(2, -1), w, &t).is_err());
        assert!(kinv_asymptotic(w, w, &t).is_err());
    }

    #[test]
    fn interior_identity_and_edge_probabilities() {
        let p = generic();
        let t = &p.triangle;
        let k = kinv_exact(HexCoord::white(0, 0), &p, 20).unwrap();
        assert!(k.max_residual <= KERNEL_TOL);
        for w in [HexCoord::white(0, 0), HexCoord::white(5, -3), HexCoord::white(-17, 17)] {
            assert!(k.is_interior_white(w));
            assert!(k.residual_at(w, t).unwrap().abs() <= KERNEL_TOL);
        }
        // the three edge probabilities at w0 are the opposite angles over pi
        let probs = edge_probabilities(&k, t);
        for (pr, angle) in probs.iter().zip(&t.angles) {
            assert!((pr - angle.radians / PI).abs() < 1e-3, "{probs:?}");
        }
    }

    #[test]
    fn only_the_stated_sign_is_the_bounded_inverse() {
        let t = Triangle::equilateral();
        let w0 = HexCoord::white(0, 0);
        let good = kinv_solve(w0, &t, 20, 1.0).unwrap();
        let bad = kinv_solve(w0, &t, 20, -1.0).unwrap();
        let err = |k: &KernelWindow| edge_probabilities(k, &t).iter().map(|p| (p - 1.0 / 3.0).abs()).fold(0.0, f64::max);
        assert!(err(&good) * 5.0 < err(&bad), "{} {}", err(&good), err(&bad));
    }

    #[test]
    fn agreement_with_asymptotics_and_nested_boxes() {
        let p = generic();
        let t = &p.triangle;
        let w0 = HexCoord::white(0, 0);
        let k20 = kinv_exact(w0, &p, 20).unwrap();
        let k30 = kinv_exact(w0, &p, 30).unwrap();
        let k40 = kinv_exact(w0, &p, 40).unwrap();
        let mut scaled: f64 = 0.0;
        let (mut gap_a, mut gap_b): (f64, f64) = (0.0, 0.0);
        for dm in -20i64..=20 {
            for dn in -20i64..=20 {
                let b = HexCoord::black(dm, dn);
                let r = ell(dm as f64, dn as f64, t).norm();
                if (5.0..=10.0).contains(&r) {
                    scaled = scaled.max((k20.value(b).unwrap() - kinv_asymptotic(b, w0, t).unwrap()).abs() * r * r);
                }
                if dm.abs().max(dn.abs()) <= 8 {
                    gap_a = gap_a.max((k20.value(b).unwrap() - k30.value(b).unwrap()).abs());
                    gap_b = gap_b.max((k30.value(b).unwrap() - k40.value(b).unwrap()).abs());
                }
            }
        }
        assert!(scaled < 1.0, "{scaled}");
        assert!(gap_b < gap_a, "{gap_a} {gap_b}");
        assert!(gap_a < 1e-3);
    }

    #[test]
    fn kt_inverse_identity() {
        let p = generic();
        let w0 = HexCoord::white(0, 0);
        let k = kinv_exact(w0, &p, 20).unwrap();
        for (m, n) in [(0, 0), (1, 0), (3, -4), (-6, 9)] {
            let w = HexCoord::white(m, n);
            let mut s = Complex64::new(if (m, n) == (0, 0) { -1.0 } else { 0.0 }, 0.0);
            for (b, _) in white_neighbors(m, n) {
                s += phi(w, b, &p).unwrap() * kt_inv(b, w0, &k, &p).unwrap();
            }
            assert!(s.norm() <= 1e-9, "{w}: {s}");
        }
        let b = HexCoord::black(4, 1);
        let z = kt_inv(b, w0, &k, &p).unwrap();
        assert!((z.norm() - k.value(b).unwrap().abs() / p.scale(0, 0).abs()).abs() < 1e-14);
        assert!(kt_inv(b, HexCoord::white(1, 1), &k, &p).is_err());
        assert!(kt_inv(HexCoord::black(50, 0), w0, &k, &p).is_err());
    }

    #[test]
    fn kt_inverse_blows_up_like_inverse_margin() {
        let base = generic();
        let w0 = HexCoord::white(0, 0);
        let k = kinv_exact(w0, &base, 10).unwrap();
        let b = HexCoord::black(2, 1);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for e in 1..=5 {
            let margin = 10f64.powi(-e);
            let p = Params::new(base.triangle.clone(), lambda_with_margin(&base, 0, 0, margin)).unwrap();
            xs.push(p.scale(0, 0).abs().ln());
            ys.push(kt_inv(b, w0, &k, &p).unwrap().norm().ln());
        }
        let fit = linear_fit(&xs, &ys);
        assert!((fit.slope + 1.0).abs() < 1e-6, "{}", fit.slope);
        let degenerate = Params::new(base.triangle.clone(), crate::construction::degenerate_lambda(&base, 0, 0)).unwrap();
        assert!(kt_inv(b, w0, &k, &degenerate).is_err());
    }
}
