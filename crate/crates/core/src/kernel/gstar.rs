use super::kinv::{kt_inv, KernelWindow, KERNEL_TOL};
use crate::construction::{Params, TGraphWindow};
use crate::error::{Result, TGraphError};
use crate::geometry::cross;
use crate::lattice::{black_across, dual_edge, DualVertex, EdgeKind, HexCoord};
use crate::stats::{linear_fit, LinearFit};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::{HashMap, VecDeque};
use std::f64::consts::TAU;

/// Required distance between the cut and every vertex.
pub const CUT_MARGIN: f64 = 1e-6;
/// Face closure above this is an error.
pub const CLOSURE_LIMIT: f64 = 10.0 * KERNEL_TOL;
/// Outer end of the slope fit as a fraction of the covered radius.
const C_FIT_OUTER: f64 = 0.9;
const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// Half-line `origin + t direction`, `t >= 0`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Ray {
    pub origin: Complex64,
    pub direction: Complex64,
}

impl Ray {
    fn distance(&self, p: Complex64) -> f64 {
        let q = p - self.origin;
        let t = q.re * self.direction.re + q.im * self.direction.im;
        if t <= 0.0 {
            q.norm()
        } else {
            cross(self.direction, q).abs()
        }
    }

    /// `-1` if `p -> q` crosses the ray counterclockwise, `+1` if clockwise.
    pub fn crossing(&self, p: Complex64, q: Complex64) -> i32 {
        let e = q - p;
        let denom = cross(e, self.direction);
        if denom == 0.0 {
            return 0;
        }
        let s = cross(self.origin - p, self.direction) / denom;
        let t = cross(self.origin - p, e) / denom;
        if !(0.0..=1.0).contains(&s) || t <= 0.0 {
            return 0;
        }
        if cross(self.direction, e) > 0.0 {
            -1
        } else {
            1
        }
    }

    /// Angle of `p - origin` measured counterclockwise from the ray, in `[0, 2pi)`.
    pub fn arg(&self, p: Complex64) -> f64 {
        ((p - self.origin) / self.direction).arg().rem_euclid(TAU)
    }
}

#[derive(Clone, Copy, Debug)]
struct DualEdge {
    from: DualVertex,
    to: DualVertex,
    black: HexCoord,
    white: HexCoord,
    increment: f64,
    cut: i32,
}

/// The primitive of `K_T^-1(., w)` with a unit jump across a half-line.
#[derive(Clone, Debug, Serialize)]
pub struct GStarField {
    pub w: HexCoord,
    pub cut: Ray,
    /// Vertex where the field is 0.
    pub root: DualVertex,
    /// Largest face closure over whites where the kernel identity holds.
    pub closure_residual: f64,
    /// Largest face closure over whites touching the prescribed kernel ring.
    pub truncation_residual: f64,
    /// Largest mismatch between an edge increment and the tree values.
    pub tree_mismatch: f64,
    pub edges: usize,
    #[serde(skip)]
    edge_map: HashMap<((i64, i64), (i64, i64)), (f64, i32)>,
    #[serde(skip)]
    values: HashMap<(i64, i64), f64>,
    #[serde(skip)]
    blacks: Vec<(HexCoord, DualVertex, [DualVertex; 2], bool)>,
    #[serde(skip)]
    positions: HashMap<(i64, i64), Complex64>,
}

impl GStarField {
    pub fn value(&self, v: DualVertex) -> Option<f64> {
        self.values.get(&(v.m, v.n)).copied()
    }

    pub fn position(&self, v: DualVertex) -> Option<Complex64> {
        self.positions.get(&(v.m, v.n)).copied()
    }

    /// Sum of `Re(K_T^-1 (x+ - x-))` along a closed vertex loop, and the net
    /// cut bookkeeping, if every step is an edge of the field.
    pub fn loop_sum(&self, cycle: &[DualVertex]) -> Option<(f64, i32)> {
        let (mut raw, mut cut) = (0.0, 0);
        for k in 0..cycle.len() {
            let (a, b) = (cycle[k], cycle[(k + 1) % cycle.len()]);
            let (a, b) = ((a.m, a.n), (b.m, b.n));
            if let Some(&(inc, c)) = self.edge_map.get(&(a, b)) {
                raw += inc - c as f64;
                cut += c;
            } else {
                let &(inc, c) = self.edge_map.get(&(b, a))?;
                raw -= inc - c as f64;
                cut -= c;
            }
        }
        Some((raw, cut))
    }

    /// `(b, psi(b), G(psi(b)))` for every black whose vertex carries a value.
    pub fn black_values(&self) -> Vec<(HexCoord, Complex64, f64)> {
        self.blacks
            .iter()
            .filter_map(|(b, mid, _, _)| Some((*b, self.position(*mid)?, self.value(*mid)?)))
            .collect()
    }

    /// Largest `|mean of G over the two jump targets - G|` over blacks whose
    /// segment does not meet the cut.
    pub fn harmonicity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (_, mid, ends, on_cut) in &self.blacks {
            if *on_cut {
                continue;
            }
            let vals = (self.value(*mid), self.value(ends[0]), self.value(ends[1]));
            let (Some(g), Some(g1), Some(g2)) = vals else { continue };
            let p = self.position(*mid).unwrap();
            let r1 = 1.0 / (self.position(ends[0]).unwrap() - p).norm();
            let r2 = 1.0 / (self.position(ends[1]).unwrap() - p).norm();
            worst = worst.max(((r1 * g1 + r2 * g2) / (r1 + r2) - g).abs());
        }
        worst
    }
}

/// Rotate `d` by golden-angle steps until the ray from `origin` clears every
/// vertex of the window by `CUT_MARGIN`.
pub fn choose_cut(window: &TGraphWindow, origin: Complex64, d: Complex64) -> Result<Ray> {
    if d.norm() == 0.0 {
        return Err(TGraphError::InvalidArgument("cut direction is zero".into()));
    }
    let r = window.radius();
    let pts: Vec<Complex64> = (-r..=r + 1)
        .flat_map(|m| (-r - 1..=r + 1).map(move |n| DualVertex::new(m, n)))
        .filter_map(|v| window.psi(v))
        .collect();
    let mut dir = d / d.norm();
    for _ in 0..1000 {
        let ray = Ray { origin, direction: dir };
        if pts.iter().all(|p| ray.distance(*p) >= CUT_MARGIN) {
            return Ok(ray);
        }
        dir *= Complex64::from_polar(1.0, GOLDEN_ANGLE * 1e-3);
    }
    Err(TGraphError::Ambiguous("no cut direction clears the vertices".into()))
}

/// Integrate the increments `Re(K_T^-1(b, w) (x+ - x-))` over a spanning tree
/// of the dual edges where the kernel is known, adding `-1` on edges that
/// cross the cut counterclockwise.
pub fn gstar_build(window: &TGraphWindow, w: HexCoord, d: Complex64, kernel: &KernelWindow) -> Result<GStarField> {
    if w.is_black() || kernel.w0 != w {
        return Err(TGraphError::InvalidArgument(format!("kernel based at {} cannot serve {w}", kernel.w0)));
    }
    let params: &Params = window.params();
    let r = window.radius();
    if w.m.abs().max(w.n.abs()) >= r {
        return Err(TGraphError::OutsideWindow(format!("{w}")));
    }
    let origin = window.face(w.m, w.n).centroid();
    let cut = choose_cut(window, origin, d)?;
    let mut kt_cache: HashMap<(i64, i64), Complex64> = HashMap::new();
    let mut edges = Vec::new();
    for m in -r - 1..=r + 1 {
        for n in -r - 2..=r + 1 {
            for kind in EdgeKind::ALL {
                let (from, to) = dual_edge(m, n, kind);
                let (Some(p), Some(q)) = (window.psi(from), window.psi(to)) else { continue };
                let (bm, bn) = black_across(m, n, kind);
                let black = HexCoord::black(bm, bn);
                if kernel.value(black).is_none() {
                    continue;
                }
                let k = match kt_cache.get(&(bm, bn)) {
                    Some(k) => *k,
                    None => {
                        let k = kt_inv(black, w, kernel, params)?;
                        kt_cache.insert((bm, bn), k);
                        k
                    }
                };
                let cross = cut.crossing(p, q);
                edges.push(DualEdge {
                    from,
                    to,
                    black,
                    white: HexCoord::white(m, n),
                    increment: (k * (q - p)).re + cross as f64,
                    cut: cross,
                });
            }
        }
    }
    // face closure, independent of the tree
    let mut face_sum: HashMap<(i64, i64), (f64, u8)> = HashMap::new();
    for e in &edges {
        let s = face_sum.entry((e.white.m, e.white.n)).or_insert((0.0, 0));
        s.0 += e.increment;
        s.1 += 1;
    }
    let (mut closure, mut truncation): (f64, f64) = (0.0, 0.0);
    for (&(m, n), &(s, count)) in &face_sum {
        if count < 3 {
            continue;
        }
        let white = HexCoord::white(m, n);
        if kernel.is_interior_white(white) {
            if s.abs() > CLOSURE_LIMIT {
                return Err(TGraphError::Closure { face: white, residual: s.abs(), limit: CLOSURE_LIMIT });
            }
            closure = closure.max(s.abs());
        } else {
            truncation = truncation.max(s.abs());
        }
    }
    // spanning tree by breadth-first search from the vertex of b(0,0)
    let mut adj: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, e) in edges.iter().enumerate() {
        adj.entry((e.from.m, e.from.n)).or_default().push(i);
        adj.entry((e.to.m, e.to.n)).or_default().push(i);
    }
    let root = window.vertex_dual(0, 0);
    if !adj.contains_key(&(root.m, root.n)) {
        return Err(TGraphError::OutsideWindow(format!("root {root} has no kernel data")));
    }
    let mut values = HashMap::from([((root.m, root.n), 0.0)]);
    let mut queue = VecDeque::from([(root.m, root.n)]);
    while let Some(v) = queue.pop_front() {
        let g = values[&v];
        for &i in &adj[&v] {
            let e = &edges[i];
            let (other, val) = if (e.from.m, e.from.n) == v {
                ((e.to.m, e.to.n), g + e.increment)
            } else {
                ((e.from.m, e.from.n), g - e.increment)
            };
            if let std::collections::hash_map::Entry::Vacant(slot) = values.entry(other) {
                slot.insert(val);
                queue.push_back(other);
            }
        }
    }
    let tree_mismatch = edges
        .iter()
        .map(|e| (values[&(e.to.m, e.to.n)] - values[&(e.from.m, e.from.n)] - e.increment).abs())
        .fold(0.0, f64::max);
    let mut on_cut: HashMap<(i64, i64), bool> = HashMap::new();
    for e in &edges {
        *on_cut.entry((e.black.m, e.black.n)).or_default() |= e.cut != 0;
    }
    let mut blacks = Vec::new();
    for (&(m, n), &crossed) in &on_cut {
        if !window.contains_black(m, n) {
            continue;
        }
        let s = window.segment(m, n);
        blacks.push((HexCoord::black(m, n), s.mid, s.ends, crossed));
    }
    blacks.sort_by_key(|b| (b.0.m, b.0.n));
    let positions = values
        .keys()
        .map(|&(m, n)| ((m, n), window.psi(DualVertex::new(m, n)).unwrap()))
        .collect();
    let edge_map = edges
        .iter()
        .map(|e| (((e.from.m, e.from.n), (e.to.m, e.to.n)), (e.increment, e.cut)))
        .collect();
    Ok(GStarField {
        w,
        edge_map,
        cut,
        root,
        closure_residual: closure,
        truncation_residual: truncation,
        tree_mismatch,
        edges: edges.len(),
        values,
        blacks,
        positions,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GStarAsymptotics {
    /// `Im(conj(lambda) conj(f(w))) / Re(conj(lambda) conj(f(w)))`
    pub c_formula: f64,
    /// Slope of `2pi G - arg_d` against `log r` over `[r_min, 0.9 rho]`.
    pub c_fit: LinearFit,
    /// Radius of the disc around the cut origin covered by the field.
    pub rho: f64,
    /// Constant fitted on the annulus `[rho / 3, rho / 2]` with `c = c_formula`.
    pub constant: f64,
    /// `sup |G - target|` over the annulus.
    pub sup_deviation: f64,
    /// `(r, max |G - target| r)` per unit-width shell from `r_min` to `rho / 2`.
    pub scaled_deviation: Vec<(f64, f64)>,
    pub max_scaled_deviation: f64,
}

/// Compare a field with `(1/2pi)(arg_d(x - w) + c log|x - w|) + C`.
pub fn gstar_asymptotic_check(field: &GStarField, params: &Params, r_min: f64) -> GStarAsymptotics {
    let z = params.lambda.conj() * params.f(field.w.m, field.w.n).conj();
    let c_formula = z.im / z.re;
    let o = field.cut.origin;
    let rho = coverage(field);
    let samples: Vec<(f64, f64, f64)> = field
        .black_values()
        .into_iter()
        .map(|(_, x, g)| ((x - o).norm(), field.cut.arg(x), g))
        .collect();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &(r, a, g) in &samples {
        if r >= r_min && r <= C_FIT_OUTER * rho {
            xs.push(r.ln());
            ys.push(TAU * g - a);
        }
    }
    let c_fit = linear_fit(&xs, &ys);
    let target = |r: f64, a: f64| (a + c_formula * r.ln()) / TAU;
    let annulus: Vec<f64> = samples
        .iter()
        .filter(|s| s.0 >= rho / 3.0 && s.0 <= rho / 2.0)
        .map(|&(r, a, g)| g - target(r, a))
        .collect();
    let constant = annulus.iter().sum::<f64>() / annulus.len().max(1) as f64;
    let sup_deviation = annulus.iter().map(|d| (d - constant).abs()).fold(0.0, f64::max);
    let mut shells: Vec<(f64, f64)> = Vec::new();
    let mut r0 = r_min;
    while r0 + 1.0 <= rho / 2.0 {
        let worst = samples
            .iter()
            .filter(|s| s.0 >= r0 && s.0 < r0 + 1.0)
            .map(|&(r, a, g)| (g - target(r, a) - constant).abs() * r)
            .fold(0.0, f64::max);
        shells.push((r0, worst));
        r0 += 1.0;
    }
    let max_scaled_deviation = shells.iter().map(|s| s.1).fold(0.0, f64::max);
    GStarAsymptotics {
        c_formula,
        c_fit,
        rho,
        constant,
        sup_deviation,
        scaled_deviation: shells,
        max_scaled_deviation,
    }
}

/// Distance from the cut origin to the nearest vertex missing some edge.
fn coverage(field: &GStarField) -> f64 {
    let mut degree: HashMap<(i64, i64), u8> = HashMap::new();
    for (_, mid, ends, _) in &field.blacks {
        for v in [mid, &ends[0], &ends[1]] {
            *degree.entry((v.m, v.n)).or_default() += 1;
        }
    }
    let o = field.cut.origin;
    field
        .values
        .keys()
        .filter(|k| degree.get(k).copied().unwrap_or(0) < 3)
        .map(|k| (field.positions[k] - o).norm())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_window, Angle, Triangle};
    use crate::kernel::kinv_exact;
    use crate::lattice::face_dual_vertices;

    fn params() -> Params {
        let t = Triangle::from_angles(Angle::radians(0.8), Angle::radians(1.3), Angle::radians(std::f64::consts::PI - 2.1)).unwrap();
        Params::with_angle(t, 1.1)
    }

    fn field(r: i64) -> GStarField {
        let p = params();
        let w0 = HexCoord::white(0, 0);
        let k = kinv_exact(w0, &p, r).unwrap();
        let win = build_window(&p, r + 2).unwrap();
        gstar_build(&win, w0, Complex64::new(0.0, 1.0), &k).unwrap()
    }

    #[test]
    fn ray_crossing_orientation() {
        let ray = Ray { origin: Complex64::new(0.0, 0.0), direction: Complex64::new(1.0, 0.0) };
        let (p, q) = (Complex64::new(1.0, -1.0), Complex64::new(1.0, 1.0));
        assert_eq!(ray.crossing(p, q), -1);
        assert_eq!(ray.crossing(q, p), 1);
        assert_eq!(ray.crossing(-p, -q), 0);
        assert!((ray.arg(Complex64::new(0.0, 1.0)) - TAU / 4.0).abs() < 1e-15);
        assert!((ray.arg(Complex64::new(0.0, -1.0)) - 3.0 * TAU / 4.0).abs() < 1e-15);
    }

    #[test]
    fn cut_clears_vertices() {
        let p = params();
        let win = build_window(&p, 12).unwrap();
        let origin = win.face(0, 0).centroid();
        // aim straight at a vertex
        let v = win.psi(DualVertex::new(3, 2)).unwrap();
        let ray = choose_cut(&win, origin, v - origin).unwrap();
        assert!((ray.direction - (v - origin) / (v - origin).norm()).norm() > 0.0);
        for m in -12..=13 {
            for n in -13..=13 {
                if let Some(x) = win.psi(DualVertex::new(m, n)) {
                    assert!(ray.distance(x) >= CUT_MARGIN);
                }
            }
        }
    }

    #[test]
    fn closure_and_monodromy() {
        let g = field(20);
        assert!(g.closure_residual <= CLOSURE_LIMIT);
        assert!(g.tree_mismatch.is_finite());
        for m in -8..=8 {
            for n in -8..=8 {
                let w = HexCoord::white(m, n);
                let (raw, cut) = g.loop_sum(&face_dual_vertices(w)).unwrap();
                let expected = if (m, n) == (0, 0) { 1.0 } else { 0.0 };
                assert!((raw - expected).abs() < 1e-9, "{w}: {raw}");
                assert!((raw + cut as f64).abs() < 1e-9);
                if (m, n) == (0, 0) {
                    assert_eq!(cut, -1);
                }
            }
        }
        // a loop around the three faces w(0,0), w(1,0), w(0,1) and their blacks
        let big: Vec<DualVertex> = [(0, 0), (1, 0), (2, 0), (2, 1), (1, 2), (0, 2), (0, 1)]
            .iter()
            .map(|&(m, n)| DualVertex::new(m, n))
            .collect();
        if let Some((raw, cut)) = g.loop_sum(&big) {
            assert!((raw - 1.0).abs() < 1e-9 && cut == -1);
        }
    }

    #[test]
    fn cut_jump_is_one_plus_smooth_part() {
        let g = field(20);
        let mut seen = 0;
        for (&(a, b), &(inc, c)) in &g.edge_map {
            let pa = g.positions[&a];
            if c != 0 && (6.0..10.0).contains(&(pa - g.cut.origin).norm()) {
                let jump = g.values[&b] - g.values[&a];
                assert!((jump - inc).abs() < 1e-9);
                assert!((jump - c as f64).abs() < 0.1, "{jump}");
                seen += 1;
            }
        }
        assert!(seen >= 3, "{seen}");
    }

    #[test]
    fn harmonicity_improves_with_box() {
        let (h20, h40) = (field(20).harmonicity_residual(), field(40).harmonicity_residual());
        assert!(h40 * 2.0 <= h20, "{h20} {h40}");
    }

    #[test]
    fn asymptotics() {
        let p = params();
        let g = field(40);
        let a = gstar_asymptotic_check(&g, &p, 5.0);
        let z = p.lambda.conj() * p.f(0, 0).conj();
        assert!((a.c_formula - z.im / z.re).abs() < 1e-12);
        assert!((a.c_fit.slope / a.c_formula - 1.0).abs() < 0.01, "{} {}", a.c_fit.slope, a.c_formula);
        assert!(a.max_scaled_deviation < 1.0);
    }
}
