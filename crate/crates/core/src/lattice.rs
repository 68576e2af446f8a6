//! Combinatorics of the hexagonal lattice and its dual (a triangular lattice).
//!
//! Black vertex `b(m,n)` sits at `m*e1 + n*e2` with `e1 = (sqrt3, 0)` and
//! `e2 = (sqrt3/2, 3/2)`; the white vertex `w(m,n)` sits one unit above it, so
//! `w(m,n) b(m,n)` is a vertical edge. The dual vertex `v(m,n)` is the centre of
//! the hexagon immediately to the left of that vertical edge.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    Black,
    White,
}

/// A vertex of the hexagonal lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HexCoord {
    pub m: i64,
    pub n: i64,
    pub color: Color,
}

impl HexCoord {
    pub const fn black(m: i64, n: i64) -> Self {
        HexCoord { m, n, color: Color::Black }
    }

    pub const fn white(m: i64, n: i64) -> Self {
        HexCoord { m, n, color: Color::White }
    }

    pub fn is_black(&self) -> bool {
        self.color == Color::Black
    }

    /// The three neighbours together with the kind of the connecting edge.
    pub fn neighbors(&self) -> [(HexCoord, EdgeKind); 3] {
        match self.color {
            Color::Black => black_neighbors(self.m, self.n),
            Color::White => white_neighbors(self.m, self.n),
        }
    }

    /// Position in the reference embedding (regular hexagons of side 1).
    pub fn embedding(&self) -> (f64, f64) {
        let (x, y) = lattice_point(self.m, self.n);
        match self.color {
            Color::Black => (x, y),
            Color::White => (x, y + 1.0),
        }
    }
}

impl fmt::Display for HexCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.color {
            Color::Black => 'b',
            Color::White => 'w',
        };
        write!(f, "{}({},{})", c, self.m, self.n)
    }
}

/// A vertex of the dual lattice (a hexagonal face of the primal one).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DualVertex {
    pub m: i64,
    pub n: i64,
}

impl DualVertex {
    pub const fn new(m: i64, n: i64) -> Self {
        DualVertex { m, n }
    }

    pub fn embedding(&self) -> (f64, f64) {
        let (x, y) = lattice_point(self.m, self.n);
        (x - SQRT3 / 2.0, y + 0.5)
    }
}

impl fmt::Display for DualVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v({},{})", self.m, self.n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Vertical,
    NeSw,
    NwSe,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 3] = [EdgeKind::Vertical, EdgeKind::NeSw, EdgeKind::NwSe];
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

fn lattice_point(m: i64, n: i64) -> (f64, f64) {
    let (m, n) = (m as f64, n as f64);
    (SQRT3 * m + SQRT3 / 2.0 * n, 1.5 * n)
}

/// Neighbours of `b(m,n)`: `w(m,n)`, `w(m,n-1)`, `w(m+1,n-1)`.
pub fn black_neighbors(m: i64, n: i64) -> [(HexCoord, EdgeKind); 3] {
    [
        (HexCoord::white(m, n), EdgeKind::Vertical),
        (HexCoord::white(m, n - 1), EdgeKind::NeSw),
        (HexCoord::white(m + 1, n - 1), EdgeKind::NwSe),
    ]
}

/// Neighbours of `w(m,n)`: `b(m,n)`, `b(m,n+1)`, `b(m-1,n+1)`.
pub fn white_neighbors(m: i64, n: i64) -> [(HexCoord, EdgeKind); 3] {
    [
        (HexCoord::black(m, n), EdgeKind::Vertical),
        (HexCoord::black(m, n + 1), EdgeKind::NeSw),
        (HexCoord::black(m - 1, n + 1), EdgeKind::NwSe),
    ]
}

/// Black endpoint of the edge of the given kind at the white vertex `w(m,n)`.
pub fn black_across(m: i64, n: i64, kind: EdgeKind) -> (i64, i64) {
    match kind {
        EdgeKind::Vertical => (m, n),
        EdgeKind::NeSw => (m, n + 1),
        EdgeKind::NwSe => (m - 1, n + 1),
    }
}

/// Kind of the edge between `w` and `b`, if they are adjacent.
pub fn edge_kind(w: (i64, i64), b: (i64, i64)) -> Option<EdgeKind> {
    EdgeKind::ALL
        .into_iter()
        .find(|&k| black_across(w.0, w.1, k) == b)
}

/// The three dual vertices around a primal vertex, counterclockwise.
///
/// Around a white vertex the list starts from the lower-left hexagon.
pub fn face_dual_vertices(x: HexCoord) -> [DualVertex; 3] {
    let (m, n) = (x.m, x.n);
    match x.color {
        Color::White => [
            DualVertex::new(m, n),
            DualVertex::new(m + 1, n),
            DualVertex::new(m, n + 1),
        ],
        Color::Black => [
            DualVertex::new(m, n),
            DualVertex::new(m + 1, n - 1),
            DualVertex::new(m + 1, n),
        ],
    }
}

/// The dual edge crossing the primal edge `(w(m,n), b)` of the given kind,
/// oriented so that the white vertex lies on its left.
pub fn dual_edge(m: i64, n: i64, kind: EdgeKind) -> (DualVertex, DualVertex) {
    match kind {
        EdgeKind::Vertical => (DualVertex::new(m, n), DualVertex::new(m + 1, n)),
        EdgeKind::NeSw => (DualVertex::new(m + 1, n), DualVertex::new(m, n + 1)),
        EdgeKind::NwSe => (DualVertex::new(m, n + 1), DualVertex::new(m, n)),
    }
}

/// Rotation of the lattice by `2pi/3` about `w(0,0)`, restricted to black vertices.
pub fn rotate_black_120(m: i64, n: i64) -> (i64, i64) {
    (-m - n, 1 + m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn signed_area(p: [(f64, f64); 3]) -> f64 {
        let (a, b, c) = (p[0], p[1], p[2]);
        0.5 * ((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0))
    }

    #[test]
    fn neighbors_of_origin() {
        let nb = black_neighbors(0, 0);
        assert_eq!(nb[0], (HexCoord::white(0, 0), EdgeKind::Vertical));
        assert_eq!(nb[1], (HexCoord::white(0, -1), EdgeKind::NeSw));
        assert_eq!(nb[2], (HexCoord::white(1, -1), EdgeKind::NwSe));

        let nw = white_neighbors(0, 0);
        assert_eq!(nw[0].0, HexCoord::black(0, 0));
        assert_eq!(nw[1].0, HexCoord::black(0, 1));
        assert_eq!(nw[2].0, HexCoord::black(-1, 1));
    }

    #[test]
    fn translated_neighbors() {
        let nb: Vec<_> = black_neighbors(5, 3).iter().map(|x| x.0).collect();
        assert_eq!(nb, vec![HexCoord::white(5, 3), HexCoord::white(5, 2), HexCoord::white(6, 2)]);
        let nw: Vec<_> = white_neighbors(2, -1).iter().map(|x| x.0).collect();
        assert_eq!(nw, vec![HexCoord::black(2, -1), HexCoord::black(2, 0), HexCoord::black(1, 0)]);
    }

    #[test]
    fn adjacency_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (m, n) = (rng.gen_range(-50..50), rng.gen_range(-50..50));
            for (w, kind) in black_neighbors(m, n) {
                let back = white_neighbors(w.m, w.n);
                assert!(back.contains(&(HexCoord::black(m, n), kind)));
            }
        }
    }

    #[test]
    fn edge_kinds_agree_in_ball() {
        for m in -10..=10 {
            for n in -10..=10 {
                for (w, kind) in black_neighbors(m, n) {
                    assert_eq!(edge_kind((w.m, w.n), (m, n)), Some(kind));
                }
            }
        }
    }

    #[test]
    fn neighbors_are_at_unit_distance() {
        for (m, n) in [(0, 0), (3, -2), (-4, 7)] {
            let b = HexCoord::black(m, n);
            let pb = b.embedding();
            for (w, _) in b.neighbors() {
                let pw = w.embedding();
                let d = ((pw.0 - pb.0).powi(2) + (pw.1 - pb.1).powi(2)).sqrt();
                assert!((d - 1.0).abs() < 1e-12, "{b} {w} {d}");
            }
        }
    }

    #[test]
    fn dual_faces_are_counterclockwise() {
        for x in [HexCoord::white(0, 0), HexCoord::black(0, 0), HexCoord::white(-3, 2)] {
            let d = face_dual_vertices(x).map(|v| v.embedding());
            assert!(signed_area(d) > 0.0, "{x}");
            // every dual vertex is a hexagon centre at distance 1 from x
            let p = x.embedding();
            for q in d {
                assert!(((q.0 - p.0).hypot(q.1 - p.1) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adjacent_faces_share_two_dual_vertices() {
        for (w, _) in black_neighbors(2, 1) {
            let a = face_dual_vertices(HexCoord::black(2, 1));
            let b = face_dual_vertices(w);
            let shared = a.iter().filter(|v| b.contains(v)).count();
            assert_eq!(shared, 2);
        }
    }

    #[test]
    fn dual_edges_have_white_on_left() {
        for kind in EdgeKind::ALL {
            let (from, to) = dual_edge(1, -2, kind);
            let (f, t) = (from.embedding(), to.embedding());
            let w = HexCoord::white(1, -2).embedding();
            let cross = (t.0 - f.0) * (w.1 - f.1) - (t.1 - f.1) * (w.0 - f.0);
            assert!(cross > 0.0, "{kind:?}");
            let (bm, bn) = black_across(1, -2, kind);
            let faces = face_dual_vertices(HexCoord::black(bm, bn));
            assert!(faces.contains(&from) && faces.contains(&to));
        }
    }

    #[test]
    fn dual_vertex_multiplicity() {
        let mut white_count = std::collections::HashMap::new();
        let mut black_count = std::collections::HashMap::new();
        for m in -6..=6 {
            for n in -6..=6 {
                for v in face_dual_vertices(HexCoord::white(m, n)) {
                    *white_count.entry(v).or_insert(0) += 1;
                }
                for v in face_dual_vertices(HexCoord::black(m, n)) {
                    *black_count.entry(v).or_insert(0) += 1;
                }
            }
        }
        for m in -3..=3 {
            for n in -3..=3 {
                let v = DualVertex::new(m, n);
                assert_eq!(white_count[&v], 3);
                assert_eq!(black_count[&v], 3);
            }
        }
    }

    #[test]
    fn rotation_has_order_three_and_is_isometric() {
        for (m, n) in [(0, 0), (2, -5), (-3, 4)] {
            let once = rotate_black_120(m, n);
            let thrice = rotate_black_120(rotate_black_120(once.0, once.1).0, rotate_black_120(once.0, once.1).1);
            assert_eq!(thrice, (m, n));
            let c = HexCoord::white(0, 0).embedding();
            let p = HexCoord::black(m, n).embedding();
            let q = HexCoord::black(once.0, once.1).embedding();
            let (angle_p, angle_q) = ((p.1 - c.1).atan2(p.0 - c.0), (q.1 - c.1).atan2(q.0 - c.0));
            let turn = (angle_q - angle_p).rem_euclid(std::f64::consts::TAU);
            assert!((turn - std::f64::consts::TAU / 3.0).abs() < 1e-9);
        }
    }
}
