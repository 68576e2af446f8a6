use super::spatial::dot;
use crate::construction::TGraphWindow;
use crate::lattice::HexCoord;
use crate::stats::{linear_fit, LinearFit};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::{HashMap, VecDeque};

/// A path stepping from each `v(b)` to an endpoint of the segment of `b`.
#[derive(Clone, Debug, Serialize)]
pub struct OrientedPath {
    pub blacks: Vec<HexCoord>,
    pub vertices: Vec<Complex64>,
    /// Set when the path stopped at the window boundary before its requested length.
    pub truncated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrientedPaths {
    pub plus: OrientedPath,
    pub minus: OrientedPath,
    pub plus_tilde: OrientedPath,
    pub minus_tilde: OrientedPath,
    /// Smallest 4-step progress along `n` (resp. `-n`) of the lookahead paths.
    pub eps_plus: f64,
    pub eps_minus: f64,
}

/// The two successors of `b(m,n)`, if both are inside the window.
pub fn successors(window: &TGraphWindow, m: i64, n: i64) -> Option<[(i64, i64); 2]> {
    if !window.contains_black(m, n) {
        return None;
    }
    let s = window.segment(m, n);
    let a = window.owner(s.ends[0])?;
    let b = window.owner(s.ends[1])?;
    Some([a, b])
}

fn greedy(window: &TGraphWindow, x0: (i64, i64), dir: Complex64, steps: usize) -> OrientedPath {
    let perp = dir * Complex64::i();
    let key = |p: Complex64| (dot(p, dir), dot(p, perp));
    let mut cur = x0;
    let mut path = OrientedPath { blacks: vec![HexCoord::black(x0.0, x0.1)], vertices: vec![window.vertex(x0.0, x0.1)], truncated: false };
    for _ in 0..steps {
        let Some(next) = successors(window, cur.0, cur.1) else {
            path.truncated = true;
            break;
        };
        let (pa, pb) = (window.vertex(next[0].0, next[0].1), window.vertex(next[1].0, next[1].1));
        cur = if key(pa).partial_cmp(&key(pb)) == Some(std::cmp::Ordering::Greater) { next[0] } else { next[1] };
        path.blacks.push(HexCoord::black(cur.0, cur.1));
        path.vertices.push(window.vertex(cur.0, cur.1));
    }
    path
}

type Suffix = [(i64, i64); 4];

/// The path of `steps` oriented steps maximising the smallest progress along
/// `dir` over every four consecutive steps, found by dynamic programming over
/// the last four vertices.
fn with_lookahead(window: &TGraphWindow, x0: (i64, i64), dir: Complex64, steps: usize) -> (OrientedPath, f64) {
    let proj = |b: (i64, i64)| dot(window.vertex(b.0, b.1), dir);
    let mut layers: Vec<HashMap<Suffix, (f64, Suffix)>> = vec![HashMap::from([([x0; 4], (f64::INFINITY, [x0; 4]))])];
    let mut truncated = false;
    for k in 0..steps {
        let mut next_layer: HashMap<Suffix, (f64, Suffix)> = HashMap::new();
        for (suffix, &(value, _)) in &layers[k] {
            let Some(next) = successors(window, suffix[3].0, suffix[3].1) else { continue };
            for c in next {
                let progress = if k >= 3 { proj(c) - proj(suffix[0]) } else { f64::INFINITY };
                let v = value.min(progress);
                let key = [suffix[1], suffix[2], suffix[3], c];
                let e = next_layer.entry(key).or_insert((f64::NEG_INFINITY, *suffix));
                if v > e.0 || (v == e.0 && *suffix < e.1) {
                    *e = (v, *suffix);
                }
            }
        }
        if next_layer.is_empty() {
            truncated = true;
            break;
        }
        layers.push(next_layer);
    }
    let last = layers.last().unwrap();
    let (mut key, &(eps, _)) = last
        .iter()
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then_with(|| b.0.cmp(a.0)))
        .unwrap();
    let mut blacks = Vec::with_capacity(layers.len());
    for layer in layers.iter().rev() {
        blacks.push(key[3]);
        key = &layer[key].1;
    }
    blacks.reverse();
    blacks.truncate(layers.len());
    let path = OrientedPath {
        vertices: blacks.iter().map(|b| window.vertex(b.0, b.1)).collect(),
        blacks: blacks.iter().map(|b| HexCoord::black(b.0, b.1)).collect(),
        truncated,
    };
    (path, eps)
}

/// Oriented paths from `b(x0)` that increase (`plus`) or decrease (`minus`)
/// along `direction`; the `tilde` variants use a four-step lookahead.
pub fn oriented_paths(window: &TGraphWindow, x0: (i64, i64), direction: Complex64, steps: usize) -> OrientedPaths {
    let dir = direction / direction.norm();
    let (plus_tilde, eps_plus) = with_lookahead(window, x0, dir, steps);
    let (minus_tilde, eps_minus) = with_lookahead(window, x0, -dir, steps);
    OrientedPaths {
        plus: greedy(window, x0, dir, steps),
        minus: greedy(window, x0, -dir, steps),
        plus_tilde,
        minus_tilde,
        eps_plus,
        eps_minus,
    }
}

/// Whether `(n.x, n_perp.x)` increases strictly at every step, and `n.x`
/// strictly at least every second step.
pub fn is_monotone(path: &OrientedPath, direction: Complex64) -> bool {
    let dir = direction / direction.norm();
    let perp = dir * Complex64::i();
    let v = &path.vertices;
    let lex = v.windows(2).all(|w| {
        let (a, b) = ((dot(w[0], dir), dot(w[0], perp)), (dot(w[1], dir), dot(w[1], perp)));
        b > a
    });
    let strict = v.windows(3).all(|w| dot(w[2], dir) > dot(w[0], dir));
    lex && strict
}

#[derive(Clone, Debug, Serialize)]
pub enum Reachability {
    Found(Vec<HexCoord>),
    NotFound { near_boundary: bool },
}

/// Breadth-first search over oriented steps from `from` to `to`.
pub fn oriented_reachability(window: &TGraphWindow, from: (i64, i64), to: (i64, i64)) -> Reachability {
    if from == to {
        return Reachability::Found(Vec::new());
    }
    let mut parent: HashMap<(i64, i64), (i64, i64)> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    parent.insert(from, from);
    while let Some(b) = queue.pop_front() {
        let Some(next) = successors(window, b.0, b.1) else { continue };
        for c in next {
            if parent.contains_key(&c) {
                continue;
            }
            parent.insert(c, b);
            if c == to {
                let mut path = vec![HexCoord::black(c.0, c.1)];
                let mut x = b;
                while x != from {
                    path.push(HexCoord::black(x.0, x.1));
                    x = parent[&x];
                }
                path.reverse();
                return Reachability::Found(path);
            }
            queue.push_back(c);
        }
    }
    let r = window.radius();
    let depth = |p: (i64, i64)| r - p.0.abs().max(p.1.abs());
    Reachability::NotFound { near_boundary: depth(from) <= r / 4 || depth(to) <= r / 4 }
}

/// Regression of BFS path length against lattice distance over sampled pairs.
pub fn path_length_slope(window: &TGraphWindow, pairs: &[((i64, i64), (i64, i64))]) -> Option<LinearFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(a, b) in pairs {
        if let Reachability::Found(p) = oriented_reachability(window, a, b) {
            let (dm, dn) = (a.0 - b.0, a.1 - b.1);
            xs.push(dm.abs().max(dn.abs()).max((dm + dn).abs()) as f64);
            ys.push(p.len() as f64);
        }
    }
    (xs.len() >= 3).then(|| linear_fit(&xs, &ys))
}
