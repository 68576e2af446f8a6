use super::spatial::{clip_to_disc, point_segment_distance, GridIndex};
use super::tiling::WindowIndex;
use crate::error::{Result, TGraphError};
use num_complex::Complex64;

/// Resolution of the Hausdorff distance: results are within half of it.
pub const SAMPLE_STEP: f64 = 1e-3;
/// Ratio of consecutive values on the `eps` grid.
pub const EPS_RATIO: f64 = 1.05;

struct Recentered {
    segs: Vec<(Complex64, Complex64)>,
    grid: GridIndex,
}

impl Recentered {
    fn new(index: &WindowIndex, point: Complex64, radius: f64) -> Self {
        let segs: Vec<_> = index
            .segments_in_disc(point, radius)
            .into_iter()
            .filter_map(|s| clip_to_disc(s.p1 - point, s.p2 - point, radius))
            .collect();
        let r = Complex64::new(radius, radius);
        let mut grid = GridIndex::new(-r, r, (radius / 32.0).max(0.25));
        for (i, s) in segs.iter().enumerate() {
            grid.insert(i as u32, &[s.0, s.1], 0.0);
        }
        Recentered { segs, grid }
    }

    fn clipped(&self, radius: f64) -> Vec<(Complex64, Complex64)> {
        self.segs.iter().filter_map(|s| clip_to_disc(s.0, s.1, radius)).collect()
    }

    /// Distance from `p` to the part of this set inside the disc of `radius`.
    fn distance(&self, p: Complex64, radius: f64) -> f64 {
        let mut r = self.grid_step();
        loop {
            let mut best = f64::INFINITY;
            for i in self.grid.query_disc(p, r) {
                let s = self.segs[i as usize];
                if let Some((a, b)) = clip_to_disc(s.0, s.1, radius) {
                    best = best.min(point_segment_distance(p, a, b));
                }
            }
            if best <= r || r > 4.0 * radius {
                return best;
            }
            r *= 2.0;
        }
    }

    fn grid_step(&self) -> f64 {
        0.5
    }
}

/// Largest distance from points of `a` to `b`, to within `SAMPLE_STEP / 2`,
/// stopping early once it reaches `stop`.
///
/// The distance to `b` is 1-Lipschitz, so on a piece of length `l` with end
/// values `f0, f1` it never exceeds `(f0 + f1 + l) / 2`; pieces are bisected
/// until that bound is within `SAMPLE_STEP / 2` of the best value seen.
fn directed(a: &Recentered, b: &Recentered, radius: f64, stop: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (p, q) in a.clipped(radius) {
        let len = (q - p).norm();
        let f = |t: f64| b.distance(p + (q - p) * t, radius);
        let (f0, f1) = (f(0.0), f(1.0));
        worst = worst.max(f0).max(f1);
        if worst >= stop {
            return worst;
        }
        let mut stack = vec![(0.0, 1.0, f0, f1)];
        while let Some((t0, t1, g0, g1)) = stack.pop() {
            let bound = (g0 + g1 + (t1 - t0) * len) / 2.0;
            if bound <= worst + SAMPLE_STEP / 2.0 {
                continue;
            }
            let tm = (t0 + t1) / 2.0;
            let gm = f(tm);
            worst = worst.max(gm);
            if worst >= stop {
                return worst;
            }
            stack.push((t0, tm, g0, gm));
            stack.push((tm, t1, gm, g1));
        }
    }
    worst
}

/// Hausdorff distance between the two recentred graphs restricted to the
/// closed disc of `radius`.
pub fn hausdorff_in_disc(
    a: &WindowIndex,
    pa: Complex64,
    b: &WindowIndex,
    pb: Complex64,
    radius: f64,
) -> f64 {
    let ra = Recentered::new(a, pa, radius);
    let rb = Recentered::new(b, pb, radius);
    directed(&ra, &rb, radius, f64::INFINITY).max(directed(&rb, &ra, radius, f64::INFINITY))
}

/// Largest radius around `p` that the window covers.
fn coverage(index: &WindowIndex, p: Complex64) -> f64 {
    // the image of the box contains its ell-image shrunk by the deviation bound
    let core = index.core(index.window.radius() as f64);
    let mut best = f64::INFINITY;
    for k in 0..4 {
        let (u, v) = (core[k], core[(k + 1) % 4]);
        best = best.min(super::spatial::orient(u, v, p) / (v - u).norm());
    }
    best - psi_deviation(index)
}

fn psi_deviation(index: &WindowIndex) -> f64 {
    let w = index.window;
    let t = &w.params().triangle;
    let r = w.radius();
    let mut worst: f64 = 0.0;
    for m in [-r, 0, r] {
        for n in -r..=r {
            let v = crate::lattice::DualVertex::new(m, n);
            worst = worst.max((w.psi(v).unwrap() - crate::construction::ell(m as f64, n as f64, t)).norm());
            let v = crate::lattice::DualVertex::new(n, m);
            worst = worst.max((w.psi(v).unwrap() - crate::construction::ell(n as f64, m as f64, t)).norm());
        }
    }
    2.0 * worst + 2.0
}

/// `inf { eps >= 1/cutoff : d_H(A - pa, B - pb restricted to B(1/eps)) < eps }`,
/// with `eps` on a geometric grid. When the condition already holds at
/// `1/cutoff` the measured Hausdorff distance at radius `cutoff` is returned.
pub fn pseudo_distance(
    a: &WindowIndex,
    pa: Complex64,
    b: &WindowIndex,
    pb: Complex64,
    cutoff: f64,
) -> Result<f64> {
    for (idx, p, name) in [(a, pa, "first"), (b, pb, "second")] {
        let c = coverage(idx, p);
        if c < cutoff {
            return Err(TGraphError::InvalidArgument(format!(
                "{name} window covers radius {c:.2} around its point, need {cutoff}"
            )));
        }
    }
    let ra = Recentered::new(a, pa, cutoff);
    let rb = Recentered::new(b, pb, cutoff);
    let d0 = directed(&ra, &rb, cutoff, f64::INFINITY).max(directed(&rb, &ra, cutoff, f64::INFINITY));
    let mut eps = 1.0 / cutoff;
    if d0 < eps {
        return Ok(d0);
    }
    let top = a.diameter().max(b.diameter());
    while eps < top {
        eps *= EPS_RATIO;
        let r = 1.0 / eps;
        if directed(&ra, &rb, r, eps) < eps && directed(&rb, &ra, r, eps) < eps {
            return Ok(eps);
        }
    }
    Ok(top)
}
