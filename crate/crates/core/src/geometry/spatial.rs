use num_complex::Complex64;

/// Uniform bucket grid over axis-aligned bounding boxes.
#[derive(Clone, Debug)]
pub struct GridIndex {
    origin: Complex64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl GridIndex {
    /// Grid covering `[lo, hi]` with square cells of side `cell`.
    pub fn new(lo: Complex64, hi: Complex64, cell: f64) -> Self {
        let nx = (((hi.re - lo.re) / cell).ceil() as usize).max(1) + 1;
        let ny = (((hi.im - lo.im) / cell).ceil() as usize).max(1) + 1;
        GridIndex { origin: lo, cell, nx, ny, buckets: vec![Vec::new(); nx * ny] }
    }

    fn cell_of(&self, p: Complex64) -> (isize, isize) {
        (
            ((p.re - self.origin.re) / self.cell).floor() as isize,
            ((p.im - self.origin.im) / self.cell).floor() as isize,
        )
    }

    fn clamp(&self, c: (isize, isize)) -> (usize, usize) {
        (c.0.clamp(0, self.nx as isize - 1) as usize, c.1.clamp(0, self.ny as isize - 1) as usize)
    }

    /// Register item `id` over the bounding box of `pts`, padded by `pad`.
    pub fn insert(&mut self, id: u32, pts: &[Complex64], pad: f64) {
        let (mut lo, mut hi) = (pts[0], pts[0]);
        for p in pts {
            lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        let (a, b) = (
            self.clamp(self.cell_of(lo - Complex64::new(pad, pad))),
            self.clamp(self.cell_of(hi + Complex64::new(pad, pad))),
        );
        for i in a.0..=b.0 {
            for j in a.1..=b.1 {
                self.buckets[j * self.nx + i].push(id);
            }
        }
    }

    /// Items whose padded box may contain `p`.
    pub fn query(&self, p: Complex64) -> &[u32] {
        let (i, j) = self.cell_of(p);
        if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
            return &[];
        }
        &self.buckets[j as usize * self.nx + i as usize]
    }

    /// Items whose boxes meet the disc of radius `r` around `p`, deduplicated.
    pub fn query_disc(&self, p: Complex64, r: f64) -> Vec<u32> {
        let a = self.clamp(self.cell_of(p - Complex64::new(r, r)));
        let b = self.clamp(self.cell_of(p + Complex64::new(r, r)));
        let mut out = Vec::new();
        for i in a.0..=b.0 {
            for j in a.1..=b.1 {
                out.extend_from_slice(&self.buckets[j * self.nx + i]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Every bucket, for pairwise scans.
    pub fn buckets(&self) -> impl Iterator<Item = &Vec<u32>> {
        self.buckets.iter()
    }
}

pub fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

pub fn dot(a: Complex64, b: Complex64) -> f64 {
    a.re * b.re + a.im * b.im
}

/// Twice the signed area of `(a, b, c)`.
pub fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    cross(b - a, c - a)
}

pub fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (dot(p - a, d) / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// Barycentric-sign test; `tol` widens the triangle.
pub fn in_triangle(p: Complex64, t: [Complex64; 3], tol: f64) -> bool {
    let area = orient(t[0], t[1], t[2]);
    let s = area.signum();
    (0..3).all(|k| {
        let (a, b) = (t[k], t[(k + 1) % 3]);
        s * orient(a, b, p) >= -tol * (b - a).norm()
    })
}

/// Portion of segment `[a, b]` inside the closed disc `|z| <= r`.
pub fn clip_to_disc(a: Complex64, b: Complex64, r: f64) -> Option<(Complex64, Complex64)> {
    let d = b - a;
    let qa = d.norm_sqr();
    if qa == 0.0 {
        return (a.norm() <= r).then_some((a, a));
    }
    let qb = 2.0 * dot(a, d);
    let qc = a.norm_sqr() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = ((-qb - sq) / (2.0 * qa)).max(0.0);
    let t1 = ((-qb + sq) / (2.0 * qa)).min(1.0);
    (t0 <= t1).then(|| (a + d * t0, a + d * t1))
}

/// Clip a polygon against a convex counterclockwise polygon.
pub fn clip_polygon(subject: &[Complex64], clip: &[Complex64]) -> Vec<Complex64> {
    let mut out = subject.to_vec();
    for k in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[k], clip[(k + 1) % clip.len()]);
        let inside = |p: Complex64| orient(a, b, p) >= 0.0;
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let (p, q) = (input[i], input[(i + 1) % input.len()]);
            let (ip, iq) = (inside(p), inside(q));
            if ip {
                out.push(p);
            }
            if ip != iq {
                let (sp, sq) = (orient(a, b, p), orient(a, b, q));
                out.push(p + (q - p) * (sp / (sp - sq)));
            }
        }
    }
    out
}

pub fn polygon_area(poly: &[Complex64]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>() / 2.0
}
