use super::spatial::{clip_polygon, in_triangle, orient, point_segment_distance, polygon_area, GridIndex};
use crate::construction::{ell, Face, Segment, TGraphWindow};
use crate::error::{Result, TGraphError};
use crate::lattice::{DualVertex, HexCoord};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashSet;
use std::f64::consts::PI;

/// Absolute tolerance for incidence and crossing tests.
pub const GEOM_TOL: f64 = 1e-9;

/// Faces and segments of a window with bucket grids for point queries.
pub struct WindowIndex<'a> {
    pub window: &'a TGraphWindow,
    pub segments: Vec<Segment>,
    pub faces: Vec<Face>,
    seg_grid: GridIndex,
    face_grid: GridIndex,
    pub lo: Complex64,
    pub hi: Complex64,
}

impl<'a> WindowIndex<'a> {
    pub fn new(window: &'a TGraphWindow) -> Self {
        let r = window.radius();
        let segments: Vec<Segment> = window.blacks().map(|(m, n)| window.segment(m, n)).collect();
        let faces: Vec<Face> = window.blacks().map(|(m, n)| window.face(m, n)).collect();
        let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for s in &segments {
            for p in [s.p1, s.p2] {
                lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
                hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
            }
        }
        let cell = ((hi - lo).norm() / (2 * r + 1) as f64).max(0.5);
        let mut seg_grid = GridIndex::new(lo, hi, cell);
        let mut face_grid = GridIndex::new(lo, hi, cell);
        for (i, s) in segments.iter().enumerate() {
            seg_grid.insert(i as u32, &[s.p1, s.p2], GEOM_TOL);
        }
        for (i, f) in faces.iter().enumerate() {
            face_grid.insert(i as u32, &f.vertices(), GEOM_TOL);
        }
        WindowIndex { window, segments, faces, seg_grid, face_grid, lo, hi }
    }

    pub fn diameter(&self) -> f64 {
        (self.hi - self.lo).norm()
    }

    pub fn segment_at(&self, m: i64, n: i64) -> &Segment {
        &self.segments[self.window.black_index(m, n)]
    }

    /// Segments within `tol` of `p`.
    pub fn segments_near(&self, p: Complex64, tol: f64) -> Vec<&Segment> {
        self.seg_grid
            .query_disc(p, tol)
            .into_iter()
            .map(|i| &self.segments[i as usize])
            .filter(|s| point_segment_distance(p, s.p1, s.p2) <= tol)
            .collect()
    }

    pub fn segments_in_disc(&self, p: Complex64, r: f64) -> Vec<&Segment> {
        self.seg_grid.query_disc(p, r).into_iter().map(|i| &self.segments[i as usize]).collect()
    }

    /// Faces whose closed triangle contains `p`.
    pub fn faces_containing(&self, p: Complex64, tol: f64) -> Vec<&Face> {
        self.face_grid
            .query(p)
            .iter()
            .map(|&i| &self.faces[i as usize])
            .filter(|f| in_triangle(p, f.vertices(), tol))
            .collect()
    }

    fn face_candidates(&self, poly: &[Complex64]) -> Vec<u32> {
        let (mut lo, mut hi) = (poly[0], poly[0]);
        for p in poly {
            lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        let c = (lo + hi) / 2.0;
        self.face_grid.query_disc(c, (hi - lo).norm() / 2.0)
    }

    /// The `ell`-image of the lattice box `|m|, |n| <= h`, counterclockwise.
    pub fn core(&self, h: f64) -> [Complex64; 4] {
        let t = &self.window.params().triangle;
        [ell(-h, -h, t), ell(h, -h, t), ell(h, h, t), ell(-h, h, t)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Location {
    Face(HexCoord),
    Segment(HexCoord),
    Outside,
}

/// The segment within `GEOM_TOL` of `point`, else the unique face containing it.
pub fn locate(point: Complex64, index: &WindowIndex) -> Result<Location> {
    let near = index.segments_near(point, GEOM_TOL);
    if let Some(s) = near.first() {
        return Ok(Location::Segment(s.black));
    }
    let faces = index.faces_containing(point, 0.0);
    match faces.len() {
        0 => Ok(Location::Outside),
        1 => Ok(Location::Face(faces[0].white)),
        k => Err(TGraphError::Ambiguous(format!("{point} lies in {k} faces"))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TilingReport {
    pub samples: usize,
    pub tube_rejections: usize,
    /// Sample points covered zero or several times, with their cover count.
    pub violations: Vec<(Complex64, usize)>,
    pub core_area: f64,
    pub face_area_in_core: f64,
    pub area_rel_error: f64,
}

impl TilingReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.area_rel_error < 1e-3
    }
}

/// Sample points in the image of the central half of the box and check each
/// lies in exactly one face; also compare clipped face area with core area.
pub fn validate_tiling(index: &WindowIndex, samples: usize, seed: u64) -> TilingReport {
    let h = index.window.radius() as f64 / 2.0;
    let core = index.core(h);
    let eta = 1e-7 * index.diameter();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (e1, e2) = (core[1] - core[0], core[3] - core[0]);
    let mut violations = Vec::new();
    let mut rejected = 0;
    let mut done = 0;
    while done < samples {
        let p = core[0] + e1 * rng.gen::<f64>() + e2 * rng.gen::<f64>();
        if !index.segments_near(p, eta).is_empty() {
            rejected += 1;
            continue;
        }
        done += 1;
        let k = index.faces_containing(p, 0.0).len();
        if k != 1 {
            violations.push((p, k));
        }
    }
    let core_area = polygon_area(&core);
    let face_area: f64 = index
        .face_candidates(&core)
        .into_iter()
        .map(|i| polygon_area(&clip_polygon(&index.faces[i as usize].vertices(), &core)))
        .sum();
    TilingReport {
        samples,
        tube_rejections: rejected,
        violations,
        core_area,
        face_area_in_core: face_area,
        area_rel_error: (face_area - core_area).abs() / core_area,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SegmentReport {
    pub pairs_tested: usize,
    /// Pairs of segments crossing in their interiors, with the crossing margin.
    pub crossings: Vec<(HexCoord, HexCoord, f64)>,
    /// Dual vertices not lying in exactly two segments as endpoint and one as
    /// interior point: `(vertex, endpoint count, interior count)`.
    pub incidence_violations: Vec<(DualVertex, usize, usize)>,
    pub vertices_tested: usize,
    pub min_length: f64,
    pub max_angle_error: f64,
    pub angle_violations: usize,
}

impl SegmentReport {
    pub fn passed(&self) -> bool {
        self.crossings.is_empty() && self.incidence_violations.is_empty() && self.angle_violations == 0
    }
}

/// `Some(margin)` if the two segments cross at a point interior to both.
fn proper_crossing(a: &Segment, b: &Segment) -> Option<f64> {
    let dist = |p: Complex64, q: Complex64, x: Complex64| orient(p, q, x) / (q - p).norm();
    let d1 = dist(a.p1, a.p2, b.p1);
    let d2 = dist(a.p1, a.p2, b.p2);
    let d3 = dist(b.p1, b.p2, a.p1);
    let d4 = dist(b.p1, b.p2, a.p2);
    if d1.abs() <= GEOM_TOL && d2.abs() <= GEOM_TOL {
        // collinear: reject overlaps of positive length
        let u = a.direction;
        let (s0, s1) = (0.0f64, (a.p2 - a.p1).norm());
        let t0 = super::spatial::dot(b.p1 - a.p1, u);
        let t1 = super::spatial::dot(b.p2 - a.p1, u);
        let overlap = s1.min(t0.max(t1)) - s0.max(t0.min(t1));
        return (overlap > GEOM_TOL).then_some(overlap);
    }
    let margin = d1.abs().min(d2.abs()).min(d3.abs()).min(d4.abs());
    (d1 * d2 < 0.0 && d3 * d4 < 0.0 && margin > GEOM_TOL).then_some(margin)
}

fn line_angle(u: Complex64, v: Complex64) -> f64 {
    (v / u).arg().rem_euclid(PI)
}

/// Segment-crossing, incidence, length and angle checks.
pub fn validate_segments(index: &WindowIndex) -> SegmentReport {
    let w = index.window;
    let r = w.radius();
    let mut seen = HashSet::new();
    let mut crossings = Vec::new();
    for bucket in index.seg_grid.buckets() {
        for (k, &i) in bucket.iter().enumerate() {
            for &j in &bucket[k + 1..] {
                let key = (i.min(j), i.max(j));
                if !seen.insert(key) {
                    continue;
                }
                let (a, b) = (&index.segments[key.0 as usize], &index.segments[key.1 as usize]);
                if let Some(margin) = proper_crossing(a, b) {
                    crossings.push((a.black, b.black, margin));
                }
            }
        }
    }

    let mut incidence_violations = Vec::new();
    let mut vertices_tested = 0;
    for m in -r + 2..=r - 2 {
        for n in -r + 2..=r - 2 {
            let u = DualVertex::new(m, n);
            let p = w.psi(u).unwrap();
            let (mut ends, mut inner) = (0, 0);
            for s in index.segments_near(p, GEOM_TOL) {
                if (p - s.p1).norm() <= GEOM_TOL || (p - s.p2).norm() <= GEOM_TOL {
                    ends += 1;
                } else {
                    inner += 1;
                }
            }
            vertices_tested += 1;
            if (ends, inner) != (2, 1) {
                incidence_violations.push((u, ends, inner));
            }
        }
    }

    let t = &w.params().triangle;
    let set: Vec<f64> = t.angles.iter().flat_map(|a| [a.radians, PI - a.radians]).collect();
    let mut max_err: f64 = 0.0;
    let mut angle_violations = 0;
    for m in -r + 2..=r - 2 {
        for n in -r + 2..=r - 2 {
            let s = index.segment_at(m, n);
            for e in s.ends {
                // the black faces around `v(m,n)` are `b(m,n)`, `b(m-1,n+1)`, `b(m-1,n)`
                for (bm, bn) in [(e.m, e.n), (e.m - 1, e.n + 1), (e.m - 1, e.n)] {
                    if (bm, bn) == (m, n) {
                        continue;
                    }
                    let o = index.segment_at(bm, bn);
                    let th = line_angle(s.direction, o.direction);
                    let err = set.iter().map(|a| (th - a).abs()).fold(f64::INFINITY, f64::min);
                    max_err = max_err.max(err);
                    if err > 1e-6 {
                        angle_violations += 1;
                    }
                }
            }
        }
    }

    SegmentReport {
        pairs_tested: seen.len(),
        crossings,
        incidence_violations,
        vertices_tested,
        min_length: index.segments.iter().map(|s| s.length()).fold(f64::INFINITY, f64::min),
        max_angle_error: max_err,
        angle_violations,
    }
}

/// Faces similar to the reference triangle with the same orientation:
/// returns the worst vertex mismatch.
pub fn face_similarity_error(window: &TGraphWindow) -> f64 {
    let t = &window.params().triangle;
    let r = window.radius();
    let mut worst: f64 = 0.0;
    for m in -r..=r {
        for n in -r..=r {
            let f = window.face(m, n);
            let k = f.scale * f.rotation;
            let shape = t.vertices().map(|z| f.v1 + k * z);
            let mut err = (0..3).map(|i| (shape[i] - f.vertices()[i]).norm()).fold(0.0, f64::max);
            if f.signed_area() <= 0.0 {
                err = f64::INFINITY;
            }
            worst = worst.max(err);
        }
    }
    worst
}
