use super::weights::{column_step, row_step, Params};
use crate::error::{Result, TGraphError};
use crate::lattice::{black_neighbors, dual_edge, face_dual_vertices, DualVertex, HexCoord};
use num_complex::Complex64;
use serde::Serialize;

/// Gaps below this between the three images of a black face count as ties.
pub const BETWEEN_TOL: f64 = 1e-9;
/// Faces with `|scale|` below this are treated as collapsed.
pub const ZERO_SCALE: f64 = 1e-12;

/// Image of a black face: a segment with a marked interior point `v(b)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Segment {
    pub black: HexCoord,
    pub p1: Complex64,
    pub p2: Complex64,
    pub interior: Complex64,
    pub direction: Complex64,
    /// Dual vertices mapped to `p1`, `p2` and `interior`.
    pub ends: [DualVertex; 2],
    pub mid: DualVertex,
    /// `p1 - interior` and `p2 - interior`, each the flow of a single dual
    /// edge, so free of the cancellation in differences of far positions.
    pub steps: [Complex64; 2],
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.p2 - self.p1).norm()
    }

    /// Distance from the interior point to the closer endpoint.
    pub fn short_side(&self) -> f64 {
        (self.interior - self.p1).norm().min((self.interior - self.p2).norm())
    }
}

/// Image of a white face: a triangle similar to the reference one.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Face {
    pub white: HexCoord,
    pub v1: Complex64,
    pub v2: Complex64,
    pub v3: Complex64,
    pub scale: f64,
    pub rotation: Complex64,
}

impl Face {
    pub fn signed_area(&self) -> f64 {
        0.5 * ((self.v2 - self.v1).conj() * (self.v3 - self.v1)).im
    }

    pub fn centroid(&self) -> Complex64 {
        (self.v1 + self.v2 + self.v3) / 3.0
    }

    pub fn vertices(&self) -> [Complex64; 3] {
        [self.v1, self.v2, self.v3]
    }
}

/// The T-graph restricted to the lattice box `|m|, |n| <= R`.
///
/// `psi` is stored on the dual box `m in [-R, R+1]`, `n in [-R-1, R+1]`, which
/// covers every vertex of every black and white face of the box.
#[derive(Clone, Debug)]
pub struct TGraphWindow {
    params: Params,
    radius: i64,
    psi: Vec<Complex64>,
    interior: Vec<u8>,
    owner: Vec<u32>,
}

const NO_OWNER: u32 = u32::MAX;

impl TGraphWindow {
    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    fn dual_index(&self, m: i64, n: i64) -> Option<usize> {
        let r = self.radius;
        if m < -r || m > r + 1 || n < -r - 1 || n > r + 1 {
            return None;
        }
        Some(((m + r) * (2 * r + 3) + (n + r + 1)) as usize)
    }

    pub fn contains_dual(&self, v: DualVertex) -> bool {
        self.dual_index(v.m, v.n).is_some()
    }

    pub fn contains_black(&self, m: i64, n: i64) -> bool {
        m.abs() <= self.radius && n.abs() <= self.radius
    }

    pub fn black_count(&self) -> usize {
        let side = (2 * self.radius + 1) as usize;
        side * side
    }

    /// Dense index of `b(m,n)`; callers must check [`Self::contains_black`].
    pub fn black_index(&self, m: i64, n: i64) -> usize {
        let r = self.radius;
        ((m + r) * (2 * r + 1) + (n + r)) as usize
    }

    pub fn black_coords(&self, idx: usize) -> (i64, i64) {
        let side = 2 * self.radius + 1;
        let i = idx as i64;
        (i / side - self.radius, i % side - self.radius)
    }

    pub fn blacks(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let r = self.radius;
        (-r..=r).flat_map(move |m| (-r..=r).map(move |n| (m, n)))
    }

    pub fn psi(&self, v: DualVertex) -> Option<Complex64> {
        self.dual_index(v.m, v.n).map(|i| self.psi[i])
    }

    fn psi_at(&self, v: DualVertex) -> Complex64 {
        self.psi[self.dual_index(v.m, v.n).expect("dual vertex inside window")]
    }

    /// The interior vertex `v(b)` of the segment of `b(m,n)`.
    pub fn vertex(&self, m: i64, n: i64) -> Complex64 {
        let k = self.interior[self.black_index(m, n)] as usize;
        self.psi_at(face_dual_vertices(HexCoord::black(m, n))[k])
    }

    pub fn vertex_dual(&self, m: i64, n: i64) -> DualVertex {
        let k = self.interior[self.black_index(m, n)] as usize;
        face_dual_vertices(HexCoord::black(m, n))[k]
    }

    pub fn segment(&self, m: i64, n: i64) -> Segment {
        let b = HexCoord::black(m, n);
        let d = face_dual_vertices(b);
        let k = self.interior[self.black_index(m, n)] as usize;
        let (e1, e2) = (d[(k + 1) % 3], d[(k + 2) % 3]);
        let (p1, p2) = (self.psi_at(e1), self.psi_at(e2));
        let step = |to: DualVertex| {
            let mut z = Complex64::new(f64::NAN, f64::NAN);
            for (w, kind) in black_neighbors(m, n) {
                let (a, b) = dual_edge(w.m, w.n, kind);
                if (a, b) == (d[k], to) {
                    z = self.params.phi_kind(w.m, w.n, kind);
                } else if (a, b) == (to, d[k]) {
                    z = -self.params.phi_kind(w.m, w.n, kind);
                }
            }
            z
        };
        Segment {
            black: b,
            p1,
            p2,
            interior: self.psi_at(d[k]),
            direction: (p2 - p1) / (p2 - p1).norm(),
            ends: [e1, e2],
            mid: d[k],
            steps: [step(e1), step(e2)],
        }
    }

    /// White faces are available for `|m|, |n| <= R`.
    pub fn face(&self, m: i64, n: i64) -> Face {
        let w = HexCoord::white(m, n);
        let d = face_dual_vertices(w);
        let f = self.params.f(m, n);
        Face {
            white: w,
            v1: self.psi_at(d[0]),
            v2: self.psi_at(d[1]),
            v3: self.psi_at(d[2]),
            scale: (self.params.lambda.conj() * f.conj()).re,
            rotation: self.params.lambda * f,
        }
    }

    /// The black face whose interior point is the image of `v`.
    pub fn owner(&self, v: DualVertex) -> Option<(i64, i64)> {
        let i = self.dual_index(v.m, v.n)?;
        match self.owner[i] {
            NO_OWNER => None,
            b => Some(self.black_coords(b as usize)),
        }
    }

    /// Minimum `|scale|` over the white faces of the window.
    pub fn genericity_margin(&self) -> f64 {
        let r = self.radius;
        let mut best = f64::INFINITY;
        for m in -r..=r {
            for n in -r..=r {
                best = best.min(self.params.scale(m, n).abs());
            }
        }
        best
    }
}

/// Build the window `|m|, |n| <= radius`.
pub fn build_window(params: &Params, radius: i64) -> Result<TGraphWindow> {
    if radius < 2 {
        return Err(TGraphError::InvalidArgument(format!("window radius {radius} < 2")));
    }
    let r = radius;
    for m in -r..=r {
        for n in -r..=r {
            let s = params.scale(m, n);
            if s.abs() < ZERO_SCALE {
                return Err(TGraphError::DegenerateFace { face: HexCoord::white(m, n), scale: s });
            }
        }
    }

    let width = (2 * r + 3) as usize;
    let mut psi = vec![Complex64::new(0.0, 0.0); (2 * r + 2) as usize * width];
    let at = |m: i64, n: i64| ((m + r) as usize) * width + (n + r + 1) as usize;

    // Same summation order as `weights::psi`, so values do not depend on `radius`.
    let mut row = vec![Complex64::new(0.0, 0.0); (2 * r + 2) as usize];
    for m in 0..=r {
        row[(m + 1 + r) as usize] = row[(m + r) as usize] + row_step(m, 0, params);
    }
    for m in (-r..0).rev() {
        row[(m + r) as usize] = row[(m + 1 + r) as usize] - row_step(m, 0, params);
    }
    for m in -r..=r + 1 {
        let mut z = row[(m + r) as usize];
        psi[at(m, 0)] = z;
        for k in 0..=r {
            z += column_step(m, k, params);
            psi[at(m, k + 1)] = z;
        }
        let mut z = row[(m + r) as usize];
        for k in (-r - 1..0).rev() {
            z -= column_step(m, k, params);
            psi[at(m, k)] = z;
        }
    }

    let side = (2 * r + 1) as usize;
    let mut interior = vec![0u8; side * side];
    let mut owner = vec![NO_OWNER; psi.len()];
    for m in -r..=r {
        for n in -r..=r {
            let b = HexCoord::black(m, n);
            let d = face_dual_vertices(b);
            let dir = params.lambda * super::weights::g_black(m, n, &params.triangle);
            let t: Vec<f64> = d.iter().map(|v| (dir.conj() * psi[at(v.m, v.n)]).re).collect();
            let mut order = [0usize, 1, 2];
            order.sort_by(|&i, &j| t[i].total_cmp(&t[j]));
            let gap = (t[order[1]] - t[order[0]]).min(t[order[2]] - t[order[1]]);
            if gap < BETWEEN_TOL {
                return Err(TGraphError::CoincidentImages { face: b, gap });
            }
            let k = order[1];
            let idx = ((m + r) as usize) * side + (n + r) as usize;
            interior[idx] = k as u8;
            owner[at(d[k].m, d[k].n)] = idx as u32;
        }
    }

    Ok(TGraphWindow { params: params.clone(), radius, psi, interior, owner })
}
