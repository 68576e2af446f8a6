use super::window::TGraphWindow;
use crate::lattice::{face_dual_vertices, white_neighbors, HexCoord};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct AlmostDegenerateSegment {
    pub black: HexCoord,
    pub interior: Complex64,
    /// The endpoint closest to the interior point.
    pub endpoint: Complex64,
    pub short_side: f64,
    /// The white face having the short sub-segment as a side.
    pub face: HexCoord,
    pub face_area: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DegeneracyReport {
    pub eps: f64,
    pub degenerate_faces: Vec<HexCoord>,
    pub degenerate_segments: Vec<HexCoord>,
    /// Faces of area below `eps^2`, with their area.
    pub almost_faces: Vec<(HexCoord, f64)>,
    pub almost_segments: Vec<AlmostDegenerateSegment>,
    /// Smallest `C` such that every almost-degenerate segment borders a
    /// `C eps`-almost-degenerate face.
    pub pairing_constant: Option<f64>,
}

impl DegeneracyReport {
    pub fn is_empty(&self) -> bool {
        self.degenerate_faces.is_empty()
            && self.degenerate_segments.is_empty()
            && self.almost_faces.is_empty()
            && self.almost_segments.is_empty()
    }
}

/// Faces of area below `eps^2` and segments whose interior point is within
/// `eps` of an endpoint.
pub fn classify_degeneracy(window: &TGraphWindow, eps: f64) -> DegeneracyReport {
    let r = window.radius();
    let mut report = DegeneracyReport {
        eps,
        degenerate_faces: Vec::new(),
        degenerate_segments: Vec::new(),
        almost_faces: Vec::new(),
        almost_segments: Vec::new(),
        pairing_constant: None,
    };
    for m in -r..=r {
        for n in -r..=r {
            let area = window.face(m, n).signed_area();
            if area == 0.0 {
                report.degenerate_faces.push(HexCoord::white(m, n));
            } else if area < eps * eps {
                report.almost_faces.push((HexCoord::white(m, n), area));
            }
        }
    }
    let mut pairing: f64 = 0.0;
    for (m, n) in window.blacks() {
        let s = window.segment(m, n);
        if s.short_side() == 0.0 {
            report.degenerate_segments.push(s.black);
            continue;
        }
        let short = s.short_side();
        if short >= eps {
            continue;
        }
        let (endpoint, end_dual) = if (s.interior - s.p1).norm() <= (s.interior - s.p2).norm() {
            (s.p1, s.ends[0])
        } else {
            (s.p2, s.ends[1])
        };
        // the white face across the dual edge joining `mid` and `end_dual`
        let face = white_neighbors_of_black(m, n)
            .into_iter()
            .find(|w| {
                let d = face_dual_vertices(*w);
                d.contains(&s.mid) && d.contains(&end_dual)
            })
            .expect("short side is a side of an adjacent white face");
        let face_area = if window.contains_black(face.m, face.n) {
            window.face(face.m, face.n).signed_area()
        } else {
            window.params().scale(face.m, face.n).powi(2)
        };
        pairing = pairing.max(face_area.sqrt() / eps);
        report.almost_segments.push(AlmostDegenerateSegment {
            black: s.black,
            interior: s.interior,
            endpoint,
            short_side: short,
            face,
            face_area,
        });
    }
    if !report.almost_segments.is_empty() {
        report.pairing_constant = Some(pairing);
    }
    report
}

fn white_neighbors_of_black(m: i64, n: i64) -> Vec<HexCoord> {
    crate::lattice::black_neighbors(m, n).iter().map(|x| x.0).collect()
}

/// The black faces adjacent to a white face, whose segments carry its sides.
pub fn face_segments(w: HexCoord) -> [HexCoord; 3] {
    white_neighbors(w.m, w.n).map(|x| x.0)
}
