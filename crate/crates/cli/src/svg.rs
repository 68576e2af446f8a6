//! SVG rendering of a window: white faces filled by the sign of their scale
//! factor, segments in black, optional branch cut and walk overlay.

use num_complex::Complex64;
use std::fmt::Write;
use tgraph::construction::TGraphWindow;

const POSITIVE: &str = "#e9c46a";
const NEGATIVE: &str = "#2a9d8f";
const WIDTH: f64 = 800.0;

#[derive(Default)]
pub struct Overlay {
    /// Half-line from `origin` in direction `direction`, drawn dashed.
    pub cut: Option<(Complex64, Complex64)>,
    pub walk: Option<Vec<Complex64>>,
}

pub fn render(window: &TGraphWindow, overlay: &Overlay) -> String {
    let r = window.radius();
    let faces: Vec<_> = (-r..=r).flat_map(|m| (-r..=r).map(move |n| (m, n))).map(|(m, n)| window.face(m, n)).collect();
    let (mut lo, mut hi) = (Complex64::new(f64::INFINITY, f64::INFINITY), Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for f in &faces {
        for v in f.vertices() {
            lo = Complex64::new(lo.re.min(v.re), lo.im.min(v.im));
            hi = Complex64::new(hi.re.max(v.re), hi.im.max(v.im));
        }
    }
    let span = (hi.re - lo.re).max(hi.im - lo.im).max(1e-9);
    let k = WIDTH / span;
    let height = (hi.im - lo.im) * k;
    let map = |p: Complex64| ((p.re - lo.re) * k, (hi.im - p.im) * k);
    let stroke = 0.6_f64.min(0.15 * k);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.1}" height="{:.1}" viewBox="0 0 {:.1} {:.1}">"#,
        WIDTH, height, WIDTH, height
    );
    let _ = writeln!(s, r#"<g id="faces" stroke="none">"#);
    for f in &faces {
        let pts: Vec<String> = f.vertices().iter().map(|&v| map(v)).map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
        let fill = if f.scale > 0.0 { POSITIVE } else { NEGATIVE };
        let _ = writeln!(s, r#"<polygon points="{}" fill="{fill}"/>"#, pts.join(" "));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g id="segments" stroke="black" stroke-width="{stroke:.3}">"#);
    for (m, n) in window.blacks() {
        let seg = window.segment(m, n);
        let ((x1, y1), (x2, y2)) = (map(seg.p1), map(seg.p2));
        let _ = writeln!(s, r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#);
    }
    let _ = writeln!(s, "</g>");
    if let Some((o, d)) = overlay.cut {
        let end = o + d / d.norm() * 2.0 * span;
        let ((x1, y1), (x2, y2)) = (map(o), map(end));
        let _ = writeln!(
            s,
            r##"<path id="cut" d="M {x1:.3} {y1:.3} L {x2:.3} {y2:.3}" stroke="#d62828" stroke-width="{:.3}" stroke-dasharray="6 4" fill="none"/>"##,
            2.0 * stroke
        );
    }
    if let Some(walk) = &overlay.walk {
        let pts: Vec<String> = walk.iter().map(|&p| map(p)).map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
        let _ = writeln!(
            s,
            r##"<polyline id="walk" points="{}" stroke="#6a040f" stroke-width="{:.3}" fill="none"/>"##,
            pts.join(" "),
            2.0 * stroke
        );
    }
    s.push_str("</svg>\n");
    s
}
