use super::linsolve::{bicgstab, SolveStats};
use crate::construction::{build_window, psi, Params, TGraphWindow};
use crate::error::{Result, TGraphError};
use crate::geometry::{cross, point_segment_distance};
use crate::lattice::HexCoord;
use crate::walk::jump_rates;
use num_complex::Complex64;
use serde::Serialize;
use std::collections::VecDeque;

/// Mean-value residual required of every solution.
pub const SOLVER_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 100_000;
/// Target of the Krylov iteration on the residual 2-norm, well below
/// `SOLVER_TOL` so that the solution error, not just the residual, is small.
const KRYLOV_TOL: f64 = 1e-13;

/// An open region of the plane.
#[derive(Clone, Debug, Serialize)]
pub enum Domain {
    Disc { center: Complex64, radius: f64 },
    /// Simple polygon, vertices in order.
    Polygon(Vec<Complex64>),
}

impl Domain {
    pub fn unit_disc() -> Self {
        Domain::Disc { center: Complex64::new(0.0, 0.0), radius: 1.0 }
    }

    pub fn contains(&self, p: Complex64) -> bool {
        match self {
            Domain::Disc { center, radius } => (p - center).norm() < *radius,
            Domain::Polygon(v) => {
                let mut inside = false;
                for i in 0..v.len() {
                    let (a, b) = (v[i], v[(i + 1) % v.len()]);
                    if (a.im > p.im) != (b.im > p.im) && p.re < a.re + (p.im - a.im) * (b.re - a.re) / (b.im - a.im) {
                        inside = !inside;
                    }
                }
                inside && self.boundary_distance(p) > 0.0
            }
        }
    }

    fn boundary_distance(&self, p: Complex64) -> f64 {
        match self {
            Domain::Disc { center, radius } => ((p - center).norm() - radius).abs(),
            Domain::Polygon(v) => (0..v.len())
                .map(|i| point_segment_distance(p, v[i], v[(i + 1) % v.len()]))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// `p` itself if inside, else the nearest point of the closure.
    pub fn project(&self, p: Complex64) -> Complex64 {
        if self.contains(p) {
            return p;
        }
        match self {
            Domain::Disc { center, radius } => {
                let d = p - center;
                if d.norm() == 0.0 {
                    *center
                } else {
                    center + d * (radius / d.norm())
                }
            }
            Domain::Polygon(v) => {
                let mut best = (f64::INFINITY, p);
                for i in 0..v.len() {
                    let (a, b) = (v[i], v[(i + 1) % v.len()]);
                    let d = b - a;
                    let t = ((p - a).re * d.re + (p - a).im * d.im) / d.norm_sqr();
                    let q = a + d * t.clamp(0.0, 1.0);
                    if (p - q).norm() < best.0 {
                        best = ((p - q).norm(), q);
                    }
                }
                best.1
            }
        }
    }

    /// Largest `|x|` over the region.
    pub fn extent(&self) -> f64 {
        match self {
            Domain::Disc { center, radius } => center.norm() + radius,
            Domain::Polygon(v) => v.iter().map(|z| z.norm()).fold(0.0, f64::max),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Domain::Disc { radius, .. } if !(*radius > 0.0) => {
                Err(TGraphError::InvalidArgument(format!("disc radius {radius}")))
            }
            Domain::Polygon(v) if v.len() < 3 => Err(TGraphError::InvalidArgument("polygon needs 3 vertices".into())),
            Domain::Polygon(v) => {
                let area: f64 = (0..v.len()).map(|i| cross(v[i], v[(i + 1) % v.len()])).sum();
                if area == 0.0 {
                    Err(TGraphError::InvalidArgument("polygon has zero area".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// How boundary vertices outside the region receive their data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundaryMode {
    /// Value of `f` at the nearest point of the region.
    Project,
    /// Value of `f` at the vertex itself; for data defined on the whole plane.
    Extend,
}

#[derive(Clone, Debug, Serialize)]
pub struct HarmonicField {
    pub scale: f64,
    pub interior: Vec<HexCoord>,
    /// Scaled positions `v(b) / n` of the interior vertices.
    pub positions: Vec<Complex64>,
    pub values: Vec<f64>,
    pub boundary: Vec<(HexCoord, Complex64, f64)>,
    /// `max |p+ h(v+) + p- h(v-) - h(v)|` over interior vertices.
    pub max_residual: f64,
    pub solve: SolveStats,
    #[serde(skip)]
    lookup: std::collections::HashMap<(i64, i64), usize>,
}

impl HarmonicField {
    pub fn value(&self, b: HexCoord) -> Option<f64> {
        self.lookup.get(&(b.m, b.n)).map(|&i| self.values[i])
    }

    pub fn boundary_value(&self, b: HexCoord) -> Option<f64> {
        self.boundary.iter().find(|e| e.0 == b).map(|e| e.2)
    }

    /// The interior vertex whose scaled position is closest to `p`.
    pub fn nearest(&self, p: Complex64) -> Option<(HexCoord, Complex64, f64)> {
        (0..self.interior.len())
            .min_by(|&i, &j| (self.positions[i] - p).norm().total_cmp(&(self.positions[j] - p).norm()))
            .map(|i| (self.interior[i], self.positions[i], self.values[i]))
    }
}

/// A window whose black vertices cover `scale * domain` with a margin.
pub fn window_for_domain(params: &Params, scale: f64, domain: &Domain) -> Result<TGraphWindow> {
    window_reaching(params, scale * domain.extent() + 6.0)
}

/// Smallest window (grown geometrically) whose ring stays farther than `need` from the origin.
pub(crate) fn window_reaching(params: &Params, need: f64) -> Result<TGraphWindow> {
    let mut r = (need.ceil() as i64).max(4);
    loop {
        let ring_min = (-r..=r)
            .flat_map(|k| [(k, -r), (k, r), (-r, k), (r, k)])
            .map(|(m, n)| psi(m, n, params).norm())
            .fold(f64::INFINITY, f64::min);
        if ring_min > need {
            break;
        }
        r = r * 5 / 4 + 1;
    }
    build_window(params, r + 2)
}

/// Solve the mean-value equation of the jump chain on the black vertices
/// whose scaled positions lie in `domain`.
pub fn dirichlet_solve(
    window: &TGraphWindow,
    scale: f64,
    domain: &Domain,
    f: &dyn Fn(Complex64) -> f64,
    mode: BoundaryMode,
) -> Result<HarmonicField> {
    domain.validate()?;
    if !(scale > 0.0) {
        return Err(TGraphError::InvalidArgument(format!("scale {scale}")));
    }
    let r = window.radius();
    let mut index = vec![u32::MAX; window.black_count()];
    let mut interior = Vec::new();
    let mut positions = Vec::new();
    for (m, n) in window.blacks() {
        let p = window.vertex(m, n) / scale;
        if domain.contains(p) {
            if m.abs().max(n.abs()) >= r {
                return Err(TGraphError::OutsideWindow(format!("region reaches the window edge at b({m},{n})")));
            }
            index[window.black_index(m, n)] = interior.len() as u32;
            interior.push(HexCoord::black(m, n));
            positions.push(p);
        }
    }
    if interior.is_empty() {
        return Err(TGraphError::InvalidArgument("no vertex inside the region".into()));
    }
    // Node encoding: interior i as i, boundary j as !j.
    let mut boundary: Vec<(HexCoord, Complex64, f64)> = Vec::new();
    let mut bindex = std::collections::HashMap::new();
    let mut rows: Vec<[(usize, f64); 2]> = Vec::with_capacity(interior.len());
    for b in &interior {
        let jr = jump_rates(*b, window)?;
        let total = jr.plus.2 + jr.minus.2;
        let mut row = [(0usize, 0.0); 2];
        for (k, (dest, _, rate)) in [jr.plus, jr.minus].into_iter().enumerate() {
            let id = index[window.black_index(dest.m, dest.n)];
            let node = if id != u32::MAX {
                id as usize
            } else {
                let j = *bindex.entry((dest.m, dest.n)).or_insert_with(|| {
                    let x = window.vertex(dest.m, dest.n) / scale;
                    let val = match mode {
                        BoundaryMode::Project => f(domain.project(x)),
                        BoundaryMode::Extend => f(x),
                    };
                    boundary.push((dest, x, val));
                    boundary.len() - 1
                });
                !j
            };
            row[k] = (node, rate / total);
        }
        rows.push(row);
    }
    check_access(&rows)?;
    let n = interior.len();
    let mut rhs = vec![0.0; n];
    for (i, row) in rows.iter().enumerate() {
        for &(node, p) in row {
            if node >= n {
                rhs[i] += p * boundary[!node].2;
            }
        }
    }
    let apply = |x: &[f64], y: &mut [f64]| {
        for (i, row) in rows.iter().enumerate() {
            let mut s = x[i];
            for &(node, p) in row {
                if node < n {
                    s -= p * x[node];
                }
            }
            y[i] = s;
        }
    };
    let mut values = rhs.clone();
    let stats = bicgstab(apply, &rhs, &mut values, KRYLOV_TOL, MAX_ITERATIONS);
    let value_of = |node: usize| if node < n { values[node] } else { boundary[!node].2 };
    let max_residual = rows
        .iter()
        .enumerate()
        .map(|(i, row)| (row[0].1 * value_of(row[0].0) + row[1].1 * value_of(row[1].0) - values[i]).abs())
        .fold(0.0, f64::max);
    if max_residual > SOLVER_TOL {
        return Err(TGraphError::NoConvergence { iterations: stats.iterations, residual: max_residual });
    }
    let lookup = interior.iter().enumerate().map(|(i, b)| ((b.m, b.n), i)).collect();
    Ok(HarmonicField { scale, interior, positions, values, boundary, max_residual, solve: stats, lookup })
}

/// Every interior vertex must reach the boundary by oriented steps.
fn check_access(rows: &[[(usize, f64); 2]]) -> Result<()> {
    let n = rows.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut reached = vec![false; n];
    let mut queue = VecDeque::new();
    for (i, row) in rows.iter().enumerate() {
        for &(node, _) in row {
            if node < n {
                preds[node].push(i);
            } else if !reached[i] {
                reached[i] = true;
                queue.push_back(i);
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        for &j in &preds[i] {
            if !reached[j] {
                reached[j] = true;
                queue.push_back(j);
            }
        }
    }
    match reached.iter().filter(|r| !**r).count() {
        0 => Ok(()),
        k => Err(TGraphError::Unreachable(format!("{k} interior vertices cannot reach the boundary"))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub unknowns: usize,
    pub max_error: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Each error is at most 1.05 times the previous one.
    pub non_increasing: bool,
}

/// Solve at each scale and report `max |h(v) - f(v/n)|` over the vertices
/// nearest to the probe points.
pub fn dirichlet_convergence(
    params: &Params,
    domain: &Domain,
    f: &dyn Fn(Complex64) -> f64,
    n_list: &[usize],
    probes: &[Complex64],
    mode: BoundaryMode,
) -> Result<ConvergenceTable> {
    let mut rows = Vec::new();
    for &n in n_list {
        let window = window_for_domain(params, n as f64, domain)?;
        let field = dirichlet_solve(&window, n as f64, domain, f, mode)?;
        let mut max_error: f64 = 0.0;
        for &p in probes {
            let (_, x, h) = field
                .nearest(p)
                .ok_or_else(|| TGraphError::InvalidArgument("empty field".into()))?;
            max_error = max_error.max((h - f(x)).abs());
        }
        rows.push(ConvergenceRow {
            n,
            unknowns: field.interior.len(),
            max_error,
            iterations: field.solve.iterations,
            residual: field.max_residual,
        });
    }
    let non_increasing = rows.windows(2).all(|w| w[1].max_error <= 1.05 * w[0].max_error);
    Ok(ConvergenceTable { rows, non_increasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::Triangle;

    fn params() -> Params {
        Params::with_angle(Triangle::equilateral(), 0.37)
    }

    #[test]
    fn domain_projection() {
        let d = Domain::unit_disc();
        assert_eq!(d.project(Complex64::new(0.2, 0.1)), Complex64::new(0.2, 0.1));
        assert!((d.project(Complex64::new(3.0, 4.0)) - Complex64::new(0.6, 0.8)).norm() < 1e-15);
        let sq = Domain::Polygon(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, 1.0),
        ]);
        assert!(sq.contains(Complex64::new(0.5, 0.5)));
        assert!(!sq.contains(Complex64::new(1.5, 0.5)));
        assert!((sq.project(Complex64::new(1.5, 0.5)) - Complex64::new(1.0, 0.5)).norm() < 1e-15);
        assert!((sq.project(Complex64::new(2.0, 2.0)) - Complex64::new(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn constants_and_linear_data_are_reproduced() {
        let d = Domain::unit_disc();
        let w = window_for_domain(&params(), 8.0, &d).unwrap();
        let c = dirichlet_solve(&w, 8.0, &d, &|_| 2.5, BoundaryMode::Project).unwrap();
        assert!(c.values.iter().all(|v| (v - 2.5).abs() < 1e-9));
        let lin = dirichlet_solve(&w, 8.0, &d, &|z| z.re - 0.3 * z.im, BoundaryMode::Extend).unwrap();
        for (x, h) in lin.positions.iter().zip(&lin.values) {
            assert!((h - (x.re - 0.3 * x.im)).abs() < 1e-8);
        }
    }

    #[test]
    fn mean_value_property_per_vertex() {
        let d = Domain::unit_disc();
        let w = window_for_domain(&params(), 10.0, &d).unwrap();
        let field = dirichlet_solve(&w, 10.0, &d, &|z| z.re * z.re - z.im * z.im, BoundaryMode::Project).unwrap();
        for b in &field.interior {
            let jr = jump_rates(*b, &w).unwrap();
            let at = |v: HexCoord| field.value(v).or_else(|| field.boundary_value(v)).unwrap();
            let mean = (jr.plus.2 * at(jr.plus.0) + jr.minus.2 * at(jr.minus.0)) / (jr.plus.2 + jr.minus.2);
            assert!((mean - field.value(*b).unwrap()).abs() <= SOLVER_TOL);
        }
    }

    #[test]
    fn bad_regions_are_rejected() {
        let w = window_for_domain(&params(), 4.0, &Domain::unit_disc()).unwrap();
        let tiny = Domain::Disc { center: Complex64::new(0.123, 0.456), radius: 1e-6 };
        assert!(dirichlet_solve(&w, 4.0, &tiny, &|_| 0.0, BoundaryMode::Project).is_err());
        let flat = Domain::Polygon(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)]);
        assert!(dirichlet_solve(&w, 4.0, &flat, &|_| 0.0, BoundaryMode::Project).is_err());
        assert!(check_access(&[[(0, 0.5), (1, 0.5)], [(0, 0.5), (1, 0.5)]]).is_err());
    }
}
