//! The balanced continuous-time walk: from `v(b)` it jumps to the two
//! endpoints of the segment of `b` at rates inverse to their distances.

use crate::construction::{build_window, Params, TGraphWindow};
use crate::error::{Result, TGraphError};
use crate::lattice::HexCoord;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// Walkers rebuild their window once they come this close to its boundary.
pub const EXTENSION_GAP: i64 = 3;
const NO_NEXT: u32 = u32::MAX;
// set on `next` when the destination is close to the window boundary
const EDGE_FLAG: u32 = 1 << 31;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WalkState {
    pub vertex: HexCoord,
    pub position: Complex64,
    pub time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpRates {
    pub plus: (HexCoord, Complex64, f64),
    pub minus: (HexCoord, Complex64, f64),
    /// `v+ - v` and `v- - v` from the local flow.
    pub steps: [Complex64; 2],
}

impl JumpRates {
    /// `r+ (v+ - v) + r- (v- - v)`, zero for a balanced walk.
    pub fn drift(&self) -> Complex64 {
        self.steps[0] * self.plus.2 + self.steps[1] * self.minus.2
    }
}

/// Rates out of `v(b)`: `r+- = 1 / |v+- - v|` towards the endpoints `v+-` of the
/// segment of `b`, together with the black faces owning those endpoints. The
/// increments `v+- - v` come from the local flow rather than from positions.
pub fn jump_rates(vertex: HexCoord, window: &TGraphWindow) -> Result<JumpRates> {
    let (m, n) = (vertex.m, vertex.n);
    if !vertex.is_black() || !window.contains_black(m, n) {
        return Err(TGraphError::OutsideWindow(vertex.to_string()));
    }
    let s = window.segment(m, n);
    let mut out = [(vertex, s.p1, 0.0); 2];
    for (k, (end, p)) in s.ends.iter().zip([s.p1, s.p2]).enumerate() {
        let d = s.steps[k].norm();
        if d == 0.0 {
            return Err(TGraphError::NearDegenerate { vertex, margin: 0.0 });
        }
        let (bm, bn) = window
            .owner(*end)
            .ok_or_else(|| TGraphError::OutsideWindow(format!("owner of {end}")))?;
        out[k] = (HexCoord::black(bm, bn), p, 1.0 / d);
    }
    Ok(JumpRates { plus: out[0], minus: out[1], steps: s.steps })
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    next: [u32; 2],
    p_plus: f64,
    mean_wait: f64,
}

const TILE: i64 = 8;

/// Jump data of every black vertex of a window, packed for fast stepping.
///
/// Entries are stored in 8x8 tiles of lattice coordinates so that a walker
/// mostly touches a few cache lines.
#[derive(Clone, Debug)]
pub struct JumpTable {
    params: Params,
    radius: i64,
    tiles: i64,
    entries: Vec<Entry>,
    positions: Vec<Complex64>,
}

impl JumpTable {
    pub fn new(params: &Params, radius: i64) -> Result<Self> {
        let window = build_window(params, radius)?;
        Ok(Self::from_window(&window))
    }

    pub fn from_window(window: &TGraphWindow) -> Self {
        let radius = window.radius();
        let tiles = (2 * radius + 1 + TILE - 1) / TILE;
        let len = (tiles * tiles * TILE * TILE) as usize;
        let mut table = JumpTable {
            params: window.params().clone(),
            radius,
            tiles,
            entries: vec![Entry { next: [NO_NEXT; 2], p_plus: 0.0, mean_wait: 0.0 }; len],
            positions: vec![Complex64::new(f64::NAN, f64::NAN); len],
        };
        for (m, n) in window.blacks() {
            let s = window.segment(m, n);
            let mut next = [NO_NEXT; 2];
            for (k, end) in s.ends.iter().enumerate() {
                if let Some((bm, bn)) = window.owner(*end) {
                    next[k] = table.index(bm, bn) as u32;
                    if bm.abs().max(bn.abs()) >= radius - EXTENSION_GAP {
                        next[k] |= EDGE_FLAG;
                    }
                }
            }
            let rp = 1.0 / s.steps[0].norm();
            let rm = 1.0 / s.steps[1].norm();
            let i = table.index(m, n);
            table.entries[i] = Entry { next, p_plus: rp / (rp + rm), mean_wait: 1.0 / (rp + rm) };
            table.positions[i] = s.interior;
        }
        table
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    fn index(&self, m: i64, n: i64) -> usize {
        let (a, b) = (m + self.radius, n + self.radius);
        (((a / TILE) * self.tiles + b / TILE) * TILE * TILE + (a % TILE) * TILE + b % TILE) as usize
    }

    fn coords(&self, idx: usize) -> (i64, i64) {
        let i = idx as i64;
        let (tile, local) = (i / (TILE * TILE), i % (TILE * TILE));
        let a = (tile / self.tiles) * TILE + local / TILE;
        let b = (tile % self.tiles) * TILE + local % TILE;
        (a - self.radius, b - self.radius)
    }

    pub fn position(&self, m: i64, n: i64) -> Complex64 {
        self.positions[self.index(m, n)]
    }

}

/// A single walker with its own random stream.
pub struct Walker {
    table: Arc<JumpTable>,
    idx: usize,
    time: f64,
    jumps: u64,
    rng: ChaCha8Rng,
}

/// The random stream of walker `id` under master seed `seed`.
pub fn walker_rng(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl Walker {
    pub fn new(table: Arc<JumpTable>, start: HexCoord, rng: ChaCha8Rng) -> Result<Self> {
        if !start.is_black() || start.m.abs().max(start.n.abs()) >= table.radius - EXTENSION_GAP {
            return Err(TGraphError::OutsideWindow(format!("start {start}")));
        }
        let idx = table.index(start.m, start.n);
        Ok(Walker { table, idx, time: 0.0, jumps: 0, rng })
    }

    pub fn state(&self) -> WalkState {
        let (m, n) = self.table.coords(self.idx);
        WalkState { vertex: HexCoord::black(m, n), position: self.table.positions[self.idx], time: self.time }
    }

    pub fn position(&self) -> Complex64 {
        self.table.positions[self.idx]
    }

    pub fn jumps(&self) -> u64 {
        self.jumps
    }

    pub fn table(&self) -> &JumpTable {
        &self.table
    }

    fn extend(&mut self) -> Result<()> {
        let (m, n) = self.table.coords(self.idx);
        let r = (self.table.radius * 3 + 1) / 2;
        log::debug!("extending walker window to radius {r}");
        let table = JumpTable::new(&self.table.params, r)?;
        self.idx = table.index(m, n);
        self.table = Arc::new(table);
        Ok(())
    }

    /// Draw the next holding time and destination, and move unless the jump
    /// would happen after `horizon`. Returns whether a jump happened.
    pub fn step(&mut self, horizon: f64) -> Result<bool> {
        let e = &self.table.entries[self.idx];
        let wait: f64 = self.rng.sample::<f64, _>(Exp1) * e.mean_wait;
        let u: f64 = self.rng.gen();
        if self.time + wait > horizon {
            self.time = horizon;
            return Ok(false);
        }
        let next = e.next[if u < e.p_plus { 0 } else { 1 }];
        debug_assert!(next != NO_NEXT);
        self.time += wait;
        self.idx = (next & !EDGE_FLAG) as usize;
        self.jumps += 1;
        if next & EDGE_FLAG != 0 {
            self.extend()?;
        }
        Ok(true)
    }

    /// Run until `horizon`, discarding the path.
    pub fn run_to(&mut self, horizon: f64) -> Result<()> {
        while self.step(horizon)? {}
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<WalkState>,
    pub horizon: f64,
    pub seed: u64,
}

impl Trajectory {
    /// The state occupied at time `t`.
    pub fn at(&self, t: f64) -> &WalkState {
        let k = self.times.partition_point(|&s| s <= t);
        &self.states[k.saturating_sub(1)]
    }

    pub fn to_csv_rows(&self) -> Vec<(f64, i64, i64, f64, f64)> {
        self.states.iter().map(|s| (s.time, s.vertex.m, s.vertex.n, s.position.re, s.position.im)).collect()
    }
}

/// Positions at times `0, dt, 2dt, ...` up to the horizon.
pub fn skeleton(traj: &Trajectory, dt: f64) -> Vec<Complex64> {
    let k = (traj.horizon / dt).floor() as usize;
    (0..=k).map(|i| traj.at(i as f64 * dt).position).collect()
}

/// Window radius comfortably containing a walk of duration `horizon`.
pub fn default_radius(params: &Params, horizon: f64) -> i64 {
    let t = &params.triangle;
    let unit = (t.a.min(t.c)) / 2.0;
    (8.0 * horizon.sqrt() / unit).ceil() as i64 + 2 * EXTENSION_GAP + 4
}

/// Simulate one walk from `x0` up to time `horizon`.
pub fn simulate(params: &Params, x0: HexCoord, horizon: f64, seed: u64) -> Result<Trajectory> {
    if !(horizon > 0.0) {
        return Err(TGraphError::InvalidArgument(format!("horizon {horizon} must be positive")));
    }
    let r = default_radius(params, horizon) + x0.m.abs().max(x0.n.abs());
    let table = Arc::new(JumpTable::new(params, r)?);
    simulate_in(table, x0, horizon, seed, 0)
}

/// Simulate walker `id` starting from an existing table.
pub fn simulate_in(table: Arc<JumpTable>, x0: HexCoord, horizon: f64, seed: u64, id: u64) -> Result<Trajectory> {
    let mut w = Walker::new(table, x0, walker_rng(seed, id))?;
    let mut times = vec![0.0];
    let mut states = vec![w.state()];
    while w.step(horizon)? {
        times.push(w.time);
        states.push(w.state());
    }
    Ok(Trajectory { times, states, horizon, seed })
}

/// Displacements `X_T - X_0` of `n_walks` independent walkers.
///
/// Walker `i` uses stream `i` of `seed`, so results do not depend on thread
/// scheduling.
pub fn endpoint_displacements(
    table: Arc<JumpTable>,
    x0: HexCoord,
    horizon: f64,
    n_walks: usize,
    seed: u64,
) -> Result<Vec<Complex64>> {
    (0..n_walks)
        .into_par_iter()
        .map(|i| {
            let mut w = Walker::new(table.clone(), x0, walker_rng(seed, i as u64))?;
            let start = w.position();
            w.run_to(horizon)?;
            Ok(w.position() - start)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::Triangle;

    fn params() -> Params {
        Params::with_angle(Triangle::equilateral(), 0.37)
    }

    #[test]
    fn balance_at_every_vertex() {
        let w = build_window(&params(), 20).unwrap();
        for (m, n) in w.blacks() {
            if m.abs().max(n.abs()) >= 19 {
                continue;
            }
            let j = jump_rates(HexCoord::black(m, n), &w).unwrap();
            let v = w.vertex(m, n);
            assert!(j.drift().norm() < 1e-12, "{}", j.drift());
            // the local increments agree with differences of positions
            assert!((j.steps[0] - (j.plus.1 - v)).norm() < 1e-10);
            assert!((j.steps[1] - (j.minus.1 - v)).norm() < 1e-10);
            let h = |p: Complex64| 0.3 * p.re - 1.7 * p.im;
            let avg = (j.plus.2 * h(j.plus.1) + j.minus.2 * h(j.minus.1)) / (j.plus.2 + j.minus.2);
            assert!((avg - h(v)).abs() < 1e-12);
            assert_eq!(w.vertex(j.plus.0.m, j.plus.0.n), j.plus.1);
        }
    }

    #[test]
    fn repeatable_and_radius_independent() {
        let p = params();
        let a = simulate(&p, HexCoord::black(0, 0), 50.0, 9).unwrap();
        let b = simulate(&p, HexCoord::black(0, 0), 50.0, 9).unwrap();
        assert_eq!(a.states, b.states);
        let small = Arc::new(JumpTable::new(&p, 15).unwrap());
        let big = Arc::new(JumpTable::new(&p, 60).unwrap());
        let c = simulate_in(small, HexCoord::black(0, 0), 200.0, 4, 3).unwrap();
        let d = simulate_in(big, HexCoord::black(0, 0), 200.0, 4, 3).unwrap();
        assert_eq!(c.states, d.states);
        assert_eq!(c.times, d.times);
    }

    #[test]
    fn skeleton_shape() {
        let t = simulate(&params(), HexCoord::black(1, -1), 10.5, 2).unwrap();
        let sk = skeleton(&t, 1.0);
        assert_eq!(sk.len(), 11);
        assert_eq!(sk[0], t.states[0].position);
        let frozen = Trajectory { times: vec![0.0], states: vec![t.states[0]], horizon: 3.0, seed: 0 };
        assert!(skeleton(&frozen, 1.0).iter().all(|&z| z == t.states[0].position));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(simulate(&params(), HexCoord::black(0, 0), 0.0, 1).is_err());
        let table = Arc::new(JumpTable::new(&params(), 10).unwrap());
        assert!(Walker::new(table, HexCoord::black(9, 0), walker_rng(1, 0)).is_err());
    }
}
