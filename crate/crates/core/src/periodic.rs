//! Periodic T-graphs: the finite chain of the environment seen from the
//! walker, its stationary measure, and the CLT from regeneration blocks.

use crate::analysis::linsolve::bicgstab;
use crate::construction::{build_window, Params, Triangle};
use crate::error::{Result, TGraphError};
use crate::lattice::{rotate_black_120, HexCoord};
use crate::stats::{grouped_moments, jackknife, log_survival_fit, CovarianceEstimate, LinearFit};
use crate::walk::{jump_rates, walker_rng};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

/// Required accuracy of `pi P = pi`.
pub const STATIONARY_TOL: f64 = 1e-12;
const ROW_SUM_TOL: f64 = 1e-12;
const DENSE_LIMIT: usize = 2500;
/// Independent chains used by [`regeneration_clt`]; they double as jackknife groups.
pub const REGENERATION_CHAINS: usize = 100;

/// Lattice periods: `f(w(m + p, n)) = f(w(m, n + q)) = f(w(m, n))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Period {
    pub p: i64,
    pub q: i64,
}

/// Order of `exp(i pi a / b)` in the unit circle.
fn root_order(a: i64, b: i64) -> i64 {
    let (a, b) = (a as i128, b as i128);
    (2 * b / crate::construction::gcd_i128(a, 2 * b)) as i64
}

/// Smallest `p, q` with `(beta/gamma)^p = 1` and `(beta/alpha)^q = 1`, when
/// both rotation angles are exact rationals of pi.
pub fn detect_period(t: &Triangle) -> Option<Period> {
    match (t.theta1.pi_fraction, t.theta2.pi_fraction) {
        (Some((a1, b1)), Some((a2, b2))) => Some(Period { p: root_order(a1, b1), q: root_order(a2, b2) }),
        _ => None,
    }
}

/// One move of the quotient chain.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Transition {
    pub to: usize,
    pub prob: f64,
    /// Lattice shift `(dm, dn)` from the source representative to the lifted target.
    pub shift: (i64, i64),
    /// Planar displacement of the walker.
    pub displacement: Complex64,
}

/// Jump chain of the walk on the quotient by the period lattice.
///
/// State `k` is the class of `b(m, n)` with `0 <= m < p`, `0 <= n < q` and
/// `k = m q + n`.
#[derive(Clone, Debug, Serialize)]
pub struct QuotientChain {
    pub period: Period,
    pub params: Params,
    pub states: Vec<(i64, i64)>,
    /// The two moves out of each state, in the order `(plus, minus)`.
    pub moves: Vec<[Transition; 2]>,
    /// Mean holding time of each state.
    pub mean_wait: Vec<f64>,
    /// Planar translations of the graph by `(p, 0)` and `(0, q)`.
    pub translations: [Complex64; 2],
}

impl QuotientChain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state_of(&self, m: i64, n: i64) -> usize {
        let Period { p, q } = self.period;
        (m.rem_euclid(p) * q + n.rem_euclid(q)) as usize
    }

    /// Dense transition matrix; two moves to the same class are merged.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut p = DMatrix::zeros(n, n);
        for (s, mv) in self.moves.iter().enumerate() {
            for t in mv {
                p[(s, t.to)] += t.prob;
            }
        }
        p
    }

    /// `max_s |sum_t P(s, t) - 1|`.
    pub fn row_sum_residual(&self) -> f64 {
        self.moves.iter().map(|mv| (mv[0].prob + mv[1].prob - 1.0).abs()).fold(0.0, f64::max)
    }

    fn reachable(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(s) = stack.pop() {
            for t in &self.moves[s] {
                if t.prob > 0.0 && !seen[t.to] {
                    seen[t.to] = true;
                    stack.push(t.to);
                }
            }
        }
        seen
    }

    /// Closed communicating classes, each sorted.
    pub fn recurrent_classes(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let reach: Vec<Vec<bool>> = (0..n).map(|s| self.reachable(s)).collect();
        let mut assigned = vec![false; n];
        let mut classes = Vec::new();
        for s in 0..n {
            if assigned[s] {
                continue;
            }
            // recurrent iff everything reachable from s leads back to s
            if (0..n).all(|t| !reach[s][t] || reach[t][s]) {
                let class: Vec<usize> = (0..n).filter(|&t| reach[s][t]).collect();
                for &t in &class {
                    assigned[t] = true;
                }
                classes.push(class);
            }
        }
        classes
    }

    /// Planar position of the lift of `b(m, n)`.
    pub fn position(&self, m: i64, n: i64, base: &[Complex64]) -> Complex64 {
        let Period { p, q } = self.period;
        let (km, kn) = (m.div_euclid(p), n.div_euclid(q));
        base[self.state_of(m, n)] + self.translations[0] * km as f64 + self.translations[1] * kn as f64
    }

    /// Lift of `steps` jumps from `start`, drawing the same random numbers as
    /// [`crate::walk::Walker::step`] (a holding time, then a uniform).
    pub fn lift(&self, start: HexCoord, steps: usize, rng: &mut ChaCha8Rng) -> Vec<HexCoord> {
        let (mut m, mut n) = (start.m, start.n);
        let mut out = Vec::with_capacity(steps + 1);
        out.push(start);
        for _ in 0..steps {
            let _wait: f64 = rng.sample(Exp1);
            let u: f64 = rng.gen();
            let s = self.state_of(m, n);
            let mv = &self.moves[s];
            let t = if u < mv[0].prob { mv[0] } else { mv[1] };
            m += t.shift.0;
            n += t.shift.1;
            out.push(HexCoord::black(m, n));
        }
        out
    }

    /// Whether the lattice rotation by `2pi/3` is a symmetry of the chain:
    /// the largest `|P(R s, R t) - P(s, t)|`, or `None` when the rotation
    /// does not preserve the period lattice.
    pub fn rotation_defect(&self) -> Option<f64> {
        let Period { p, q } = self.period;
        if p != q {
            return None;
        }
        let rot = |s: usize| {
            let (m, n) = self.states[s];
            let (a, b) = rotate_black_120(m, n);
            self.state_of(a, b)
        };
        let mat = self.matrix();
        let mut worst: f64 = 0.0;
        for s in 0..self.len() {
            for t in 0..self.len() {
                worst = worst.max((mat[(rot(s), rot(t))] - mat[(s, t)]).abs());
            }
        }
        Some(worst)
    }
}

/// Build the quotient jump chain of a periodic graph.
pub fn quotient_chain(params: &Params, period: Period) -> Result<QuotientChain> {
    let Period { p, q } = period;
    if p < 1 || q < 1 {
        return Err(TGraphError::InvalidArgument(format!("period ({p}, {q})")));
    }
    for m in 0..p {
        for n in 0..q {
            let d = (params.f(m + p, n) - params.f(m, n)).norm() + (params.f(m, n + q) - params.f(m, n)).norm();
            if d > 1e-12 {
                return Err(TGraphError::InvalidArgument(format!("({p}, {q}) is not a period of f")));
            }
        }
    }
    let window = build_window(params, p.max(q) + 4)?;
    let mut states = Vec::with_capacity((p * q) as usize);
    let mut moves = Vec::with_capacity((p * q) as usize);
    let mut mean_wait = Vec::with_capacity((p * q) as usize);
    let index = |m: i64, n: i64| (m.rem_euclid(p) * q + n.rem_euclid(q)) as usize;
    for m in 0..p {
        for n in 0..q {
            let here = HexCoord::black(m, n);
            let r = jump_rates(here, &window)?;
            let origin = window.segment(m, n).interior;
            let total = r.plus.2 + r.minus.2;
            let mv = [r.plus, r.minus].map(|(b, pos, rate)| Transition {
                to: index(b.m, b.n),
                prob: rate / total,
                shift: (b.m - m, b.n - n),
                displacement: pos - origin,
            });
            states.push((m, n));
            moves.push(mv);
            mean_wait.push(1.0 / total);
        }
    }
    let o = window.vertex(0, 0);
    let translations = [window.vertex(p, 0) - o, window.vertex(0, q) - o];
    let chain = QuotientChain { period, params: params.clone(), states, moves, mean_wait, translations };
    let res = chain.row_sum_residual();
    if res > ROW_SUM_TOL {
        return Err(TGraphError::NoConvergence { iterations: 0, residual: res });
    }
    Ok(chain)
}

#[derive(Clone, Debug, Serialize)]
pub struct StationaryMeasure {
    pub probabilities: Vec<f64>,
    /// `max |pi P - pi|`.
    pub residual: f64,
}

impl StationaryMeasure {
    /// Reweight by holding times, giving the invariant measure of the
    /// continuous-time environment process.
    pub fn time_weighted(&self, mean_wait: &[f64]) -> StationaryMeasure {
        let w: Vec<f64> = self.probabilities.iter().zip(mean_wait).map(|(p, h)| p * h).collect();
        let z: f64 = w.iter().sum();
        StationaryMeasure { probabilities: w.into_iter().map(|x| x / z).collect(), residual: self.residual }
    }
}

fn balance_residual(p: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let v = DVector::from_column_slice(pi);
    let r = p.tr_mul(&v) - &v;
    r.amax()
}

/// Stationary law of the quotient chain.
pub fn stationary(chain: &QuotientChain) -> Result<StationaryMeasure> {
    let classes = chain.recurrent_classes();
    if classes.len() != 1 {
        return Err(TGraphError::InvalidArgument(format!("{} recurrent classes", classes.len())));
    }
    if chain.len() <= DENSE_LIMIT {
        return stationary_matrix(&chain.matrix());
    }
    stationary_sparse(chain)
}

/// Stationary law of a dense row-stochastic matrix with one recurrent class.
pub fn stationary_matrix(p: &DMatrix<f64>) -> Result<StationaryMeasure> {
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return Err(TGraphError::InvalidArgument("transition matrix must be square and nonempty".into()));
    }
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1
    let mut a = p.transpose() - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let lu = a.clone().lu();
    let mut x = lu.solve(&rhs).ok_or(TGraphError::NoConvergence { iterations: 0, residual: f64::INFINITY })?;
    for _ in 0..3 {
        let r = &rhs - &a * &x;
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
    }
    finish(p, x.as_slice().to_vec())
}

fn finish(p: &DMatrix<f64>, mut pi: Vec<f64>) -> Result<StationaryMeasure> {
    for v in &mut pi {
        if *v < 0.0 && *v > -1e-14 {
            *v = 0.0;
        }
    }
    let z: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= z);
    let residual = balance_residual(p, &pi);
    if residual > STATIONARY_TOL || pi.iter().any(|&v| v < 0.0) {
        return Err(TGraphError::NoConvergence { iterations: 0, residual });
    }
    Ok(StationaryMeasure { probabilities: pi, residual })
}

fn stationary_sparse(chain: &QuotientChain) -> Result<StationaryMeasure> {
    let n = chain.len();
    let apply = |x: &[f64], y: &mut [f64]| {
        y.iter_mut().zip(x).for_each(|(y, x)| *y = -x);
        for (s, mv) in chain.moves.iter().enumerate() {
            for t in mv {
                y[t.to] += t.prob * x[s];
            }
        }
        y[n - 1] = x.iter().sum();
    };
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let mut x = vec![1.0 / n as f64; n];
    let stats = bicgstab(apply, &rhs, &mut x, 1e-14, 100 * n);
    let mut pi = x;
    let z: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= z);
    let mut y = vec![0.0; n];
    for (s, mv) in chain.moves.iter().enumerate() {
        for t in mv {
            y[t.to] += t.prob * pi[s];
        }
    }
    let residual = y.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if residual > STATIONARY_TOL || pi.iter().any(|&v| v < -1e-14) {
        return Err(TGraphError::NoConvergence { iterations: stats.iterations, residual });
    }
    Ok(StationaryMeasure { probabilities: pi.into_iter().map(|v| v.max(0.0)).collect(), residual })
}

/// `sqrt(N sum pi^2)`: the `L^2` norm of the density of `pi` with respect to
/// the uniform law on `N` states.
pub fn density_diagnostic(pi: &[f64]) -> f64 {
    (pi.len() as f64 * pi.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// One periodic approximant in a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct ApproximantRow {
    /// Interior angles as `(numerator, denominator)` multiples of pi.
    pub angles: [(i64, i64); 3],
    pub period: Period,
    pub states: usize,
    /// Density norm of the jump-chain stationary law.
    pub jump_norm: f64,
    /// Density norm of the time-weighted stationary law.
    pub time_norm: f64,
    pub residual: f64,
}

/// Density norms of the rational triangles with angles
/// `round(x q) / q * pi` approaching `target` (in units of pi).
pub fn approximant_sweep(target: [f64; 2], denominators: &[i64], lambda: Complex64) -> Result<Vec<ApproximantRow>> {
    let mut rows = Vec::new();
    for &den in denominators {
        let a = (target[0] * den as f64).round() as i64;
        let b = (target[1] * den as f64).round() as i64;
        let c = den - a - b;
        if a < 1 || b < 1 || c < 1 {
            return Err(TGraphError::InvalidArgument(format!("denominator {den} gives a degenerate triangle")));
        }
        let frac = |k| crate::construction::Angle::pi_fraction(k, den);
        let t = Triangle::from_angles(frac(a)?, frac(b)?, frac(c)?)?;
        let period = detect_period(&t).expect("rational angles");
        let chain = quotient_chain(&Params::new(t.clone(), lambda)?, period)?;
        let pi = stationary(&chain)?;
        let timed = pi.time_weighted(&chain.mean_wait);
        let angles = t.angles.map(|x| x.pi_fraction.expect("rational angles"));
        rows.push(ApproximantRow {
            angles,
            period,
            states: chain.len(),
            jump_norm: density_diagnostic(&pi.probabilities),
            time_norm: density_diagnostic(&timed.probabilities),
            residual: pi.residual,
        });
    }
    Ok(rows)
}

/// Covariance from the excursions between returns to the class of `x0`.
#[derive(Clone, Debug, Serialize)]
pub struct RegenerationEstimate {
    /// `sum D D^T / sum tau`, jackknifed over independent chains.
    pub covariance: CovarianceEstimate,
    pub n_blocks: usize,
    pub mean_duration: f64,
    pub mean_jumps: f64,
    /// Lag-1 correlation of successive block displacements, per coordinate.
    pub lag1: [f64; 2],
    /// Standard error of a zero correlation, `1 / sqrt(pairs)`.
    pub lag1_se: f64,
    /// Fit of the log survival function of the block lengths in jumps.
    pub tail_fit: Option<LinearFit>,
    #[serde(skip)]
    pub jumps: Vec<f64>,
}

struct Block {
    displacement: Complex64,
    duration: f64,
    jumps: u64,
}

fn run_blocks(chain: &QuotientChain, x0: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Block> {
    let mut out = Vec::with_capacity(count);
    let mut s = x0;
    for _ in 0..count {
        let mut b = Block { displacement: Complex64::new(0.0, 0.0), duration: 0.0, jumps: 0 };
        loop {
            let wait: f64 = rng.sample(Exp1);
            let u: f64 = rng.gen();
            b.duration += wait * chain.mean_wait[s];
            let mv = &chain.moves[s];
            let t = if u < mv[0].prob { mv[0] } else { mv[1] };
            b.displacement += t.displacement;
            b.jumps += 1;
            s = t.to;
            if s == x0 {
                break;
            }
        }
        out.push(b);
    }
    out
}

fn lag1(blocks: &[Vec<Block>], f: impl Fn(Complex64) -> f64) -> (f64, usize) {
    let all: Vec<f64> = blocks.iter().flatten().map(|b| f(b.displacement)).collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let var = all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / all.len() as f64;
    let mut acc = 0.0;
    let mut pairs = 0;
    for chain in blocks {
        for w in chain.windows(2) {
            acc += (f(w[0].displacement) - mean) * (f(w[1].displacement) - mean);
            pairs += 1;
        }
    }
    (acc / pairs as f64 / var, pairs)
}

/// Continuous-time covariance of the walk from iid excursion blocks.
///
/// [`REGENERATION_CHAINS`] chains, each on its own stream of `seed`, run
/// `n_blocks / REGENERATION_CHAINS` consecutive excursions from `x0`.
pub fn regeneration_clt(chain: &QuotientChain, x0: HexCoord, n_blocks: usize, seed: u64) -> Result<RegenerationEstimate> {
    if !x0.is_black() {
        return Err(TGraphError::InvalidArgument(format!("{x0} is not black")));
    }
    let per = n_blocks / REGENERATION_CHAINS;
    if per < 2 {
        return Err(TGraphError::InvalidArgument(format!("need at least {} blocks", 2 * REGENERATION_CHAINS)));
    }
    let s0 = chain.state_of(x0.m, x0.n);
    if !chain.recurrent_classes().iter().any(|c| c.contains(&s0)) {
        return Err(TGraphError::InvalidArgument(format!("{x0} is transient")));
    }
    let blocks: Vec<Vec<Block>> = (0..REGENERATION_CHAINS)
        .into_par_iter()
        .map(|i| run_blocks(chain, s0, per, &mut walker_rng(seed, i as u64)))
        .collect();
    let samples: Vec<Vec<(Complex64, f64)>> =
        blocks.iter().map(|c| c.iter().map(|b| (b.displacement, b.duration)).collect()).collect();
    let groups: Vec<_> = samples.iter().map(|s| grouped_moments(s, 1)[0]).collect();
    let (full, se, reps) = jackknife(&groups, |m| m.ratio_covariance());
    let (mean, mean_se, _) = jackknife(&groups, |m| m.mean());
    let total = per * REGENERATION_CHAINS;
    let covariance = CovarianceEstimate::assemble(full, se, reps, mean, mean_se, total, 0);
    let jumps: Vec<f64> = blocks.iter().flatten().map(|b| b.jumps as f64).collect();
    let mean_duration = blocks.iter().flatten().map(|b| b.duration).sum::<f64>() / total as f64;
    let (lx, pairs) = lag1(&blocks, |z| z.re);
    let (ly, _) = lag1(&blocks, |z| z.im);
    Ok(RegenerationEstimate {
        covariance,
        n_blocks: total,
        mean_duration,
        mean_jumps: jumps.iter().sum::<f64>() / total as f64,
        lag1: [lx, ly],
        lag1_se: 1.0 / (pairs as f64).sqrt(),
        tail_fit: log_survival_fit(&jumps, 20, 50),
        jumps,
    })
}
