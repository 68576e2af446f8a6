use crate::analysis::window_reaching;
use crate::construction::{Params, TGraphWindow};
use crate::error::{Result, TGraphError};
use crate::lattice::HexCoord;
use crate::stats::mean_se;
use crate::walk::{walker_rng, JumpTable, Walker};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

#[derive(Clone, Debug, Serialize)]
pub struct IdentificationDiagnostic {
    pub d: f64,
    pub n: usize,
    pub n_walks: usize,
    pub start: Complex64,
    /// Centroid of the face `w_n` at distance about `D n` above the start.
    pub target: Complex64,
    /// Monte Carlo mean of `log(|X_tau - w_n| / |v - w_n|)`, with `|v - w_n|` about `D n`.
    pub statistic: f64,
    pub stderr: f64,
    /// `statistic -+ 3 stderr`
    pub ci: (f64, f64),
    /// `2 D^2 statistic`, the value of `M11 - M22` it implies in the large-`D` limit.
    pub implied_anisotropy: f64,
    pub implied_anisotropy_se: f64,
    /// Fraction of walks stopped by leaving the ball before time `n^2`.
    pub exit_fraction: f64,
}

/// Mean and standard error of `log(|x - target| / scale)` over `endpoints`.
pub fn log_statistic(endpoints: &[Complex64], target: Complex64, scale: f64) -> (f64, f64) {
    let v: Vec<f64> = endpoints.iter().map(|x| ((x - target).norm() / scale).ln()).collect();
    mean_se(&v)
}

fn nearest_face(window: &TGraphWindow, p: Complex64) -> (HexCoord, Complex64) {
    let r = window.radius();
    let mut best = (f64::INFINITY, HexCoord::white(0, 0), p);
    for m in -r..=r {
        for n in -r..=r - 1 {
            let c = window.face(m, n).centroid();
            let d = (c - p).norm();
            if d < best.0 {
                best = (d, HexCoord::white(m, n), c);
            }
        }
    }
    (best.1, best.2)
}

/// Walks from `v = v(b(0,0))` stopped at `min(n^2, exit from the ball of radius
/// D n / 2)`; the mean of `log(|X_tau - w_n| / |v - w_n|)` vanishes up to `O(D^-3)`
/// when the covariance is isotropic and is about `(M11 - M22) / (2 D^2)`
/// otherwise.
pub fn covariance_identification_diagnostic(
    params: &Params,
    d: f64,
    n: usize,
    n_walks: usize,
    seed: u64,
) -> Result<IdentificationDiagnostic> {
    if d < 5.0 {
        return Err(TGraphError::InvalidArgument(format!("D = {d} < 5")));
    }
    if n == 0 || n_walks < 2 {
        return Err(TGraphError::InvalidArgument("need n >= 1 and at least 2 walks".into()));
    }
    let window = window_reaching(params, d * n as f64 + 8.0)?;
    let table = Arc::new(JumpTable::from_window(&window));
    let start = window.vertex(0, 0);
    let (_, target) = nearest_face(&window, start + Complex64::new(0.0, d * n as f64));
    let horizon = (n * n) as f64;
    let ball = d * n as f64 / 2.0;
    let ends: Vec<(Complex64, bool)> = (0..n_walks)
        .into_par_iter()
        .map(|i| {
            let mut w = Walker::new(table.clone(), HexCoord::black(0, 0), walker_rng(seed, i as u64))?;
            while w.step(horizon)? {
                if (w.position() - start).norm() > ball {
                    return Ok((w.position(), true));
                }
            }
            Ok((w.position(), false))
        })
        .collect::<Result<_>>()?;
    let exits = ends.iter().filter(|e| e.1).count();
    let pts: Vec<Complex64> = ends.into_iter().map(|e| e.0).collect();
    // w_n is a face, so |v - w_n| differs from D n by O(1); centre on the exact start value.
    let (statistic, stderr) = log_statistic(&pts, target, (start - target).norm());
    Ok(IdentificationDiagnostic {
        d,
        n,
        n_walks,
        start,
        target,
        statistic,
        stderr,
        ci: (statistic - 3.0 * stderr, statistic + 3.0 * stderr),
        implied_anisotropy: 2.0 * d * d * statistic,
        implied_anisotropy_se: 2.0 * d * d * stderr,
        exit_fraction: exits as f64 / n_walks as f64,
    })
}
