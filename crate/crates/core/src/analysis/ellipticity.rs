use crate::construction::Params;
use crate::error::{Result, TGraphError};
use crate::lattice::HexCoord;
use crate::walk::{walker_rng, JumpTable, Walker, EXTENSION_GAP};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Debug, Serialize)]
pub struct Extremum {
    pub variance: f64,
    pub stderr: f64,
    /// `variance -+ 3 stderr`
    pub ci: (f64, f64),
    pub start: HexCoord,
    pub direction: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EllipticityReport {
    /// Direction angles in `[0, pi)`.
    pub directions: Vec<f64>,
    pub n_samples: usize,
    pub min: Extremum,
    pub max: Extremum,
}

/// Sample variance of `xs` and its delta-method standard error.
fn variance_with_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in xs {
        let d = (x - mean) * (x - mean);
        m2 += d;
        m4 += d * d;
    }
    let var = m2 / (n - 1.0);
    let m4 = m4 / n;
    let m2n = m2 / n;
    (var, ((m4 - m2n * m2n).max(0.0) / n).sqrt())
}

/// Variance of the time-1 displacement projected on `k` equally spaced
/// directions, from each start, and the extreme values over all pairs.
pub fn ellipticity_scan(
    params: &Params,
    k: usize,
    starts: &[HexCoord],
    n_samples: usize,
    seed: u64,
) -> Result<EllipticityReport> {
    if k < 8 {
        return Err(TGraphError::InvalidArgument(format!("need at least 8 directions, got {k}")));
    }
    if starts.is_empty() || n_samples < 2 {
        return Err(TGraphError::InvalidArgument("need starts and at least 2 samples".into()));
    }
    let reach = starts.iter().map(|s| s.m.abs().max(s.n.abs())).max().unwrap();
    let table = Arc::new(JumpTable::new(params, reach + 4 * EXTENSION_GAP + 8)?);
    let directions: Vec<f64> = (0..k).map(|j| PI * j as f64 / k as f64).collect();
    let per_start: Vec<Vec<(f64, f64)>> = starts
        .par_iter()
        .enumerate()
        .map(|(si, &start)| {
            let mut disp = Vec::with_capacity(n_samples);
            for i in 0..n_samples {
                let id = (si * n_samples + i) as u64;
                let mut w = Walker::new(table.clone(), start, walker_rng(seed, id))?;
                let p0 = w.position();
                w.run_to(1.0)?;
                disp.push(w.position() - p0);
            }
            Ok(directions
                .iter()
                .map(|&th| {
                    let u = Complex64::from_polar(1.0, th);
                    let ys: Vec<f64> = disp.iter().map(|d| d.re * u.re + d.im * u.im).collect();
                    variance_with_se(&ys)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let extremum = |pick_max: bool| {
        let mut best: Option<Extremum> = None;
        for (si, row) in per_start.iter().enumerate() {
            for (di, &(v, se)) in row.iter().enumerate() {
                let better = match &best {
                    None => true,
                    Some(b) => (pick_max && v > b.variance) || (!pick_max && v < b.variance),
                };
                if better {
                    best = Some(Extremum {
                        variance: v,
                        stderr: se,
                        ci: (v - 3.0 * se, v + 3.0 * se),
                        start: starts[si],
                        direction: directions[di],
                    });
                }
            }
        }
        best.unwrap()
    };
    Ok(EllipticityReport { min: extremum(false), max: extremum(true), directions, n_samples })
}
