use crate::construction::Params;
use crate::error::{Result, TGraphError};
use crate::lattice::HexCoord;
use crate::stats::{within_joint_3sigma, CovarianceEstimate};
use crate::walk::{default_radius, endpoint_displacements, JumpTable};
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

/// Number of jackknife groups used for covariance errors.
pub const JACKKNIFE_GROUPS: usize = 100;

/// Sample covariance of `X_N / sqrt(N)` over independent walks from `x0`.
pub fn empirical_covariance(params: &Params, x0: HexCoord, n_walks: usize, n: usize, seed: u64) -> Result<CovarianceEstimate> {
    let r = default_radius(params, n as f64) + x0.m.abs().max(x0.n.abs());
    let table = Arc::new(JumpTable::new(params, r)?);
    empirical_covariance_in(table, x0, n_walks, n, seed)
}

/// As [`empirical_covariance`] with a prebuilt jump table.
pub fn empirical_covariance_in(
    table: Arc<JumpTable>,
    x0: HexCoord,
    n_walks: usize,
    n: usize,
    seed: u64,
) -> Result<CovarianceEstimate> {
    if n_walks < 100 {
        return Err(TGraphError::InvalidArgument(format!("n_walks = {n_walks} < 100")));
    }
    if n == 0 {
        return Err(TGraphError::InvalidArgument("N must be positive".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let samples: Vec<Complex64> = endpoint_displacements(table, x0, n as f64, n_walks, seed)?
        .into_iter()
        .map(|z| z * scale)
        .collect();
    Ok(CovarianceEstimate::from_samples(&samples, JACKKNIFE_GROUPS, n))
}

#[derive(Clone, Debug, Serialize)]
pub struct IsotropyStats {
    /// `(M11 - M22) / tr M`
    pub anisotropy: f64,
    pub anisotropy_se: f64,
    /// `M12 / tr M`
    pub shear: f64,
    pub shear_se: f64,
    /// `(lambda1 - lambda2) / tr M`, independent of the axes.
    pub magnitude: f64,
    pub magnitude_se: f64,
    pub passed: bool,
}

fn anisotropy(m: [f64; 3]) -> f64 {
    (m[0] - m[1]) / (m[0] + m[1])
}

fn shear(m: [f64; 3]) -> f64 {
    m[2] / (m[0] + m[1])
}

fn magnitude(m: [f64; 3]) -> f64 {
    ((m[0] - m[1]).powi(2) + 4.0 * m[2] * m[2]).sqrt() / (m[0] + m[1])
}

/// Both normalized statistics must be within 3 standard errors of 0, with
/// `|shear| <= 0.02` and `|anisotropy| <= 0.05`.
pub fn isotropy_test(est: &CovarianceEstimate) -> IsotropyStats {
    let v = [est.m[0][0], est.m[1][1], est.m[0][1]];
    let (a, s) = (anisotropy(v), shear(v));
    let (a_se, s_se) = (est.se_of(anisotropy), est.se_of(shear));
    IsotropyStats {
        anisotropy: a,
        anisotropy_se: a_se,
        shear: s,
        shear_se: s_se,
        magnitude: magnitude(v),
        magnitude_se: est.se_of(magnitude),
        passed: a.abs() <= 3.0 * a_se && s.abs() <= 3.0 * s_se && a.abs() <= 0.05 && s.abs() <= 0.02,
    }
}

/// Whether all three entries of two estimates agree within joint 3 sigma.
pub fn covariances_agree(a: &CovarianceEstimate, b: &CovarianceEstimate) -> bool {
    [(0, 0), (1, 1), (0, 1)]
        .iter()
        .all(|&(i, j)| within_joint_3sigma(a.m[i][j], a.stderr[i][j], b.m[i][j], b.stderr[i][j]))
}
