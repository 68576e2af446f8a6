//! Moment accumulation, jackknife errors and small regression helpers.

use nalgebra::{Matrix2, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

/// Weighted first and second moments of planar samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Moments {
    pub count: f64,
    /// Total weight; equals `count` for plain samples, total duration for blocks.
    pub weight: f64,
    pub sx: f64,
    pub sy: f64,
    pub sxx: f64,
    pub syy: f64,
    pub sxy: f64,
}

impl Moments {
    pub fn push(&mut self, z: Complex64, weight: f64) {
        self.count += 1.0;
        self.weight += weight;
        self.sx += z.re;
        self.sy += z.im;
        self.sxx += z.re * z.re;
        self.syy += z.im * z.im;
        self.sxy += z.re * z.im;
    }

    pub fn add(&self, o: &Moments) -> Moments {
        Moments {
            count: self.count + o.count,
            weight: self.weight + o.weight,
            sx: self.sx + o.sx,
            sy: self.sy + o.sy,
            sxx: self.sxx + o.sxx,
            syy: self.syy + o.syy,
            sxy: self.sxy + o.sxy,
        }
    }

    pub fn sub(&self, o: &Moments) -> Moments {
        Moments {
            count: self.count - o.count,
            weight: self.weight - o.weight,
            sx: self.sx - o.sx,
            sy: self.sy - o.sy,
            sxx: self.sxx - o.sxx,
            syy: self.syy - o.syy,
            sxy: self.sxy - o.sxy,
        }
    }

    /// Sample covariance `[M11, M22, M12]` (divisor `count - 1`).
    pub fn covariance(&self) -> [f64; 3] {
        let n = self.count;
        let (mx, my) = (self.sx / n, self.sy / n);
        let c = n / (n - 1.0);
        [
            c * (self.sxx / n - mx * mx),
            c * (self.syy / n - my * my),
            c * (self.sxy / n - mx * my),
        ]
    }

    /// Second moments per unit weight, `[Sxx, Syy, Sxy] / weight`.
    pub fn ratio_covariance(&self) -> [f64; 3] {
        [self.sxx / self.weight, self.syy / self.weight, self.sxy / self.weight]
    }

    pub fn mean(&self) -> [f64; 2] {
        [self.sx / self.count, self.sy / self.count]
    }
}

/// Per-group moments of consecutive chunks of `samples`.
pub fn grouped_moments(samples: &[(Complex64, f64)], groups: usize) -> Vec<Moments> {
    let groups = groups.clamp(1, samples.len().max(1));
    let mut out = vec![Moments::default(); groups];
    for (i, &(z, w)) in samples.iter().enumerate() {
        out[i * groups / samples.len()].push(z, w);
    }
    out
}

/// Delete-one-group jackknife: the full estimate, its standard error, and the
/// leave-one-out replicates.
pub fn jackknife<const K: usize>(
    groups: &[Moments],
    estimator: impl Fn(&Moments) -> [f64; K],
) -> ([f64; K], [f64; K], Vec<[f64; K]>) {
    let total = groups.iter().fold(Moments::default(), |a, g| a.add(g));
    let full = estimator(&total);
    let reps: Vec<[f64; K]> = groups.iter().map(|g| estimator(&total.sub(g))).collect();
    (full, jackknife_se(&reps), reps)
}

pub fn jackknife_se<const K: usize>(reps: &[[f64; K]]) -> [f64; K] {
    let g = reps.len() as f64;
    let mut se = [0.0; K];
    if reps.len() < 2 {
        return se;
    }
    for k in 0..K {
        let mean = reps.iter().map(|r| r[k]).sum::<f64>() / g;
        let ss: f64 = reps.iter().map(|r| (r[k] - mean).powi(2)).sum();
        se[k] = ((g - 1.0) / g * ss).sqrt();
    }
    se
}

/// A 2x2 covariance matrix with jackknife errors.
#[derive(Clone, Debug, Serialize)]
pub struct CovarianceEstimate {
    pub m: [[f64; 2]; 2],
    pub stderr: [[f64; 2]; 2],
    pub mean: [f64; 2],
    pub mean_stderr: [f64; 2],
    pub n_walks: usize,
    pub n_steps: usize,
    /// Leave-one-group-out replicates of `[M11, M22, M12]`.
    #[serde(skip)]
    pub replicates: Vec<[f64; 3]>,
}

impl CovarianceEstimate {
    /// Exact matrix with no sampling error.
    pub fn from_matrix(m: [[f64; 2]; 2]) -> Self {
        CovarianceEstimate {
            m,
            stderr: [[0.0; 2]; 2],
            mean: [0.0; 2],
            mean_stderr: [0.0; 2],
            n_walks: 0,
            n_steps: 0,
            replicates: Vec::new(),
        }
    }

    /// Sample covariance of iid planar samples, with `groups` jackknife groups.
    pub fn from_samples(samples: &[Complex64], groups: usize, n_steps: usize) -> Self {
        let weighted: Vec<_> = samples.iter().map(|&z| (z, 1.0)).collect();
        let g = grouped_moments(&weighted, groups);
        let (full, se, reps) = jackknife(&g, |m| m.covariance());
        let (mean, mean_se, _) = jackknife(&g, |m| m.mean());
        Self::assemble(full, se, reps, mean, mean_se, samples.len(), n_steps)
    }

    pub(crate) fn assemble(
        full: [f64; 3],
        se: [f64; 3],
        reps: Vec<[f64; 3]>,
        mean: [f64; 2],
        mean_stderr: [f64; 2],
        n_walks: usize,
        n_steps: usize,
    ) -> Self {
        CovarianceEstimate {
            m: [[full[0], full[2]], [full[2], full[1]]],
            stderr: [[se[0], se[2]], [se[2], se[1]]],
            mean,
            mean_stderr,
            n_walks,
            n_steps,
            replicates: reps,
        }
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1])
    }

    /// Standard error of a scalar function of `[M11, M22, M12]`, propagated
    /// through the jackknife replicates.
    pub fn se_of(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        let reps: Vec<[f64; 1]> = self.replicates.iter().map(|r| [f(*r)]).collect();
        jackknife_se(&reps)[0]
    }

    pub fn is_psd(&self) -> bool {
        let e = SymmetricEigen::new(self.matrix()).eigenvalues;
        e.iter().all(|&x| x >= -1e-12 * self.trace().abs().max(1.0))
    }
}

/// `|a - b| <= 3 sqrt(se_a^2 + se_b^2)`.
pub fn within_joint_3sigma(a: f64, se_a: f64, b: f64, se_b: f64) -> bool {
    (a - b).abs() <= 3.0 * (se_a * se_a + se_b * se_b).sqrt()
}

/// Ordinary least squares `y = slope x + intercept`, with the coefficient of
/// determination.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    LinearFit { slope, intercept: my - slope * mx, r2 }
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Fit of `log P(X > x)` against `x` over the empirical survival function,
/// restricted to levels with at least `min_count` exceedances.
pub fn log_survival_fit(values: &[f64], points: usize, min_count: usize) -> Option<LinearFit> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n < 2 * min_count || points < 3 {
        return None;
    }
    let hi = v[n - min_count];
    let lo = v[n / 2];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 0..points {
        let x = lo + (hi - lo) * k as f64 / (points - 1) as f64;
        let above = n - v.partition_point(|&y| y <= x);
        if above >= min_count {
            xs.push(x);
            ys.push((above as f64 / n as f64).ln());
        }
    }
    (xs.len() >= 3).then(|| linear_fit(&xs, &ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp, StandardNormal};

    #[test]
    fn covariance_of_known_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<Complex64> = (0..200_000)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(2f64.sqrt() * a, 0.5 * a + b)
            })
            .collect();
        let est = CovarianceEstimate::from_samples(&xs, 100, 1);
        let want = [[2.0, 2f64.sqrt() * 0.5], [2f64.sqrt() * 0.5, 1.25]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((est.m[i][j] - want[i][j]).abs() < 4.0 * est.stderr[i][j], "{i}{j}");
            }
        }
        // analytic standard error of the variance of N(0,2): 2 sqrt(2/n)
        let se = 2.0 * (2.0 / 200_000f64).sqrt();
        assert!((est.stderr[0][0] / se - 1.0).abs() < 0.25);
        assert!(est.is_psd());
    }

    #[test]
    fn jackknife_matches_classical_se_for_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let samples: Vec<_> = xs.iter().map(|&x| (Complex64::new(x, 0.0), 1.0)).collect();
        let g = grouped_moments(&samples, 10_000);
        let (_, se, _) = jackknife(&g, |m| m.mean());
        let (_, classical) = mean_se(&xs);
        assert!((se[0] - classical).abs() < 1e-9);
    }

    #[test]
    fn fit_and_survival() {
        let f = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]);
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = Exp::new(2.0).unwrap();
        let v: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
        let fit = log_survival_fit(&v, 20, 50).unwrap();
        assert!((fit.slope + 2.0).abs() < 0.15, "{}", fit.slope);
        assert!(fit.r2 > 0.99);
    }

    #[test]
    fn joint_sigma() {
        assert!(within_joint_3sigma(1.0, 0.1, 1.3, 0.1));
        assert!(!within_joint_3sigma(1.0, 0.1, 1.5, 0.1));
    }
}
