//! Statistical checks of the scaling limit and the discrete Dirichlet problem.

mod covariance;
mod dirichlet;
mod ellipticity;
pub mod linsolve;

pub use covariance::{covariances_agree, empirical_covariance, empirical_covariance_in, isotropy_test, IsotropyStats, JACKKNIFE_GROUPS};
pub(crate) use dirichlet::window_reaching;
pub use dirichlet::{
    dirichlet_convergence, dirichlet_solve, window_for_domain, BoundaryMode, ConvergenceRow, ConvergenceTable, Domain,
    HarmonicField, MAX_ITERATIONS, SOLVER_TOL,
};
pub use ellipticity::{ellipticity_scan, EllipticityReport, Extremum};
