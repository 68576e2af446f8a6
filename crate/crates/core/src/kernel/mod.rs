//! The inverse Kasteleyn kernel and the quasi-harmonic function built from it.

mod diagnostic;
mod gstar;
mod kinv;

pub use kinv::{kinv_asymptotic, kinv_exact, kt_inv, KernelWindow, KERNEL_TOL};
pub use gstar::{
    choose_cut, gstar_asymptotic_check, gstar_build, GStarAsymptotics, GStarField, Ray, CLOSURE_LIMIT, CUT_MARGIN,
};
pub use diagnostic::{covariance_identification_diagnostic, log_statistic, IdentificationDiagnostic};
