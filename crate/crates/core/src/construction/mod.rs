//! Weights, the flow and its primitive `psi`, and finite windows of the graph.

mod degeneracy;
mod triangle;
mod weights;
mod window;

pub use degeneracy::{classify_degeneracy, face_segments, AlmostDegenerateSegment, DegeneracyReport};
pub use triangle::{Angle, Triangle};
pub(crate) use triangle::gcd as gcd_i128;
pub use weights::{
    degenerate_lambda, ell, f_white, g_black, genericity_margin, k_weight, lambda_angle, lambda_with_margin, phi,
    psi, psi_along, rotate_lambda, Params,
};
pub use window::{build_window, Face, Segment, TGraphWindow, BETWEEN_TOL, ZERO_SCALE};


