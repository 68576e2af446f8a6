//! T-graphs built from the hexagonal lattice, the balanced random walk living
//! on them, and the discrete harmonic machinery around it.
//!
//! The usual entry point is [`construction::build_window`], which turns a
//! [`construction::Params`] into an immutable [`construction::TGraphWindow`].

pub mod analysis;
pub mod construction;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod lattice;
pub mod periodic;
pub mod stats;
pub mod walk;

pub use error::{Result, TGraphError};
pub use num_complex::Complex64;
