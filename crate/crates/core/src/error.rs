use crate::lattice::HexCoord;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TGraphError {
    #[error("invalid triangle: {0}")]
    InvalidTriangle(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0} and {1} are not adjacent")]
    NotAdjacent(HexCoord, HexCoord),

    #[error("degenerate face {face}: scale factor {scale:e}")]
    DegenerateFace { face: HexCoord, scale: f64 },

    #[error("coincident images on black face {face}: gap {gap:e}")]
    CoincidentImages { face: HexCoord, gap: f64 },

    #[error("near-degenerate vertex {vertex}: margin {margin:e}")]
    NearDegenerate { vertex: HexCoord, margin: f64 },

    #[error("{0} lies outside the window")]
    OutsideWindow(String),

    #[error("ambiguous point location: {0}")]
    Ambiguous(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("closure residual {residual:e} around {face} exceeds {limit:e}")]
    Closure {
        face: HexCoord,
        residual: f64,
        limit: f64,
    },

    #[error("unreachable: {0}")]
    Unreachable(String),
}

pub type Result<T> = std::result::Result<T, TGraphError>;
