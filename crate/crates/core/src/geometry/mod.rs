//! Geometric validation of windows, point location, oriented paths and the
//! windowed distance between pointed graphs.

mod distance;
mod paths;
mod spatial;
mod tiling;

pub use distance::{hausdorff_in_disc, pseudo_distance, EPS_RATIO, SAMPLE_STEP};
pub use paths::{
    is_monotone, oriented_paths, oriented_reachability, path_length_slope, successors, OrientedPath, OrientedPaths,
    Reachability,
};
pub use spatial::{
    clip_polygon, clip_to_disc, cross, dot, in_triangle, orient, point_segment_distance, polygon_area, GridIndex,
};
pub use tiling::{
    face_similarity_error, locate, validate_segments, validate_tiling, Location, SegmentReport, TilingReport,
    WindowIndex, GEOM_TOL,
};
