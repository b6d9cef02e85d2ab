//! Closed sets of R^n exposed through exact projection, distance and
//! membership oracles.

mod piece;
mod point;
mod sampling;
mod scene;
mod shape;

use thiserror::Error;

pub use piece::{dykstra, flatten, intersect, isolation_radius, Piece};
pub use point::Point;
pub use sampling::{ball_cloud, sample_near, unit_directions};
pub use scene::{fixtures, load_scene, paper_example_sequence, LoadError, Scene, DEFAULT_TOL_MEMBERSHIP};
pub use shape::{translate_shape, Shape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize, context: String },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
}

/// Checked projection: errors on dimension mismatch.
pub fn project(shape: &Shape, p: &Point) -> Result<Point, GeometryError> {
    shape.validate_dim(p.dim())?;
    Ok(shape.project(p))
}

/// Checked distance: errors on dimension mismatch.
pub fn distance(shape: &Shape, p: &Point) -> Result<f64, GeometryError> {
    shape.validate_dim(p.dim())?;
    Ok(shape.distance(p))
}

/// Checked membership test `distance <= tol`.
pub fn contains(shape: &Shape, p: &Point, tol: f64) -> Result<bool, GeometryError> {
    shape.validate_dim(p.dim())?;
    Ok(shape.contains(p, tol))
}
