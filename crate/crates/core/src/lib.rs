//! Alternating projections between convex sets, their perturbed variant,
//! set-convergence metrics, and constructions of perturbation schedules that
//! keep the iterates away from the best approximation set of a non-regular
//! pair.

pub mod adversary;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod metrics;
pub mod probe;
pub mod scenario;
pub mod tol;
pub mod vector;

pub use error::{Error, Result};
pub use geometry::{ConvexSet, GeometryError};
pub use tol::Tolerances;
pub use vector::Vector;
