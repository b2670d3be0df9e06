//! Spherical calculus for smooth, strictly convex bodies in R^2 and R^3.
//!
//! Bodies are represented by their support functions on S^1 or S^2. The
//! crate computes curvature, cone-volume measures, centroids and normalized
//! bodies, checks the stability inequalities and integral identities that
//! govern the cone-volume measure, and solves `h^{1-p} / K = f` numerically.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod body;
pub mod corpus;
pub mod error;
pub mod solver;
pub mod sphere;
pub mod verify;

pub use body::{BodySummary, ConvexBody};
pub use error::{Error, Result};
pub use sphere::{HarmonicCoeffs, Harmonics, Resolution, ScalarField, SphereGrid};
