//! Detection and classification of parallel tangent-space pairs on
//! codimension-2 immersed submanifolds, with numerically certified
//! constructions of skew branes: a perturbed torus in ℝ⁴, a perturbed
//! S³ in ℝ⁵, and an immersed 2-sphere in ℝ⁴ without negatively parallel
//! tangent planes.

pub mod constructions;
pub mod domain;
pub mod error;
pub mod grassmann;
pub mod immersion;
pub mod jet;
pub mod support;

pub use error::{Error, Result};
