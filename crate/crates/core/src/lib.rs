//! Random geometric complexes on flat compact manifolds.
//!
//! The crate samples homogeneous Poisson processes on flat tori, flat
//! cylinders and the solid disk, builds Čech complexes, computes Betti
//! numbers over the two-element field, enumerates critical points of the
//! distance function, detects Θ-cycles and their boundary analogues, and runs
//! seeded Monte Carlo sweeps over `Λ = n ω_d r^d`.
//!
//! The geometric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the working precision used by the experiment harness.

pub mod cech;
pub mod cycles;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod grid;
pub mod homology;
pub mod manifold;
pub mod morse;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Manifold = manifold::ManifoldModel<f64>;
pub type Point = manifold::Point<f64>;
pub type PointSample = manifold::PointSample<f64>;
pub type CechComplex = cech::CechComplex<f64>;
pub type CriticalPoint = morse::CriticalPoint<f64>;
