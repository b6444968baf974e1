//! Strict deformation quantization on elementary solvable symplectic
//! symmetric spaces.
//!
//! The chart of M = 𝔞 × ℒ carries the symplectic form
//! Ω((a,l),(a′,l′)) = ξ(ρ(a)l′) − ξ(ρ(a′)l); the twisting map and all
//! products below are written against it.

pub mod error;
pub mod eset;
pub mod fourier;
pub mod geometry;
pub mod grid;
pub mod harness;

pub mod linalg;
pub mod star;

pub mod transform;

pub use error::{Error, Result};
pub use eset::{AlgebraVector, EsetStructure, Part, Violation};
pub use geometry::{GroupElement, Point};
pub use grid::{Axis, PhaseSpaceGrid};
pub use harness::{run_suite, Status, SuiteConfig, VerificationReport};

pub use star::{Method, StarParams};
pub use transform::{Interpolation, TransformOptions};
