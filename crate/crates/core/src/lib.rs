//! Fusion frames and fusion frame systems in `ℝ^M`.
//!
//! - [`numkit`]: dense linear algebra (eigen, orthonormalization, SPD solves).
//! - [`frames`]: classical frames, bounds and duals.
//! - [`fusion`]: fusion frames, fusion frame systems and their operators.
//! - [`recon`]: distributed reconstruction (local fusion, fused global dual,
//!   iterative) and the distributed-versus-centralized dual comparisons.
//! - [`perturb`]: robustness certificates under subspace and local frame
//!   perturbations.
//! - [`fixture`], [`generate`], [`commands`]: JSON fixtures, seeded random
//!   instances and the experiment drivers behind the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` rejects NaN on purpose

pub mod commands;
pub mod error;
pub mod fixture;
pub mod frames;
pub mod fusion;
pub mod generate;
pub mod numkit;
pub mod perturb;
pub mod recon;
pub mod sampling;

pub use error::{Error, Result};
pub use frames::{Frame, FrameBounds};
pub use fusion::{FusionBounds, FusionCoefficients, FusionFrame, FusionFrameSystem, Subspace};
pub use nalgebra;
pub use numkit::{Mat, Spectrum, Vector};
