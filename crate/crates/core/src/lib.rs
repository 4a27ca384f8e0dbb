//! Phase, contrast and validity diagnostics for light-pulse atom
//! interferometers driven by weak perturbation potentials.
//!
//! The interferometer is split into an exactly solvable part (free fall in a
//! uniform field plus instantaneous laser kicks) and a perturbation `V`. The
//! perturbation enters through loop integrals along the closed time contour
//! that runs up the upper branch to the detection time and back down the
//! lower branch. First- and second-order terms of the resulting exponential
//! series give the phase; the variance of the leading operator term gives the
//! contrast.
//!
//! Two independent ground truths are provided in [`oracles`]: the classical
//! action difference along fully perturbed trajectories, and a split-step
//! propagation of the one-dimensional Schrödinger equation on each branch.

pub mod constants;
pub mod engine;
mod error;
pub mod model;
pub mod oracles;
pub mod potentials;
pub mod quadrature;
pub mod states;
pub mod tensor;
pub mod validity;

pub use error::{Error, Result};
pub use model::{Branch, PulseSequence};
pub use tensor::{Mat3, Tensor3, Tensor4, Vec3};
