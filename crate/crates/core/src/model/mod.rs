//! Interferometer geometry: pulse sequences, the exact unperturbed branch
//! trajectories, closure, the unperturbed phase, and quadrature along the
//! closed time contour.

mod contour;
mod phase;
mod sequence;
mod trajectory;

pub use contour::{contour_integrate, contour_integrate_nested, Contour, ContourPoint, QuadOptions, QuadResult};
pub use phase::{closure_check, phi0, separation_phase, unperturbed_phase_difference, ClosureReport};
pub use sequence::{Branch, MachZehnder, Pulse, PulseSequence};
pub use trajectory::{unperturbed_trajectory, BranchTrajectory, Segment};
