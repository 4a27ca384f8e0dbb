//! Physical constants in SI units.

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;

/// Mass of a rubidium-87 atom [kg].
pub const RB87_MASS: f64 = 1.443_160_648e-25;

/// Standard gravitational acceleration [m/s^2].
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Mean radius of the Earth [m].
pub const EARTH_RADIUS: f64 = 6.371e6;

/// Effective two-photon wave number for the rubidium D2 line, `4π / 780 nm` [rad/m].
pub const RB87_D2_TWO_PHOTON_K: f64 = 4.0 * std::f64::consts::PI / 780e-9;
