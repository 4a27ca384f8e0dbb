use serde::Serialize;

use super::{PolyCoeffs, PolynomialPotential};
use crate::tensor::{Mat3, Tensor3};
use crate::{Error, Result};

/// First and second gravity-gradient tensors of a spherical Earth at the
/// reference point on its surface (`z` radially outward).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GravityTensors {
    pub g: f64,
    pub radius: f64,
    /// `Γ1` [1/s²]
    pub gamma1: [[f64; 3]; 3],
    /// `Γ2` [1/(m s²)]
    pub gamma2: [[[f64; 3]; 3]; 3],
}

impl GravityTensors {
    pub fn new(g: f64, radius: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite() && radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!(
                "Earth expansion needs g > 0 and R > 0, got g = {g}, R = {radius}"
            )));
        }
        let a = g / radius;
        let b = g / (radius * radius);
        let mut gamma1 = [[0.0; 3]; 3];
        gamma1[0][0] = a;
        gamma1[1][1] = a;
        gamma1[2][2] = -2.0 * a;
        let mut t = Tensor3::zeros();
        t.set_symmetric(0, 0, 2, -3.0 * b);
        t.set_symmetric(1, 1, 2, -3.0 * b);
        t.set_symmetric(2, 2, 2, 6.0 * b);
        Ok(Self {
            g,
            radius,
            gamma1,
            gamma2: t.0,
        })
    }

    pub fn gamma1_mat(&self) -> Mat3 {
        Mat3::from_fn(|i, j| self.gamma1[i][j])
    }

    pub fn gamma2_tensor(&self) -> Tensor3 {
        Tensor3(self.gamma2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EarthTaylorOptions {
    /// Highest Taylor order kept (1 to 3).
    pub order: usize,
    /// Keep `m g z`. Off by default since the uniform field already lives in
    /// the unperturbed Hamiltonian.
    pub include_mgz: bool,
    /// Keep the `Γ1` term.
    pub include_gamma1: bool,
}

impl Default for EarthTaylorOptions {
    fn default() -> Self {
        Self {
            order: 3,
            include_mgz: false,
            include_gamma1: true,
        }
    }
}

/// `m g z + m Γ1_ij r_i r_j / 2 + m Γ2_ijl r_i r_j r_l / 6`, truncated at
/// `opts.order`.
pub fn earth_taylor(
    g: f64,
    radius: f64,
    mass: f64,
    opts: EarthTaylorOptions,
) -> Result<(PolynomialPotential, GravityTensors)> {
    if opts.order > 3 {
        return Err(Error::OutOfScope(format!(
            "Earth Taylor expansion to order {} (at most 3 supported)",
            opts.order
        )));
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::invalid(format!("mass must be positive, got {mass}")));
    }
    let tensors = GravityTensors::new(g, radius)?;
    let mut c = PolyCoeffs::default();
    if opts.include_mgz && opts.order >= 1 {
        c.linear.z = mass * g;
    }
    if opts.include_gamma1 && opts.order >= 2 {
        c.quadratic = tensors.gamma1_mat() * mass;
    }
    if opts.order >= 3 {
        c.cubic = tensors.gamma2_tensor().scale(mass);
    }
    Ok((PolynomialPotential::new(c)?, tensors))
}
