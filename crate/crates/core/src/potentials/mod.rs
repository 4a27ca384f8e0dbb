//! Perturbation potentials `V^(α)(r, t)` and their spatial derivative
//! tensors up to fourth order.

mod earth;
mod finite_difference;
mod grid;
mod polynomial;

use std::fmt;
use std::sync::Arc;

use crate::model::{Branch, Contour};
use crate::tensor::{Mat3, Tensor3, Tensor4, Vec3};
use crate::{Error, Result};

pub use earth::{earth_taylor, EarthTaylorOptions, GravityTensors};
pub use finite_difference::{finite_difference_derivatives, FnPotential};
pub use grid::{GridAxis, GridPotential, Interpolation};
pub use polynomial::{PolyCoeffs, PolynomialPotential};

/// Value and derivative tensors at one point. Entries above the requested
/// order are zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Derivatives {
    pub order: usize,
    pub value: f64,
    pub gradient: Vec3,
    pub hessian: Mat3,
    pub third: Tensor3,
    pub fourth: Tensor4,
}

impl Derivatives {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            order: self.order,
            value: s * self.value,
            gradient: self.gradient * s,
            hessian: self.hessian * s,
            third: self.third.scale(s),
            fourth: self.fourth.scale(s),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            order: self.order.min(o.order),
            value: self.value + o.value,
            gradient: self.gradient + o.gradient,
            hessian: self.hessian + o.hessian,
            third: self.third.add(&o.third),
            fourth: self.fourth.add(&o.fourth),
        }
    }

    fn check_finite(&self, branch: Branch, t: f64) -> Result<()> {
        let ok = self.value.is_finite()
            && self.gradient.iter().all(|x| x.is_finite())
            && self.hessian.iter().all(|x| x.is_finite())
            && self.third.max_abs().is_finite()
            && self.fourth.max_abs().is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::NonFinite { branch, t })
        }
    }
}

/// A scalar perturbation potential [J], possibly different on each branch.
///
/// Implementations must be pure: the same arguments always give the same
/// result, and evaluation may happen from several threads at once.
pub trait Potential: Send + Sync + fmt::Debug {
    /// Value and derivatives up to `order` (at most 4) at `r`, `t` on `branch`.
    fn derivatives(&self, r: &Vec3, t: f64, branch: Branch, order: usize) -> Result<Derivatives>;

    fn value(&self, r: &Vec3, t: f64, branch: Branch) -> Result<f64> {
        Ok(self.derivatives(r, t, branch, 0)?.value)
    }

    fn gradient(&self, r: &Vec3, t: f64, branch: Branch) -> Result<Vec3> {
        Ok(self.derivatives(r, t, branch, 1)?.gradient)
    }

    fn branch_dependent(&self) -> bool {
        false
    }

    /// No explicit time dependence.
    fn is_static(&self) -> bool {
        true
    }
}

pub(crate) fn check_order(order: usize) -> Result<()> {
    if order > 4 {
        return Err(Error::OutOfScope(format!(
            "derivatives of order {order} requested; at most 4 are available"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroPotential;

impl Potential for ZeroPotential {
    fn derivatives(&self, _r: &Vec3, _t: f64, _b: Branch, order: usize) -> Result<Derivatives> {
        check_order(order)?;
        Ok(Derivatives::zeros(order))
    }
}

/// `λ V`.
#[derive(Clone, Debug)]
pub struct Scaled {
    pub factor: f64,
    pub inner: Arc<dyn Potential>,
}

impl Scaled {
    pub fn new(factor: f64, inner: Arc<dyn Potential>) -> Self {
        Self { factor, inner }
    }
}

impl Potential for Scaled {
    fn derivatives(&self, r: &Vec3, t: f64, b: Branch, order: usize) -> Result<Derivatives> {
        Ok(self.inner.derivatives(r, t, b, order)?.scale(self.factor))
    }

    fn branch_dependent(&self) -> bool {
        self.inner.branch_dependent()
    }

    fn is_static(&self) -> bool {
        self.inner.is_static()
    }
}

/// `Σ V_n`.
#[derive(Clone, Debug, Default)]
pub struct Sum {
    pub terms: Vec<Arc<dyn Potential>>,
}

impl Sum {
    pub fn new(terms: Vec<Arc<dyn Potential>>) -> Self {
        Self { terms }
    }
}

impl Potential for Sum {
    fn derivatives(&self, r: &Vec3, t: f64, b: Branch, order: usize) -> Result<Derivatives> {
        check_order(order)?;
        let mut acc = Derivatives::zeros(order);
        for term in &self.terms {
            acc = acc.add(&term.derivatives(r, t, b, order)?);
        }
        acc.order = order;
        Ok(acc)
    }

    fn branch_dependent(&self) -> bool {
        self.terms.iter().any(|p| p.branch_dependent())
    }

    fn is_static(&self) -> bool {
        self.terms.iter().all(|p| p.is_static())
    }
}

/// Derivative tensors of `pot` on the unperturbed path of `branch` at `t`.
pub fn eval_on_contour(
    pot: &dyn Potential,
    contour: &Contour,
    branch: Branch,
    t: f64,
    order: usize,
) -> Result<Derivatives> {
    let p = contour.point(branch, t)?;
    let d = pot.derivatives(&p.r, t, branch, order)?;
    d.check_finite(branch, t)?;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MachZehnder;

    #[test]
    fn zero_potential_has_zero_tensors() {
        let d = ZeroPotential
            .derivatives(&Vec3::new(1.0, 2.0, 3.0), 0.5, Branch::Upper, 4)
            .unwrap();
        assert_eq!(d, Derivatives::zeros(4));
        assert!(ZeroPotential.derivatives(&Vec3::zeros(), 0.0, Branch::Upper, 5).is_err());
    }

    #[test]
    fn cubic_term_on_upper_branch() {
        let (g, vr, c) = (9.81, 0.5, 0.3);
        let seq = MachZehnder::new(1.0, vr, 1.0, g, 1.0).build().unwrap();
        let contour = Contour::new(&seq).unwrap();
        let mut coeffs = PolyCoeffs::default();
        coeffs.cubic.0[2][2][2] = 6.0 * c;
        let pot = PolynomialPotential::new(coeffs).unwrap();
        let t = 0.4;
        let z = vr * t - 0.5 * g * t * t;
        let d = eval_on_contour(&pot, &contour, Branch::Upper, t, 3).unwrap();
        assert!((d.value - c * z * z * z).abs() < 1e-14);
        assert!(eval_on_contour(&pot, &contour, Branch::Upper, 2.5, 3).is_err());
    }

    #[test]
    fn coincident_branches_see_identical_tensors() {
        let seq = MachZehnder::new(1.0, 0.0, 1.0, 9.81, 1.0).build().unwrap();
        let contour = Contour::new(&seq).unwrap();
        let pot = FnPotential::new(|r, t, _| (r.z * 2.0).sin() * (1.0 + t), 1.0);
        for t in [0.0, 0.3, 1.0, 1.7, 2.0] {
            let u = eval_on_contour(&pot, &contour, Branch::Upper, t, 3).unwrap();
            let l = eval_on_contour(&pot, &contour, Branch::Lower, t, 3).unwrap();
            assert_eq!(u, l);
        }
    }

    #[test]
    fn scaled_and_summed() {
        let mut a = PolyCoeffs::default();
        a.linear = Vec3::new(1.0, 2.0, 3.0);
        let pa: Arc<dyn Potential> = Arc::new(PolynomialPotential::new(a).unwrap());
        let s = Sum::new(vec![pa.clone(), Arc::new(Scaled::new(-1.0, pa))]);
        let d = s.derivatives(&Vec3::new(0.1, 0.2, 0.3), 0.0, Branch::Lower, 2).unwrap();
        assert_eq!(d.gradient, Vec3::zeros());
        assert_eq!(d.value, 0.0);
    }
}
