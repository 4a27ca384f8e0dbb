use super::{check_order, Derivatives, Potential};
use crate::model::Branch;
use crate::tensor::{mat_asymmetry, symmetrize_mat, Mat3, Tensor3, Tensor4, Vec3};
use crate::{Error, Result};

/// Taylor coefficients of
/// `V(x) = c + L_i x_i + Q_ij x_i x_j / 2 + C_ijk x_i x_j x_k / 6 + D_ijkl x_i x_j x_k x_l / 24`,
/// so each tensor equals the derivative of that order at the origin.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolyCoeffs {
    pub constant: f64,
    pub linear: Vec3,
    pub quadratic: Mat3,
    pub cubic: Tensor3,
    pub quartic: Tensor4,
}

/// Relative asymmetry accepted (and removed) on input.
const SYMMETRY_TOL: f64 = 1e-9;

impl PolyCoeffs {
    /// Symmetrizes the tensors, rejecting inputs that are clearly not
    /// symmetric to begin with.
    pub fn symmetrized(&self) -> Result<Self> {
        let check = |order: usize, dev: f64, scale: f64| {
            if dev > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
                Err(Error::AsymmetricTensor { order, deviation: dev })
            } else {
                Ok(())
            }
        };
        check(2, mat_asymmetry(&self.quadratic), self.quadratic.abs().max())?;
        check(3, self.cubic.asymmetry(), self.cubic.max_abs())?;
        check(4, self.quartic.asymmetry(), self.quartic.max_abs())?;
        let finite = self.constant.is_finite()
            && self.linear.iter().all(|x| x.is_finite())
            && self.quadratic.iter().all(|x| x.is_finite())
            && self.cubic.max_abs().is_finite()
            && self.quartic.max_abs().is_finite();
        if !finite {
            return Err(Error::invalid("polynomial coefficients must be finite"));
        }
        Ok(Self {
            constant: self.constant,
            linear: self.linear,
            quadratic: symmetrize_mat(&self.quadratic),
            cubic: self.cubic.symmetrized(),
            quartic: self.quartic.symmetrized(),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            constant: s * self.constant,
            linear: self.linear * s,
            quadratic: self.quadratic * s,
            cubic: self.cubic.scale(s),
            quartic: self.quartic.scale(s),
        }
    }

    fn eval(&self, x: &Vec3, order: usize) -> Derivatives {
        // Taylor series of each derivative around the origin
        let d4 = self.quartic;
        let d_x = d4.contract_vec(x);
        let d3 = self.cubic.add(&d_x);
        let c_x = self.cubic.contract_vec(x);
        let d_xx = d_x.contract_vec(x);
        let hess = self.quadratic + c_x + d_xx * 0.5;
        let xx = x * x.transpose();
        let grad = self.linear + self.quadratic * x + self.cubic.contract_mat(&xx) * 0.5 + d_x.contract_mat(&xx) / 6.0;
        let value = self.constant
            + self.linear.dot(x)
            + 0.5 * x.dot(&(self.quadratic * x))
            + self.cubic.cubic_form(x) / 6.0
            + d_x.cubic_form(x) / 24.0;
        let mut d = Derivatives::zeros(order);
        d.value = value;
        if order >= 1 {
            d.gradient = grad;
        }
        if order >= 2 {
            d.hessian = hess;
        }
        if order >= 3 {
            d.third = d3;
        }
        if order >= 4 {
            d.fourth = d4;
        }
        d
    }
}

/// Polynomial potential around `origin`, optionally with separate
/// coefficients on the lower branch.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialPotential {
    pub origin: Vec3,
    upper: PolyCoeffs,
    lower: Option<PolyCoeffs>,
}

impl PolynomialPotential {
    pub fn new(coeffs: PolyCoeffs) -> Result<Self> {
        Ok(Self {
            origin: Vec3::zeros(),
            upper: coeffs.symmetrized()?,
            lower: None,
        })
    }

    /// Different coefficients per branch.
    pub fn per_branch(upper: PolyCoeffs, lower: PolyCoeffs) -> Result<Self> {
        Ok(Self {
            origin: Vec3::zeros(),
            upper: upper.symmetrized()?,
            lower: Some(lower.symmetrized()?),
        })
    }

    pub fn with_origin(mut self, origin: Vec3) -> Self {
        self.origin = origin;
        self
    }

    pub fn coeffs(&self, branch: Branch) -> &PolyCoeffs {
        match (branch, &self.lower) {
            (Branch::Lower, Some(c)) => c,
            _ => &self.upper,
        }
    }

    /// `c z^n` for `n ≤ 4`.
    pub fn monomial_z(c: f64, n: usize) -> Result<Self> {
        let mut p = PolyCoeffs::default();
        match n {
            0 => p.constant = c,
            1 => p.linear.z = c,
            2 => p.quadratic[(2, 2)] = 2.0 * c,
            3 => p.cubic.0[2][2][2] = 6.0 * c,
            4 => p.quartic.0[2][2][2][2] = 24.0 * c,
            _ => return Err(Error::OutOfScope(format!("monomial degree {n} above 4"))),
        }
        Self::new(p)
    }
}

impl Potential for PolynomialPotential {
    fn derivatives(&self, r: &Vec3, _t: f64, branch: Branch, order: usize) -> Result<Derivatives> {
        check_order(order)?;
        Ok(self.coeffs(branch).eval(&(r - self.origin), order))
    }

    fn branch_dependent(&self) -> bool {
        self.lower.as_ref().is_some_and(|l| *l != self.upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_monomial_derivatives() {
        let c = 0.7;
        let p = PolynomialPotential::monomial_z(c, 3).unwrap();
        let z = 1.3;
        let d = p.derivatives(&Vec3::new(0.4, -0.2, z), 0.0, Branch::Upper, 4).unwrap();
        assert!((d.value - c * z.powi(3)).abs() < 1e-14);
        assert!((d.gradient.z - 3.0 * c * z * z).abs() < 1e-14);
        assert!((d.hessian[(2, 2)] - 6.0 * c * z).abs() < 1e-14);
        assert!((d.third.0[2][2][2] - 6.0 * c).abs() < 1e-14);
        assert_eq!(d.fourth, Tensor4::zeros());
        assert_eq!(d.gradient.x, 0.0);
    }

    #[test]
    fn quartic_monomial_derivatives() {
        let c = -0.3;
        let p = PolynomialPotential::monomial_z(c, 4).unwrap();
        let z = 0.9;
        let d = p.derivatives(&Vec3::new(0.0, 0.0, z), 0.0, Branch::Upper, 4).unwrap();
        assert!((d.value - c * z.powi(4)).abs() < 1e-14);
        assert!((d.gradient.z - 4.0 * c * z.powi(3)).abs() < 1e-14);
        assert!((d.hessian[(2, 2)] - 12.0 * c * z * z).abs() < 1e-14);
        assert!((d.third.0[2][2][2] - 24.0 * c * z).abs() < 1e-14);
        assert!((d.fourth.0[2][2][2][2] - 24.0 * c).abs() < 1e-14);
    }

    #[test]
    fn zero_coefficients_vanish() {
        let p = PolynomialPotential::new(PolyCoeffs::default()).unwrap();
        let d = p.derivatives(&Vec3::new(3.0, 2.0, 1.0), 0.0, Branch::Upper, 4).unwrap();
        assert_eq!(d, Derivatives::zeros(4));
    }

    #[test]
    fn asymmetric_input_rejected() {
        let mut c = PolyCoeffs::default();
        c.quadratic[(0, 1)] = 1.0;
        assert!(matches!(
            PolynomialPotential::new(c),
            Err(Error::AsymmetricTensor { order: 2, .. })
        ));
        let mut c = PolyCoeffs::default();
        c.cubic.0[0][1][2] = 1.0;
        assert!(matches!(
            PolynomialPotential::new(c),
            Err(Error::AsymmetricTensor { order: 3, .. })
        ));
    }

    #[test]
    fn branch_dependent_coefficients() {
        let mut a = PolyCoeffs::default();
        a.constant = 1.0;
        let p = PolynomialPotential::per_branch(a.clone(), PolyCoeffs::default()).unwrap();
        assert!(p.branch_dependent());
        assert_eq!(p.value(&Vec3::zeros(), 0.0, Branch::Upper).unwrap(), 1.0);
        assert_eq!(p.value(&Vec3::zeros(), 0.0, Branch::Lower).unwrap(), 0.0);
        let q = PolynomialPotential::per_branch(a.clone(), a).unwrap();
        assert!(!q.branch_dependent());
    }

    #[test]
    fn origin_shift() {
        let p = PolynomialPotential::monomial_z(1.0, 2)
            .unwrap()
            .with_origin(Vec3::new(0.0, 0.0, 2.0));
        assert_eq!(p.value(&Vec3::new(0.0, 0.0, 5.0), 0.0, Branch::Upper).unwrap(), 9.0);
    }
}
