use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use super::{check_order, Derivatives, Potential};
use crate::model::Branch;
use crate::tensor::{Mat3, Tensor3, Tensor4, Vec3};
use crate::Result;

type ScalarFn = dyn Fn(&Vec3, f64, Branch) -> f64 + Send + Sync;

/// Black-box potential given as a closure; derivatives come from central
/// differences with one Richardson step.
#[derive(Clone)]
pub struct FnPotential {
    f: Arc<ScalarFn>,
    /// Length over which the potential changes appreciably [m]; sets the
    /// finite-difference steps.
    pub length_scale: f64,
    pub branch_dependent: bool,
    pub is_static: bool,
}

impl fmt::Debug for FnPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnPotential")
            .field("length_scale", &self.length_scale)
            .field("branch_dependent", &self.branch_dependent)
            .field("is_static", &self.is_static)
            .finish_non_exhaustive()
    }
}

impl FnPotential {
    /// A potential `f(r, t, branch)`, assumed time dependent and branch
    /// dependent until told otherwise.
    pub fn new(f: impl Fn(&Vec3, f64, Branch) -> f64 + Send + Sync + 'static, length_scale: f64) -> Self {
        Self {
            f: Arc::new(f),
            length_scale,
            branch_dependent: true,
            is_static: false,
        }
    }

    pub fn branch_independent(mut self) -> Self {
        self.branch_dependent = false;
        self
    }

    pub fn time_independent(mut self) -> Self {
        self.is_static = true;
        self
    }
}

impl Potential for FnPotential {
    fn derivatives(&self, r: &Vec3, t: f64, branch: Branch, order: usize) -> Result<Derivatives> {
        check_order(order)?;
        let f = |x: &Vec3| (self.f)(x, t, branch);
        Ok(finite_difference_derivatives(&f, r, order, self.length_scale))
    }

    fn branch_dependent(&self) -> bool {
        self.branch_dependent
    }

    fn is_static(&self) -> bool {
        self.is_static
    }
}

/// Relative step per derivative order. Higher orders divide by higher powers
/// of the step, so they need wider stencils to stay clear of rounding.
const STEP: [f64; 5] = [0.0, 1e-3, 2e-3, 5e-3, 1e-2];

// (offsets, weights) of second-order central stencils for the n-th derivative
const STENCILS: [(&[f64], &[f64]); 5] = [
    (&[0.0], &[1.0]),
    (&[-1.0, 1.0], &[-0.5, 0.5]),
    (&[-1.0, 0.0, 1.0], &[1.0, -2.0, 1.0]),
    (&[-2.0, -1.0, 1.0, 2.0], &[-0.5, 1.0, -1.0, 0.5]),
    (&[-2.0, -1.0, 0.0, 1.0, 2.0], &[1.0, -4.0, 6.0, -4.0, 1.0]),
];

fn directional(f: &dyn Fn(&Vec3) -> f64, x: &Vec3, u: &Vec3, n: usize, h: f64) -> f64 {
    let (offs, ws) = STENCILS[n];
    let raw = |h: f64| -> f64 {
        let s: f64 = offs.iter().zip(ws).map(|(o, w)| w * f(&(x + u * (o * h)))).sum();
        s / h.powi(n as i32)
    };
    let coarse = raw(h);
    let fine = raw(0.5 * h);
    (4.0 * fine - coarse) / 3.0
}

/// Sorted index tuples `i ≤ j ≤ ...` of length `n`.
fn multi_indices(n: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in start..3 {
            cur.push(i);
            rec(n, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, 0, &mut Vec::new(), &mut out);
    out
}

/// Number of distinct orderings of a sorted multi-index.
fn multiplicity(idx: &[usize]) -> f64 {
    let fact = |k: usize| (1..=k).product::<usize>() as f64;
    let mut counts = [0usize; 3];
    for &i in idx {
        counts[i] += 1;
    }
    fact(idx.len()) / counts.iter().map(|&c| fact(c)).product::<f64>()
}

/// Probe directions plus the pseudo-inverse mapping directional n-th
/// derivatives to independent tensor components.
struct Design {
    dirs: Vec<Vec3>,
    indices: Vec<Vec<usize>>,
    pinv: DMatrix<f64>,
}

fn design(n: usize) -> &'static Design {
    static CACHE: [OnceLock<Design>; 5] = [const { OnceLock::new() }; 5];
    CACHE[n].get_or_init(|| {
        let dirs: Vec<Vec3> = match n {
            1 => (0..3).map(|i| Vec3::ith(i, 1.0)).collect(),
            2 => {
                let mut d: Vec<Vec3> = (0..3).map(|i| Vec3::ith(i, 1.0)).collect();
                for i in 0..3 {
                    for j in i + 1..3 {
                        d.push(Vec3::ith(i, 1.0) + Vec3::ith(j, 1.0));
                    }
                }
                d
            }
            _ => {
                // half of the cube {-m..m}^3: first non-zero component positive
                let m: i32 = if n == 3 { 1 } else { 2 };
                let mut d = Vec::new();
                for a in -m..=m {
                    for b in -m..=m {
                        for c in -m..=m {
                            let v = [a, b, c];
                            if v.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0) {
                                d.push(Vec3::new(a as f64, b as f64, c as f64));
                            }
                        }
                    }
                }
                d
            }
        };
        let indices = multi_indices(n);
        let a = DMatrix::from_fn(dirs.len(), indices.len(), |r, c| {
            let idx = &indices[c];
            multiplicity(idx) * idx.iter().map(|&i| dirs[r][i]).product::<f64>()
        });
        let pinv = a.pseudo_inverse(1e-12).expect("direction design has full column rank");
        Design { dirs, indices, pinv }
    })
}

/// Unique components of the n-th derivative tensor, in `multi_indices` order.
fn components(f: &dyn Fn(&Vec3) -> f64, x: &Vec3, n: usize, h: f64) -> (&'static [Vec<usize>], Vec<f64>) {
    let d = design(n);
    let probes: Vec<f64> = d
        .dirs
        .iter()
        .map(|u| directional(f, x, &(u / u.norm()), n, h) * u.norm().powi(n as i32))
        .collect();
    let probes = nalgebra::DVector::from_vec(probes);
    let sol = &d.pinv * probes;
    (&d.indices, sol.iter().copied().collect())
}

/// Value and derivative tensors up to `order` of a scalar field by central
/// differences, with steps proportional to `length_scale`.
pub fn finite_difference_derivatives(
    f: &dyn Fn(&Vec3) -> f64,
    x: &Vec3,
    order: usize,
    length_scale: f64,
) -> Derivatives {
    let mut out = Derivatives::zeros(order);
    out.value = f(x);
    for n in 1..=order.min(4) {
        let h = STEP[n] * length_scale;
        let (idx, vals) = components(f, x, n, h);
        match n {
            1 => {
                for (k, v) in idx.iter().zip(&vals) {
                    out.gradient[k[0]] = *v;
                }
            }
            2 => {
                let mut m = Mat3::zeros();
                for (k, v) in idx.iter().zip(&vals) {
                    m[(k[0], k[1])] = *v;
                    m[(k[1], k[0])] = *v;
                }
                out.hessian = m;
            }
            3 => {
                let mut t = Tensor3::zeros();
                for (k, v) in idx.iter().zip(&vals) {
                    t.set_symmetric(k[0], k[1], k[2], *v);
                }
                out.third = t;
            }
            _ => {
                let mut t = Tensor4::zeros();
                for (k, v) in idx.iter().zip(&vals) {
                    t.set_symmetric(k[0], k[1], k[2], k[3], *v);
                }
                out.fourth = t;
            }
        }
    }
    out
}
