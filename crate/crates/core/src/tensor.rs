//! Small fixed-size tensors for potential derivatives.
//!
//! Rank 1 and 2 use nalgebra; rank 3 and 4 are plain nested arrays with the
//! handful of contractions the engine needs.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

const PERMS3: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

fn perms4() -> impl Iterator<Item = [usize; 4]> {
    PERMS3.iter().flat_map(|p| {
        // insert index 3 at every slot of each 3-permutation
        (0..4).map(move |slot| {
            let mut out = [0usize; 4];
            let mut src = 0;
            for (pos, o) in out.iter_mut().enumerate() {
                if pos == slot {
                    *o = 3;
                } else {
                    *o = p[src];
                    src += 1;
                }
            }
            out
        })
    })
}

/// Rank-3 tensor `T[i][j][k]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Tensor3(pub [[[f64; 3]; 3]; 3]);

/// Rank-4 tensor `T[i][j][k][l]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Tensor4(pub [[[[f64; 3]; 3]; 3]; 3]);

impl Tensor3 {
    pub fn zeros() -> Self {
        Self::default()
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut out = [[[0.0; 3]; 3]; 3];
        for (i, a) in out.iter_mut().enumerate() {
            for (j, b) in a.iter_mut().enumerate() {
                for (k, c) in b.iter_mut().enumerate() {
                    *c = f(i, j, k);
                }
            }
        }
        Self(out)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.0[i][j][k]
    }

    /// Sets `T_ijk` and all index permutations to `value`.
    pub fn set_symmetric(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let idx = [i, j, k];
        for p in PERMS3 {
            self.0[idx[p[0]]][idx[p[1]]][idx[p[2]]] = value;
        }
    }

    pub fn symmetrized(&self) -> Self {
        Self::from_fn(|i, j, k| {
            let idx = [i, j, k];
            PERMS3
                .iter()
                .map(|p| self.0[idx[p[0]]][idx[p[1]]][idx[p[2]]])
                .sum::<f64>()
                / 6.0
        })
    }

    /// Largest absolute difference between the tensor and its symmetrization.
    pub fn asymmetry(&self) -> f64 {
        let sym = self.symmetrized();
        self.sub(&sym).max_abs()
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(|i, j, k| s * self.0[i][j][k])
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_fn(|i, j, k| self.0[i][j][k] + other.0[i][j][k])
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(|i, j, k| self.0[i][j][k] - other.0[i][j][k])
    }

    /// `M_ij = T_ijk v_k`.
    pub fn contract_vec(&self, v: &Vec3) -> Mat3 {
        Mat3::from_fn(|i, j| (0..3).map(|k| self.0[i][j][k] * v[k]).sum())
    }

    /// `w_i = T_ijk M_jk`.
    pub fn contract_mat(&self, m: &Mat3) -> Vec3 {
        Vec3::from_fn(|i, _| {
            let mut acc = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    acc += self.0[i][j][k] * m[(j, k)];
                }
            }
            acc
        })
    }

    /// `T_ijk v_i v_j v_k`.
    pub fn cubic_form(&self, v: &Vec3) -> f64 {
        self.contract_vec(v).dot(&(v * v.transpose()))
    }
}

impl Tensor4 {
    pub fn zeros() -> Self {
        Self::default()
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut out = [[[[0.0; 3]; 3]; 3]; 3];
        for (i, a) in out.iter_mut().enumerate() {
            for (j, b) in a.iter_mut().enumerate() {
                for (k, c) in b.iter_mut().enumerate() {
                    for (l, d) in c.iter_mut().enumerate() {
                        *d = f(i, j, k, l);
                    }
                }
            }
        }
        Self(out)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0[i][j][k][l]
    }

    pub fn set_symmetric(&mut self, i: usize, j: usize, k: usize, l: usize, value: f64) {
        let idx = [i, j, k, l];
        for p in perms4() {
            self.0[idx[p[0]]][idx[p[1]]][idx[p[2]]][idx[p[3]]] = value;
        }
    }

    pub fn symmetrized(&self) -> Self {
        let perms: Vec<[usize; 4]> = perms4().collect();
        Self::from_fn(|i, j, k, l| {
            let idx = [i, j, k, l];
            perms
                .iter()
                .map(|p| self.0[idx[p[0]]][idx[p[1]]][idx[p[2]]][idx[p[3]]])
                .sum::<f64>()
                / 24.0
        })
    }

    pub fn asymmetry(&self) -> f64 {
        let sym = self.symmetrized();
        Self::from_fn(|i, j, k, l| self.0[i][j][k][l] - sym.0[i][j][k][l]).max_abs()
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(|i, j, k, l| s * self.0[i][j][k][l])
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_fn(|i, j, k, l| self.0[i][j][k][l] + other.0[i][j][k][l])
    }

    /// `S_ijk = T_ijkl v_l`.
    pub fn contract_vec(&self, v: &Vec3) -> Tensor3 {
        Tensor3::from_fn(|i, j, k| (0..3).map(|l| self.0[i][j][k][l] * v[l]).sum())
    }
}

/// Largest absolute deviation of a matrix from its transpose.
pub fn mat_asymmetry(m: &Mat3) -> f64 {
    (m - m.transpose()).abs().max()
}

pub fn symmetrize_mat(m: &Mat3) -> Mat3 {
    (m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perms4_cover_all_orderings() {
        let mut all: Vec<[usize; 4]> = perms4().collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 24);
    }

    #[test]
    fn set_symmetric_fills_permutations() {
        let mut t = Tensor3::zeros();
        t.set_symmetric(0, 0, 2, 1.5);
        assert_eq!(t.get(0, 2, 0), 1.5);
        assert_eq!(t.get(2, 0, 0), 1.5);
        assert_eq!(t.asymmetry(), 0.0);

        let mut q = Tensor4::zeros();
        q.set_symmetric(0, 1, 2, 2, -3.0);
        assert_eq!(q.get(2, 1, 2, 0), -3.0);
        assert_eq!(q.asymmetry(), 0.0);
    }

    #[test]
    fn contractions_agree_with_explicit_sums() {
        let t = Tensor3::from_fn(|i, j, k| (i + 2 * j + 3 * k) as f64).symmetrized();
        let v = Vec3::new(0.3, -1.2, 2.0);
        let mut direct = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    direct += t.get(i, j, k) * v[i] * v[j] * v[k];
                }
            }
        }
        assert!((t.cubic_form(&v) - direct).abs() < 1e-12);

        let m = v * v.transpose();
        let w = t.contract_mat(&m);
        assert!((w.dot(&v) - direct).abs() < 1e-12);
    }

    #[test]
    fn asymmetry_detects_unsymmetric_input() {
        let mut t = Tensor3::zeros();
        t.0[0][1][2] = 1.0;
        assert!(t.asymmetry() > 0.5);
    }
}
