//! Potentials tabulated on a uniform rectilinear grid.
//!
//! # File formats
//!
//! Values are stored row-major with `x` slowest and `z` fastest, i.e. the
//! sample at `(ix, iy, iz)` has flat index `(ix * ny + iy) * nz + iz`. An axis
//! with a single point is inactive: the potential is taken as constant along
//! it and its coordinate is not range-checked. Lengths are in metres and
//! values in joules.
//!
//! Text (`.txt`), one header item per line, `#` starts a comment:
//!
//! ```text
//! AIPGRID text 1
//! units J m
//! axis x <min> <max> <n>
//! axis y <min> <max> <n>
//! axis z <min> <max> <n>
//! values
//! <nx*ny*nz whitespace-separated numbers>
//! ```
//!
//! Binary, all little endian:
//!
//! | offset | size        | content                                     |
//! |--------|-------------|---------------------------------------------|
//! | 0      | 8           | ASCII `AIPGRID1`                            |
//! | 8      | 3 × u32     | `nx`, `ny`, `nz`                            |
//! | 20     | 6 × f64     | `xmin, xmax, ymin, ymax, zmin, zmax`        |
//! | 68     | N × f64     | values, `N = nx * ny * nz`                  |

use std::path::Path;

use nalgebra::DMatrix;

use super::{check_order, finite_difference_derivatives, Derivatives, Potential};
use crate::model::Branch;
use crate::tensor::{Mat3, Vec3};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"AIPGRID1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Interpolation {
    Linear,
    #[default]
    CubicSpline,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, n: usize) -> Self {
        Self { min, max, n }
    }

    pub fn inactive() -> Self {
        Self { min: 0.0, max: 0.0, n: 1 }
    }

    pub fn active(&self) -> bool {
        self.n > 1
    }

    pub fn spacing(&self) -> f64 {
        if self.active() {
            (self.max - self.min) / (self.n - 1) as f64
        } else {
            0.0
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    fn validate(&self, name: char) -> Result<()> {
        if self.n == 0 {
            return Err(Error::GridFormat(format!("axis {name} has no points")));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || (self.active() && self.max <= self.min) {
            return Err(Error::GridFormat(format!(
                "axis {name} needs finite min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    /// Interval index and local coordinate in `[0, 1]`, or `None` outside.
    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if !self.active() {
            return Some((0, 0.0));
        }
        let h = self.spacing();
        let slack = 1e-12 * (self.max - self.min);
        if !(x >= self.min - slack && x <= self.max + slack) {
            return None;
        }
        let u = ((x - self.min) / h).clamp(0.0, (self.n - 1) as f64);
        let a = (u.floor() as usize).min(self.n - 2);
        Some((a, u - a as f64))
    }
}

/// Weights of one axis on one interval: nodal values (`e = 0`) and nodal
/// second derivatives (`e = 1`), each for the left and right node, plus their
/// first and second derivatives in `x`.
#[derive(Clone, Copy, Debug, Default)]
struct AxisWeights {
    w: [[[f64; 2]; 2]; 3],
}

fn axis_weights(axis: &GridAxis, t: f64, cubic: bool) -> AxisWeights {
    let mut out = AxisWeights::default();
    if !axis.active() {
        out.w[0][0][0] = 1.0;
        return out;
    }
    let h = axis.spacing();
    let (a, b) = (1.0 - t, t);
    out.w[0][0] = [a, b];
    out.w[1][0] = [-1.0 / h, 1.0 / h];
    if cubic {
        out.w[0][1] = [(a * a * a - a) * h * h / 6.0, (b * b * b - b) * h * h / 6.0];
        out.w[1][1] = [-(3.0 * a * a - 1.0) * h / 6.0, (3.0 * b * b - 1.0) * h / 6.0];
        out.w[2][1] = [a, b];
    }
    out
}

/// Matrix mapping nodal values to nodal second derivatives of the
/// not-a-knot cubic spline on a uniform axis.
fn not_a_knot_matrix(n: usize, h: f64) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    a[(0, 0)] = 1.0;
    a[(0, 1)] = -2.0;
    a[(0, 2)] = 1.0;
    a[(n - 1, n - 3)] = 1.0;
    a[(n - 1, n - 2)] = -2.0;
    a[(n - 1, n - 1)] = 1.0;
    let c = 6.0 / (h * h);
    for i in 1..n - 1 {
        a[(i, i - 1)] = 1.0;
        a[(i, i)] = 4.0;
        a[(i, i + 1)] = 1.0;
        b[(i, i - 1)] = c;
        b[(i, i)] = -2.0 * c;
        b[(i, i + 1)] = c;
    }
    a.lu().solve(&b).expect("not-a-knot system is regular for n >= 4")
}

#[derive(Clone, Debug)]
pub struct GridPotential {
    axes: [GridAxis; 3],
    values: Vec<f64>,
    interpolation: Interpolation,
    /// `(S_x^ex ⊗ S_y^ey ⊗ S_z^ez) Y` for `e ∈ {0,1}^3`, index `4ex + 2ey + ez`.
    layers: Vec<Vec<f64>>,
}

impl GridPotential {
    pub fn new(axes: [GridAxis; 3], values: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        for (ax, name) in axes.iter().zip(['x', 'y', 'z']) {
            ax.validate(name)?;
        }
        let n = axes.iter().map(|a| a.n).product::<usize>();
        if values.len() != n {
            return Err(Error::GridFormat(format!(
                "expected {n} values for a {}x{}x{} grid, found {}",
                axes[0].n,
                axes[1].n,
                axes[2].n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::GridFormat("grid contains non-finite values".into()));
        }
        if !axes.iter().any(GridAxis::active) {
            return Err(Error::InsufficientGrid("at least one axis needs two or more points".into()));
        }
        let mut layers = vec![values.clone()];
        if interpolation == Interpolation::CubicSpline {
            for (ax, name) in axes.iter().zip(['x', 'y', 'z']) {
                if ax.active() && ax.n < 4 {
                    return Err(Error::InsufficientGrid(format!(
                        "cubic spline needs at least 4 points on axis {name}, found {}",
                        ax.n
                    )));
                }
            }
            // layer index bit 2 = x, bit 1 = y, bit 0 = z
            layers = vec![Vec::new(); 8];
            layers[0] = values.clone();
            for axis in 0..3 {
                let bit = 1 << (2 - axis);
                let s = axes[axis]
                    .active()
                    .then(|| not_a_knot_matrix(axes[axis].n, axes[axis].spacing()));
                for src in 0..8 {
                    if src & bit != 0 || layers[src].is_empty() || !layers[src | bit].is_empty() {
                        continue;
                    }
                    layers[src | bit] = match &s {
                        Some(s) => apply_along(&layers[src], &axes, axis, s),
                        None => vec![0.0; n],
                    };
                }
            }
        }
        Ok(Self {
            axes,
            values,
            interpolation,
            layers,
        })
    }

    /// A grid sampled from `f` at every node.
    pub fn sample(axes: [GridAxis; 3], interpolation: Interpolation, f: impl Fn(&Vec3) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(axes.iter().map(|a| a.n).product());
        for ix in 0..axes[0].n {
            for iy in 0..axes[1].n {
                for iz in 0..axes[2].n {
                    values.push(f(&Vec3::new(axes[0].coord(ix), axes[1].coord(iy), axes[2].coord(iz))));
                }
            }
        }
        Self::new(axes, values, interpolation)
    }

    pub fn axes(&self) -> &[GridAxis; 3] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    fn flat(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.axes[1].n + iy) * self.axes[2].n + iz
    }

    fn smallest_spacing(&self) -> f64 {
        self.axes
            .iter()
            .filter(|a| a.active())
            .map(GridAxis::spacing)
            .fold(f64::INFINITY, f64::min)
    }

    /// Value, gradient and Hessian of the interpolant.
    fn interpolate(&self, r: &Vec3, order: usize) -> Result<Derivatives> {
        let mut loc = [(0usize, 0.0f64); 3];
        for k in 0..3 {
            loc[k] = self.axes[k]
                .locate(r[k])
                .ok_or(Error::OutOfDomain { x: r.x, y: r.y, z: r.z })?;
        }
        let cubic = self.interpolation == Interpolation::CubicSpline;
        let w: Vec<AxisWeights> = (0..3).map(|k| axis_weights(&self.axes[k], loc[k].1, cubic)).collect();
        let n_e = if cubic { 2 } else { 1 };
        let span = |k: usize| if self.axes[k].active() { 2 } else { 1 };

        let mut out = Derivatives::zeros(order);
        let mut hess = Mat3::zeros();
        for ex in 0..n_e {
            for ey in 0..n_e {
                for ez in 0..n_e {
                    let layer = &self.layers[4 * ex + 2 * ey + ez];
                    for dx in 0..span(0) {
                        for dy in 0..span(1) {
                            for dz in 0..span(2) {
                                let y = layer[self.flat(loc[0].0 + dx, loc[1].0 + dy, loc[2].0 + dz)];
                                if y == 0.0 {
                                    continue;
                                }
                                let f = |k: usize, d: usize, e: usize, s: usize| w[k].w[d][e][s];
                                let (e, s) = ([ex, ey, ez], [dx, dy, dz]);
                                let p = |dk: [usize; 3]| {
                                    f(0, dk[0], e[0], s[0]) * f(1, dk[1], e[1], s[1]) * f(2, dk[2], e[2], s[2])
                                };
                                out.value += y * p([0, 0, 0]);
                                if order >= 1 {
                                    out.gradient.x += y * p([1, 0, 0]);
                                    out.gradient.y += y * p([0, 1, 0]);
                                    out.gradient.z += y * p([0, 0, 1]);
                                }
                                if order >= 2 {
                                    hess[(0, 0)] += y * p([2, 0, 0]);
                                    hess[(1, 1)] += y * p([0, 2, 0]);
                                    hess[(2, 2)] += y * p([0, 0, 2]);
                                    hess[(0, 1)] += y * p([1, 1, 0]);
                                    hess[(0, 2)] += y * p([1, 0, 1]);
                                    hess[(1, 2)] += y * p([0, 1, 1]);
                                }
                            }
                        }
                    }
                }
            }
        }
        if order >= 2 {
            hess[(1, 0)] = hess[(0, 1)];
            hess[(2, 0)] = hess[(0, 2)];
            hess[(2, 1)] = hess[(1, 2)];
            out.hessian = hess;
        }
        Ok(out)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::GridFormat(format!("{}: {e}", path.display())))?;
        if bytes.starts_with(MAGIC) {
            Self::from_binary(&bytes)
        } else {
            let text = String::from_utf8(bytes)
                .map_err(|_| Error::GridFormat(format!("{}: neither binary grid nor UTF-8 text", path.display())))?;
            Self::from_text(&text)
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let bad = |m: String| Error::GridFormat(m);
        match lines.next() {
            Some("AIPGRID text 1") => {}
            other => return Err(bad(format!("missing 'AIPGRID text 1' header, found {other:?}"))),
        }
        match lines.next() {
            Some(l) if l.split_whitespace().collect::<Vec<_>>() == ["units", "J", "m"] => {}
            other => return Err(bad(format!("expected 'units J m', found {other:?}"))),
        }
        let mut axes = Vec::new();
        for name in ["x", "y", "z"] {
            let line = lines.next().ok_or_else(|| bad(format!("missing axis {name}")))?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 5 || parts[0] != "axis" || parts[1] != name {
                return Err(bad(format!("expected 'axis {name} <min> <max> <n>', found '{line}'")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number '{s}' on axis {name}")));
            let n = parts[4]
                .parse::<usize>()
                .map_err(|_| bad(format!("bad point count '{}' on axis {name}", parts[4])))?;
            axes.push(GridAxis::new(num(parts[2])?, num(parts[3])?, n));
        }
        match lines.next() {
            Some("values") => {}
            other => return Err(bad(format!("expected 'values', found {other:?}"))),
        }
        let mut values = Vec::new();
        for line in lines {
            for tok in line.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|_| bad(format!("bad value '{tok}'")))?);
            }
        }
        let axes: [GridAxis; 3] = axes.try_into().expect("three axes parsed");
        Self::new(axes, values, Interpolation::default())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("AIPGRID text 1\nunits J m\n");
        for (a, name) in self.axes.iter().zip(["x", "y", "z"]) {
            s.push_str(&format!("axis {name} {:e} {:e} {}\n", a.min, a.max, a.n));
        }
        s.push_str("values\n");
        for chunk in self.values.chunks(self.axes[2].n) {
            let row: Vec<String> = chunk.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::GridFormat(m.to_string());
        if bytes.len() < 68 || &bytes[..8] != MAGIC {
            return Err(bad("truncated or missing AIPGRID1 header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let n = [u32_at(8), u32_at(12), u32_at(16)];
        let axes = [
            GridAxis::new(f64_at(20), f64_at(28), n[0]),
            GridAxis::new(f64_at(36), f64_at(44), n[1]),
            GridAxis::new(f64_at(52), f64_at(60), n[2]),
        ];
        let count = n.iter().product::<usize>();
        if bytes.len() != 68 + 8 * count {
            return Err(Error::GridFormat(format!(
                "expected {} bytes of values, found {}",
                8 * count,
                bytes.len() - 68
            )));
        }
        let values = (0..count).map(|i| f64_at(68 + 8 * i)).collect();
        Self::new(axes, values, Interpolation::default())
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(68 + 8 * self.values.len());
        out.extend_from_slice(MAGIC);
        for a in &self.axes {
            out.extend_from_slice(&(a.n as u32).to_le_bytes());
        }
        for a in &self.axes {
            out.extend_from_slice(&a.min.to_le_bytes());
            out.extend_from_slice(&a.max.to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn with_interpolation(self, interpolation: Interpolation) -> Result<Self> {
        Self::new(self.axes, self.values, interpolation)
    }
}

/// Applies `s` to every line of `data` running along `axis`.
fn apply_along(data: &[f64], axes: &[GridAxis; 3], axis: usize, s: &DMatrix<f64>) -> Vec<f64> {
    let n = [axes[0].n, axes[1].n, axes[2].n];
    let stride = match axis {
        0 => n[1] * n[2],
        1 => n[2],
        _ => 1,
    };
    let mut out = vec![0.0; data.len()];
    let len = n[axis];
    let mut line = vec![0.0; len];
    for base in 0..data.len() {
        // base must be the first element of a line
        if (base / stride) % len != 0 {
            continue;
        }
        for (i, l) in line.iter_mut().enumerate() {
            *l = data[base + i * stride];
        }
        for i in 0..len {
            let mut acc = 0.0;
            for (j, l) in line.iter().enumerate() {
                acc += s[(i, j)] * l;
            }
            out[base + i * stride] = acc;
        }
    }
    out
}

impl Potential for GridPotential {
    fn derivatives(&self, r: &Vec3, _t: f64, _b: Branch, order: usize) -> Result<Derivatives> {
        check_order(order)?;
        if self.interpolation == Interpolation::Linear && order > 1 {
            return Err(Error::InsufficientGrid(format!(
                "linear interpolation has no derivatives of order {order}"
            )));
        }
        let mut d = self.interpolate(r, order.min(2))?;
        if order > 2 {
            // higher orders by differencing the interpolant over about one cell
            let f = |x: &Vec3| self.interpolate(x, 0).map(|d| d.value).unwrap_or(f64::NAN);
            let fd = finite_difference_derivatives(&f, r, order, 100.0 * self.smallest_spacing());
            if fd.third.max_abs().is_nan() || fd.fourth.max_abs().is_nan() {
                return Err(Error::InsufficientGrid(
                    "finite-difference stencil for higher derivatives leaves the grid".into(),
                ));
            }
            d.third = fd.third;
            d.fourth = fd.fourth;
        }
        d.order = order;
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_axes(n: usize) -> [GridAxis; 3] {
        [GridAxis::inactive(), GridAxis::inactive(), GridAxis::new(-1.0, 2.0, n)]
    }

    #[test]
    fn quadratic_hessian_recovered() {
        let c = 0.37;
        let g = GridPotential::sample(z_axes(40), Interpolation::CubicSpline, |r| c * r.z * r.z).unwrap();
        for z in [-0.95, -0.3, 0.123, 1.0, 1.99] {
            let d = g.derivatives(&Vec3::new(5.0, -3.0, z), 0.0, Branch::Upper, 2).unwrap();
            assert!((d.hessian[(2, 2)] - 2.0 * c).abs() < 1e-6 * 2.0 * c, "{z}");
            assert!((d.value - c * z * z).abs() < 1e-12);
            assert!((d.gradient.z - 2.0 * c * z).abs() < 1e-11);
        }
    }

    #[test]
    fn cubic_reproduced_exactly_in_3d() {
        let f = |r: &Vec3| r.x * r.y * r.z + 0.5 * r.z.powi(3) - r.x * r.x + 2.0 * r.y;
        let axes = [
            GridAxis::new(-1.0, 1.0, 6),
            GridAxis::new(0.0, 2.0, 7),
            GridAxis::new(-0.5, 0.5, 5),
        ];
        let g = GridPotential::sample(axes, Interpolation::CubicSpline, f).unwrap();
        let r = Vec3::new(0.31, 1.17, -0.22);
        let d = g.derivatives(&r, 0.0, Branch::Lower, 3).unwrap();
        assert!((d.value - f(&r)).abs() < 1e-12);
        let grad = Vec3::new(r.y * r.z - 2.0 * r.x, r.x * r.z + 2.0, r.x * r.y + 1.5 * r.z * r.z);
        assert!((d.gradient - grad).norm() < 1e-11);
        let hess = Mat3::new(-2.0, r.z, r.y, r.z, 0.0, r.x, r.y, r.x, 3.0 * r.z);
        assert!((d.hessian - hess).norm() < 1e-10);
        assert!((d.third.0[0][1][2] - 1.0).abs() < 1e-6);
        assert!((d.third.0[2][2][2] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn constant_grid_has_zero_derivatives() {
        let g = GridPotential::sample(z_axes(8), Interpolation::CubicSpline, |_| 4.2).unwrap();
        let d = g.derivatives(&Vec3::new(0.0, 0.0, 0.5), 0.0, Branch::Upper, 2).unwrap();
        assert!((d.value - 4.2).abs() < 1e-14);
        assert!(d.gradient.norm() < 1e-13);
        assert!(d.hessian.norm() < 1e-12);
    }

    #[test]
    fn out_of_domain_and_insufficient_grids() {
        let g = GridPotential::sample(z_axes(8), Interpolation::CubicSpline, |r| r.z).unwrap();
        assert!(matches!(
            g.value(&Vec3::new(0.0, 0.0, 2.5), 0.0, Branch::Upper),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(matches!(
            GridPotential::sample(z_axes(3), Interpolation::CubicSpline, |r| r.z),
            Err(Error::InsufficientGrid(_))
        ));
        let lin = GridPotential::sample(z_axes(3), Interpolation::Linear, |r| r.z).unwrap();
        assert!((lin.gradient(&Vec3::new(0.0, 0.0, 0.2), 0.0, Branch::Upper).unwrap().z - 1.0).abs() < 1e-14);
        assert!(matches!(
            lin.derivatives(&Vec3::zeros(), 0.0, Branch::Upper, 2),
            Err(Error::InsufficientGrid(_))
        ));
    }

    #[test]
    fn text_and_binary_round_trip() {
        let axes = [GridAxis::new(0.0, 1.0, 4), GridAxis::inactive(), GridAxis::new(-1.0, 1.0, 5)];
        let g = GridPotential::sample(axes, Interpolation::CubicSpline, |r| r.x + 0.1 * r.z * r.z).unwrap();
        let t = GridPotential::from_text(&g.to_text()).unwrap();
        assert_eq!(t.values(), g.values());
        assert_eq!(t.axes(), g.axes());
        let b = GridPotential::from_binary(&g.to_binary()).unwrap();
        assert_eq!(b.values(), g.values());
        assert_eq!(g.to_binary().len(), 68 + 8 * 20);
    }

    #[test]
    fn malformed_files_rejected() {
        assert!(GridPotential::from_text("nonsense").is_err());
        let txt = "AIPGRID text 1\nunits J m\naxis x 0 1 1\naxis y 0 1 1\naxis z 0 1 4\nvalues\n1 2 3\n";
        assert!(matches!(GridPotential::from_text(txt), Err(Error::GridFormat(_))));
        assert!(GridPotential::from_binary(b"AIPGRID1").is_err());
    }
}
