use crate::model::{unperturbed_trajectory, Branch, BranchTrajectory, PulseSequence};
use crate::quadrature::GaussLegendre;
use crate::tensor::Vec3;
use crate::{Error, Result};

/// A point on the time contour together with the unperturbed position of
/// the branch it lies on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourPoint {
    pub branch: Branch,
    pub t: f64,
    pub r: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    /// Gauss–Legendre nodes per panel.
    pub nodes: usize,
    /// Panels per inter-pulse segment.
    pub panels: usize,
    /// Re-run on a doubled panel count and report the difference.
    pub estimate_error: bool,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            nodes: 32,
            panels: 1,
            estimate_error: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Difference to the half-resolution result plus a rounding floor.
    pub error: f64,
}

/// Oriented piece of the contour. Time runs from `t_from` to `t_to`, which
/// is backwards on the lower branch.
#[derive(Clone, Copy, Debug)]
struct Panel {
    branch: Branch,
    segment: usize,
    t_from: f64,
    t_to: f64,
}

/// Closed time contour: up the upper branch from `t_i` to `t_d`, then down
/// the lower branch back to `t_i`.
#[derive(Clone, Debug)]
pub struct Contour {
    upper: BranchTrajectory,
    lower: BranchTrajectory,
    t_i: f64,
    t_d: f64,
}

const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

impl Contour {
    pub fn new(seq: &PulseSequence) -> Result<Self> {
        Ok(Self {
            upper: unperturbed_trajectory(seq, Branch::Upper)?,
            lower: unperturbed_trajectory(seq, Branch::Lower)?,
            t_i: seq.t_i,
            t_d: seq.t_d,
        })
    }

    pub fn trajectory(&self, branch: Branch) -> &BranchTrajectory {
        match branch {
            Branch::Upper => &self.upper,
            Branch::Lower => &self.lower,
        }
    }

    pub fn t_i(&self) -> f64 {
        self.t_i
    }

    pub fn t_d(&self) -> f64 {
        self.t_d
    }

    /// `∮ dt`, which vanishes for a closed contour.
    pub fn signed_length(&self) -> f64 {
        self.panels(1).iter().map(|p| p.t_to - p.t_from).sum()
    }

    /// Point on `branch` at time `t`.
    pub fn point(&self, branch: Branch, t: f64) -> Result<ContourPoint> {
        let r = self.trajectory(branch).position(t)?;
        Ok(ContourPoint { branch, t, r })
    }

    fn panels(&self, per_segment: usize) -> Vec<Panel> {
        let n = per_segment.max(1);
        let mut out = Vec::new();
        for (seg, s) in self.upper.segments.iter().enumerate() {
            let h = (s.t_end - s.t_start) / n as f64;
            for j in 0..n {
                let a = s.t_start + j as f64 * h;
                let b = if j + 1 == n { s.t_end } else { a + h };
                out.push(Panel {
                    branch: Branch::Upper,
                    segment: seg,
                    t_from: a,
                    t_to: b,
                });
            }
        }
        for (seg, s) in self.lower.segments.iter().enumerate().rev() {
            let h = (s.t_end - s.t_start) / n as f64;
            for j in (0..n).rev() {
                let a = s.t_start + j as f64 * h;
                let b = if j + 1 == n { s.t_end } else { a + h };
                out.push(Panel {
                    branch: Branch::Lower,
                    segment: seg,
                    t_from: b,
                    t_to: a,
                });
            }
        }
        out
    }

    /// Points and oriented weights for the sub-interval of `panel` from its
    /// contour start to time `t_stop`.
    fn panel_nodes(&self, gl: &GaussLegendre, panel: &Panel, t_stop: f64) -> Vec<(ContourPoint, f64)> {
        let traj = self.trajectory(panel.branch);
        gl.mapped(panel.t_from, t_stop)
            .map(|(t, w)| {
                (
                    ContourPoint {
                        branch: panel.branch,
                        t,
                        r: traj.position_in(panel.segment, t),
                    },
                    w,
                )
            })
            .collect()
    }

    fn integrate_once<F>(&self, f: &F, gl: &GaussLegendre, per_segment: usize) -> Result<(f64, f64)>
    where
        F: Fn(&ContourPoint) -> Result<f64>,
    {
        let mut sum = 0.0;
        let mut abs = 0.0;
        for panel in self.panels(per_segment) {
            for (p, w) in self.panel_nodes(gl, &panel, panel.t_to) {
                let v = f(&p)?;
                if !v.is_finite() {
                    return Err(Error::NonFinite { branch: p.branch, t: p.t });
                }
                sum += w * v;
                abs += (w * v).abs();
            }
        }
        Ok((sum, abs))
    }

    /// `∮ dt f = ∫ f_u dt - ∫ f_l dt` by composite Gauss–Legendre, panels
    /// aligned with pulse times.
    pub fn integrate<F>(&self, f: F, opts: &QuadOptions) -> Result<QuadResult>
    where
        F: Fn(&ContourPoint) -> Result<f64>,
    {
        let gl = GaussLegendre::new(opts.nodes);
        if !opts.estimate_error {
            let (value, abs) = self.integrate_once(&f, &gl, opts.panels)?;
            return Ok(QuadResult {
                value,
                error: ROUNDING_FLOOR * abs,
            });
        }
        let (coarse, _) = self.integrate_once(&f, &gl, opts.panels)?;
        let (fine, abs) = self.integrate_once(&f, &gl, 2 * opts.panels.max(1))?;
        Ok(QuadResult {
            value: fine,
            error: (fine - coarse).abs() + ROUNDING_FLOOR * abs,
        })
    }

    fn integrate_nested_once<D, P, K>(
        &self,
        prepare: &P,
        kernel: &K,
        gl: &GaussLegendre,
        per_segment: usize,
    ) -> Result<(f64, f64)>
    where
        P: Fn(&ContourPoint) -> Result<D>,
        K: Fn(&D, &D) -> f64,
    {
        let panels = self.panels(per_segment);
        // full-panel nodes with prepared data, reused as inner points
        let mut full: Vec<Vec<(ContourPoint, f64, D)>> = Vec::with_capacity(panels.len());
        for panel in &panels {
            let mut nodes = Vec::with_capacity(gl.len());
            for (p, w) in self.panel_nodes(gl, panel, panel.t_to) {
                let d = prepare(&p)?;
                nodes.push((p, w, d));
            }
            full.push(nodes);
        }

        let mut sum = 0.0;
        let mut abs = 0.0;
        for (pi, panel) in panels.iter().enumerate() {
            for (outer, w_out, d_out) in &full[pi] {
                let mut inner = 0.0;
                for earlier in &full[..pi] {
                    for (_, w_in, d_in) in earlier {
                        inner += w_in * kernel(d_out, d_in);
                    }
                }
                for (p, w_in) in self.panel_nodes(gl, panel, outer.t) {
                    let d_in = prepare(&p)?;
                    inner += w_in * kernel(d_out, &d_in);
                }
                if !inner.is_finite() {
                    return Err(Error::NonFinite {
                        branch: outer.branch,
                        t: outer.t,
                    });
                }
                sum += w_out * inner;
                abs += (w_out * inner).abs();
            }
        }
        Ok((sum, abs))
    }

    /// `∮ dt ∮^t dt' h(t, t')`, where the inner integral covers every contour
    /// point preceding `t` (upper branch ascending, then lower descending).
    ///
    /// `prepare` runs once per quadrature point; `kernel(outer, inner)` then
    /// combines the prepared data.
    pub fn integrate_nested<D, P, K>(&self, prepare: P, kernel: K, opts: &QuadOptions) -> Result<QuadResult>
    where
        P: Fn(&ContourPoint) -> Result<D>,
        K: Fn(&D, &D) -> f64,
    {
        let gl = GaussLegendre::new(opts.nodes);
        if !opts.estimate_error {
            let (value, abs) = self.integrate_nested_once(&prepare, &kernel, &gl, opts.panels)?;
            return Ok(QuadResult {
                value,
                error: ROUNDING_FLOOR * abs,
            });
        }
        let (coarse, _) = self.integrate_nested_once(&prepare, &kernel, &gl, opts.panels)?;
        let (fine, abs) = self.integrate_nested_once(&prepare, &kernel, &gl, 2 * opts.panels.max(1))?;
        Ok(QuadResult {
            value: fine,
            error: (fine - coarse).abs() + ROUNDING_FLOOR * abs,
        })
    }

    /// Full double loop integral `∮ dt ∮ dt' h(t, t')` (no ordering).
    pub fn integrate_double<D, P, K>(&self, prepare: P, kernel: K, opts: &QuadOptions) -> Result<f64>
    where
        P: Fn(&ContourPoint) -> Result<D>,
        K: Fn(&D, &D) -> f64,
    {
        let gl = GaussLegendre::new(opts.nodes);
        let mut pts = Vec::new();
        for panel in self.panels(opts.panels) {
            for (p, w) in self.panel_nodes(&gl, &panel, panel.t_to) {
                pts.push((w, prepare(&p)?));
            }
        }
        let mut sum = 0.0;
        for (wa, da) in &pts {
            for (wb, db) in &pts {
                sum += wa * wb * kernel(da, db);
            }
        }
        Ok(sum)
    }
}

/// Convenience wrapper: builds the contour of `seq` and integrates `f` on it.
pub fn contour_integrate<F>(f: F, seq: &PulseSequence, opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(&ContourPoint) -> Result<f64>,
{
    Contour::new(seq)?.integrate(f, opts)
}

/// Nested loop integral of a two-time kernel `h(outer, inner)`.
pub fn contour_integrate_nested<H>(h: H, seq: &PulseSequence, opts: &QuadOptions) -> Result<QuadResult>
where
    H: Fn(&ContourPoint, &ContourPoint) -> f64,
{
    Contour::new(seq)?.integrate_nested(|p| Ok(*p), |a, b| h(a, b), opts)
}
