//! Derivative-free minimization over the Chernoff domain
//! `D = {(v, theta): 0 <= v < ((2a-m-1) theta + 1)/2, theta in (lo, hi)}`.
//!
//! `D` is mapped to the open square through `theta = lo + (hi-lo) sigma(x)` and
//! `v = sigma(y) v_upper(theta)`. For fixed `x` the map `y -> v` is monotone,
//! and for fixed `y` the point `(v, theta)` moves along a straight line as `x`
//! varies, so a convex objective is unimodal along every coordinate line and
//! its partial minimum over `y` is unimodal in `x`. The minimizer runs golden
//! section in `x` over that partial minimum, itself found by golden section.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::WishartParams;
use crate::special::v_upper;

/// Probes keep `sigma` inside `[PROBE_EPS, 1 - PROBE_EPS]`.
pub const PROBE_EPS: f64 = 1e-9;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Admissible `theta` range. Equals `(0, 1)` unless `2a - m - 1 < -1`, when
/// `v_upper` and the Selberg integral each cut off part of the interval.
pub fn theta_interval(params: &WishartParams) -> (f64, f64) {
    let s = params.shifted_index();
    if s >= -1.0 {
        (0.0, 1.0)
    } else {
        (1.0 + 1.0 / s, -1.0 / s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainMinimum {
    pub v: f64,
    pub theta: f64,
    pub value: f64,
    pub evaluations: usize,
    /// The minimizer sits on a probe clamp, i.e. the infimum is approached
    /// at the edge of `D` (or at `v = 0`).
    pub at_boundary: bool,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct Probe<'a, F> {
    params: &'a WishartParams,
    objective: F,
    lo: f64,
    hi: f64,
    evaluations: usize,
}

impl<F: Fn(f64, f64) -> Result<f64>> Probe<'_, F> {
    fn point(&self, x: f64, y: f64) -> (f64, f64) {
        let theta = self.lo + (self.hi - self.lo) * logistic(x);
        (logistic(y) * v_upper(self.params, theta), theta)
    }

    fn eval(&mut self, x: f64, y: f64) -> Result<f64> {
        let (v, theta) = self.point(x, y);
        self.eval_at(v, theta)
    }

    fn eval_at(&mut self, v: f64, theta: f64) -> Result<f64> {
        self.evaluations += 1;
        let f = (self.objective)(v, theta)?;
        if !f.is_finite() {
            return Err(Error::NonFiniteObjective { v, theta });
        }
        Ok(f)
    }
}

/// Golden-section search for a unimodal `f` on `[a, b]`, returning the best
/// probe seen.
fn golden(mut f: impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64, width: f64) -> Result<(f64, f64)> {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let (fa, fb) = (f(a)?, f(b)?);
    let mut best = if fa <= fb { (a, fa) } else { (b, fb) };
    while b - a > width {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    Ok(best)
}

/// Minimizes `objective(v, theta)` over `D`. `tol` is the target relative
/// accuracy of the minimum value.
pub fn minimize_over_d<F>(params: &WishartParams, objective: F, tol: f64) -> Result<DomainMinimum>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("optimizer tolerance must be positive, got {tol}")));
    }
    let (lo, hi) = theta_interval(params);
    let edge = ((1.0 - PROBE_EPS) / PROBE_EPS).ln();
    let width = (1e-2 * tol.sqrt()).min(1e-5);
    let mut probe = Probe {
        params,
        objective,
        lo,
        hi,
        evaluations: 0,
    };

    let (x, _) = golden(
        |x| Ok(golden(|y| probe.eval(x, y), -edge, edge, width)?.1),
        -edge,
        edge,
        width,
    )?;
    let (y, _) = golden(|y| probe.eval(x, y), -edge, edge, width)?;
    let (mut v, mut theta) = probe.point(x, y);
    let mut value = probe.eval_at(v, theta)?;
    let near_edge = |z: f64| edge - z.abs() < 10.0 * width;
    let mut at_boundary = near_edge(x) || near_edge(y);

    // v = 0 is part of D but only approached by the probes
    let anchor_theta = 0.5 * (lo + hi);
    let anchor = probe.eval_at(0.0, anchor_theta)?;
    if anchor < value {
        v = 0.0;
        theta = anchor_theta;
        value = anchor;
        at_boundary = true;
    }
    Ok(DomainMinimum {
        v,
        theta,
        value,
        evaluations: probe.evaluations,
        at_boundary,
    })
}
