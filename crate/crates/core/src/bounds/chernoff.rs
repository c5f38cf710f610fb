use serde::{Deserialize, Serialize};

use super::optimize::{minimize_over_d, DomainMinimum};
use super::{check_walk_args, BoundName, BoundReport, BoundStatus, Minimizer};
use crate::error::{Error, Result};
use crate::sampling::WishartParams;
use crate::special::{in_chernoff_domain, k_integral_ln, ln_normalizing_constant, selberg_ln_i, v_upper};

/// Relative accuracy requested from the optimizer for the Chernoff bounds.
pub const CHERNOFF_TOL: f64 = 1e-8;

/// The pieces of the moment bound `xi_1(v) <= c_m I_m(theta)^{1/2} K(v, theta)^{m/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffEval {
    pub v: f64,
    pub theta: f64,
    pub log_c_m: f64,
    pub log_i_m: f64,
    pub log_k: f64,
    /// `log c_m + log I_m / 2 + (m/2) log K`.
    pub log_xi1_upper: f64,
    /// `2 log c_m + log I_m + m log K`.
    pub g: f64,
}

pub fn chernoff_eval(params: &WishartParams, v: f64, theta: f64) -> Result<ChernoffEval> {
    eval_with(params, ln_normalizing_constant(params)?, v, theta)
}

fn eval_with(params: &WishartParams, log_c_m: f64, v: f64, theta: f64) -> Result<ChernoffEval> {
    if !in_chernoff_domain(params, v, theta) {
        return Err(Error::domain(
            "chernoff_objective",
            format!(
                "(v, theta) = ({v}, {theta}) outside D: need 0 <= v < {} and 0 < theta < 1",
                v_upper(params, theta)
            ),
        ));
    }
    let log_i_m = selberg_ln_i(params, theta)?;
    let log_k = k_integral_ln(params, v, theta)?;
    let m = params.m() as f64;
    let log_xi1_upper = log_c_m + 0.5 * log_i_m + 0.5 * m * log_k;
    Ok(ChernoffEval {
        v,
        theta,
        log_c_m,
        log_i_m,
        log_k,
        log_xi1_upper,
        g: 2.0 * log_xi1_upper,
    })
}

/// `-v t + n G(v, theta) / 2`.
pub fn chernoff_objective(params: &WishartParams, n: usize, t: f64, v: f64, theta: f64) -> Result<f64> {
    Ok(-v * t + 0.5 * n as f64 * chernoff_eval(params, v, theta)?.g)
}

/// `sum_{j=1}^n b^j = (b^{n+1} - 1)/(b - 1) - 1`, equal to `n` in the limit
/// `|b - 1| < 1e-12`.
pub fn geometric_sum(b: f64, n: usize) -> f64 {
    if (b - 1.0).abs() < 1e-12 {
        return n as f64;
    }
    (b.powi(n as i32 + 1) - 1.0) / (b - 1.0) - 1.0
}

/// `log sum_{j=1}^n e^{j L}` without overflow.
pub fn ln_geometric_sum(ln_b: f64, n: usize) -> f64 {
    let nf = n as f64;
    if ln_b.abs() < 1e-12 {
        return nf.ln() + 0.5 * (nf + 1.0) * ln_b;
    }
    if ln_b > 0.0 {
        nf * ln_b + (-(-nf * ln_b).exp_m1()).ln() - (-(-ln_b).exp_m1()).ln()
    } else {
        ln_b + (-(nf * ln_b).exp_m1()).ln() - (-ln_b.exp_m1()).ln()
    }
}

/// `-v t + log sum_{j=1}^n B^j` with `log B = G / 2`.
pub fn geometric_objective(params: &WishartParams, n: usize, t: f64, v: f64, theta: f64) -> Result<f64> {
    Ok(-v * t + ln_geometric_sum(chernoff_eval(params, v, theta)?.log_xi1_upper, n))
}

fn report_from(
    name: BoundName,
    params: &WishartParams,
    n: usize,
    t: f64,
    raw: f64,
    min: &DomainMinimum,
) -> BoundReport {
    let mut report = BoundReport::new(name, params, n, t, raw);
    report.minimizer = Some(Minimizer {
        v: min.v,
        theta: min.theta,
    });
    report.evaluations = min.evaluations;
    if report.status != BoundStatus::ClampedOnly && min.at_boundary {
        report.status = BoundStatus::Boundary;
    }
    report
}

/// `P(U_n > t) <= n exp(inf_D [-v t + n G(v, theta)/2])`.
pub fn un_tail_bound(params: &WishartParams, n: usize, t: f64) -> Result<BoundReport> {
    const NAME: &str = "un_tail_bound";
    check_walk_args(NAME, n, t)?;
    let log_c = ln_normalizing_constant(params)?;
    let half_n = 0.5 * n as f64;
    let min = minimize_over_d(params, |v, th| Ok(-v * t + half_n * eval_with(params, log_c, v, th)?.g), CHERNOFF_TOL)
        .map_err(|e| e.in_bound(NAME))?;
    let raw = ((n as f64).ln() + min.value).exp();
    Ok(report_from(BoundName::UnTail, params, n, t, raw, &min))
}

/// `P(U_n > t) <= inf_D e^{-v t} sum_{j=1}^n B(v, theta)^j`, the geometric-sum
/// refinement of [`un_tail_bound`].
pub fn un_tail_bound_geometric(params: &WishartParams, n: usize, t: f64) -> Result<BoundReport> {
    const NAME: &str = "un_tail_bound_geometric";
    check_walk_args(NAME, n, t)?;
    let log_c = ln_normalizing_constant(params)?;
    let min = minimize_over_d(
        params,
        |v, th| Ok(-v * t + ln_geometric_sum(eval_with(params, log_c, v, th)?.log_xi1_upper, n)),
        CHERNOFF_TOL,
    )
    .map_err(|e| e.in_bound(NAME))?;
    Ok(report_from(BoundName::UnTailGeometric, params, n, t, min.value.exp(), &min))
}
