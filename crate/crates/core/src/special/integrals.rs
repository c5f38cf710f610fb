//! Incomplete-gamma integrals of the Wishart eigenvalue weight, Selberg's
//! Laguerre integral and the exponential-moment integral `K(v, theta)`.

use std::f64::consts::{LN_2, PI};

use super::gamma::{ln_factorial, ln_gamma, ln_incomplete_gamma, log_add_exp, multivariate_gamma_ln};
use super::quad::{integrate_breaks, QuadOptions};
use crate::error::{Error, Result};
use crate::sampling::WishartParams;

fn check_limits(function: &'static str, u: f64, v: f64) -> Result<()> {
    if !(u >= 0.0) || !(v >= u) || u.is_infinite() {
        return Err(Error::domain(function, format!("requires 0 <= u <= v, got u = {u}, v = {v}")));
    }
    Ok(())
}

/// Exponent `a + j - (m+1)/2` of `t` in the `j`-th weight.
fn weight_power(params: &WishartParams, j: usize) -> f64 {
    params.density_exponent() + j as f64
}

/// `F_{a+j}(u, v) = int_u^v t^{a+j-(m+1)/2} e^{-t/2} dt`, closed form through
/// incomplete gammas: `2^{s+1} [gamma(s+1, v/2) - gamma(s+1, u/2)]`.
pub fn f_single(params: &WishartParams, j: usize, u: f64, v: f64) -> Result<f64> {
    check_limits("f_single", u, v)?;
    if u == v {
        return Ok(0.0);
    }
    let shape = weight_power(params, j) + 1.0;
    // shape > 0 for every valid parameter set since a > (m-1)/2
    let (lo_u, up_u) = ln_incomplete_gamma(shape, 0.5 * u)?;
    let (lo_v, up_v) = ln_incomplete_gamma(shape, 0.5 * v)?;
    let scale = shape * LN_2;
    let ln_value = if 0.5 * u >= shape {
        // both limits in the upper tail: difference of upper gammas
        scale + up_u + (-(up_v - up_u).exp_m1()).ln()
    } else {
        scale + lo_v + (-(lo_u - lo_v).exp_m1()).ln()
    };
    Ok(ln_value.exp())
}

/// Point past which the `j`-th weight carries relative mass below `1e-17`.
fn tail_cutoff(params: &WishartParams, j: usize) -> Result<f64> {
    let shape = weight_power(params, j) + 1.0;
    let lg = ln_gamma(shape);
    let mut half = shape + 40.0;
    loop {
        let (_, up) = ln_incomplete_gamma(shape, half)?;
        if up - lg < -39.2 {
            return Ok(2.0 * half);
        }
        half *= 1.5;
    }
}

/// `F_{a+i,a+j}(u, v) = int_u^v t^{a+j-(m+1)/2} e^{-t/2} F_{a+i}(u, t) dt`.
///
/// Outer adaptive quadrature over the closed-form inner integral.
pub fn f_double(params: &WishartParams, i: usize, j: usize, u: f64, v: f64) -> Result<f64> {
    f_double_with(params, i, j, u, v, QuadOptions::default())
}

pub fn f_double_with(
    params: &WishartParams,
    i: usize,
    j: usize,
    u: f64,
    v: f64,
    opts: QuadOptions,
) -> Result<f64> {
    check_limits("f_double", u, v)?;
    if u == v {
        return Ok(0.0);
    }
    let power = weight_power(params, j);
    let upper = v.min(tail_cutoff(params, j)?.max(tail_cutoff(params, i)?));
    if upper <= u {
        return Ok(0.0);
    }
    let mut points = vec![u];
    for p in [1.0, 2.0 * (power + 1.0), 4.0 * (power + 1.0), 8.0 * (power + 1.0)] {
        if p > *points.last().unwrap() && p < upper {
            points.push(p);
        }
    }
    points.push(upper);
    let integrand = |t: f64| {
        let inner = f_single(params, i, u, t).unwrap_or(f64::NAN);
        if inner == 0.0 {
            return 0.0;
        }
        (power * t.ln() - 0.5 * t).exp() * inner
    };
    Ok(integrate_breaks(integrand, &points, opts)?.value)
}

/// `ln I_m(theta)` where
/// `I_m(theta) = (1-theta)^{-m[b+m]} prod_{j=1}^m j! Gamma(b + j)`, `b = (2a-m-1)(1-theta)`.
pub fn selberg_ln_i(params: &WishartParams, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::domain("selberg_I", format!("requires 0 < theta < 1, got {theta}")));
    }
    let m = params.m();
    let b = params.shifted_index() * (1.0 - theta);
    if !(b + 1.0 > 0.0) {
        return Err(Error::domain(
            "selberg_I",
            format!("requires (2a-m-1)(1-theta) + 1 > 0, got {}", b + 1.0),
        ));
    }
    let mf = m as f64;
    let head = -mf * (b + mf) * (1.0 - theta).ln();
    Ok(head + (1..=m).map(|j| ln_factorial(j) + ln_gamma(b + j as f64)).sum::<f64>())
}

/// Upper end `((2a-m-1) theta + 1) / 2` of the admissible `v` range at `theta`.
pub fn v_upper(params: &WishartParams, theta: f64) -> f64 {
    0.5 * (params.shifted_index() * theta + 1.0)
}

/// Whether `(v, theta)` lies in the open Chernoff domain.
pub fn in_chernoff_domain(params: &WishartParams, v: f64, theta: f64) -> bool {
    theta > 0.0 && theta < 1.0 && v >= 0.0 && v < v_upper(params, theta)
}

/// `ln K(v, theta)` where `K = int_0^inf lambda^{(2a-m-1) theta} exp(2v |ln lambda| - theta lambda) dlambda`.
///
/// Split at `lambda = 1`: with `s = (2a-m-1) theta`,
/// `K = theta^{-(s-2v+1)} gamma(s-2v+1, theta) + theta^{-(s+2v+1)} Gamma(s+2v+1, theta)`.
pub fn k_integral_ln(params: &WishartParams, v: f64, theta: f64) -> Result<f64> {
    if !in_chernoff_domain(params, v, theta) {
        return Err(Error::domain(
            "k_integral",
            format!(
                "(v, theta) = ({v}, {theta}) is outside the domain 0 <= v < {}, 0 < theta < 1; the integral diverges",
                v_upper(params, theta)
            ),
        ));
    }
    let s = params.shifted_index() * theta;
    let p = s - 2.0 * v + 1.0;
    let q = s + 2.0 * v + 1.0;
    let ln_theta = theta.ln();
    let (lower, _) = ln_incomplete_gamma(p, theta)?;
    let (_, upper) = ln_incomplete_gamma(q, theta)?;
    Ok(log_add_exp(-p * ln_theta + lower, -q * ln_theta + upper))
}

/// `ln c_m` with `c_m = pi^{m^2/2} / (2^{ma} m! Gamma_m(a) Gamma_m(m/2))`.
pub fn ln_normalizing_constant(params: &WishartParams) -> Result<f64> {
    let m = params.m();
    let mf = m as f64;
    Ok(0.5 * mf * mf * PI.ln()
        - mf * params.a() * LN_2
        - ln_factorial(m)
        - multivariate_gamma_ln(m, params.a())?
        - multivariate_gamma_ln(m, 0.5 * mf)?)
}
