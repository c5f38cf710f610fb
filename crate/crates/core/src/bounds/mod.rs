//! Explicit Wishart bounds on the walk functionals: the eigenvalue-band bound
//! on `P(M_n > t)`, the Chernoff bound on `P(U_n > t)` with its geometric-sum
//! refinement, and the chi-squared product bound on `P(U_n <= t)`.

mod chernoff;
mod optimize;

pub use chernoff::{
    chernoff_eval, chernoff_objective, geometric_objective, geometric_sum, ln_geometric_sum, un_tail_bound,
    un_tail_bound_geometric, ChernoffEval, CHERNOFF_TOL,
};
pub use optimize::{minimize_over_d, theta_interval, DomainMinimum, PROBE_EPS};

use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::{chunked_fold, wilson_interval, MIN_SAMPLES};
use crate::rng::RngStream;
use crate::sampling::WishartParams;
use crate::special::{chi_squared_cdf, eigen_band_probability};

/// Quantile used to inflate Monte Carlo terms of the CDF bound.
pub const CDF_MC_Z: f64 = 3.0;

/// Largest `t / sqrt(m)` used for the eigenvalue band; wider bands would
/// underflow `e^{-t/sqrt(m)}`. Narrowing the band only loosens the bound.
const MAX_BAND_LOG: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundName {
    MnTail,
    UnTail,
    UnTailGeometric,
    UnCdf,
}

impl BoundName {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundName::MnTail => "mn_tail",
            BoundName::UnTail => "un_tail",
            BoundName::UnTailGeometric => "un_tail_geometric",
            BoundName::UnCdf => "un_cdf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mn_tail" => Ok(BoundName::MnTail),
            "un_tail" => Ok(BoundName::UnTail),
            "un_tail_geometric" => Ok(BoundName::UnTailGeometric),
            "un_cdf" => Ok(BoundName::UnCdf),
            _ => Err(Error::Parse(format!(
                "unknown bound `{s}` (expected mn_tail, un_tail, un_tail_geometric or un_cdf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundStatus {
    Converged,
    Boundary,
    ClampedOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minimizer {
    pub v: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_name: BoundName,
    pub params: WishartParams,
    pub n: usize,
    pub t: f64,
    /// Unclamped bound; may exceed 1.
    pub raw: f64,
    /// `min(raw, 1)`.
    pub clamped: f64,
    pub minimizer: Option<Minimizer>,
    pub evaluations: usize,
    pub status: BoundStatus,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BoundReport {
    fn new(bound_name: BoundName, params: &WishartParams, n: usize, t: f64, raw: f64) -> Self {
        let raw = raw.min(f64::MAX);
        BoundReport {
            bound_name,
            params: *params,
            n,
            t,
            raw,
            clamped: raw.min(1.0),
            minimizer: None,
            evaluations: 0,
            status: if raw > 1.0 { BoundStatus::ClampedOnly } else { BoundStatus::Converged },
            notes: Vec::new(),
        }
    }
}

pub(crate) fn check_walk_args(bound: &'static str, n: usize, t: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain(bound, "walk length n must be at least 1"));
    }
    if !(t >= 0.0) || t.is_infinite() {
        return Err(Error::domain(bound, format!("threshold t must be finite and nonnegative, got {t}")));
    }
    Ok(())
}

/// `P(M_n > t) <= 1 - [m! c_m rho_m(e^{-t/sqrt m}, e^{t/sqrt m})]^n`.
pub fn mn_tail_bound(params: &WishartParams, n: usize, t: f64) -> Result<BoundReport> {
    const NAME: &str = "mn_tail_bound";
    check_walk_args(NAME, n, t)?;
    let mut half_width = t / (params.m() as f64).sqrt();
    let mut notes = Vec::new();
    if half_width > MAX_BAND_LOG {
        notes.push(format!("eigenvalue band capped at |log lambda| <= {MAX_BAND_LOG}"));
        half_width = MAX_BAND_LOG;
    }
    let band = eigen_band_probability(params, (-half_width).exp(), half_width.exp()).map_err(|e| e.in_bound(NAME))?;
    let p = band.probability.clamp(0.0, 1.0);
    // adding 0.0 maps -0.0 to 0.0
    let raw = if p == 0.0 { 1.0 } else { (-(n as f64 * p.ln()).exp_m1()).max(0.0) + 0.0 };
    let mut report = BoundReport::new(BoundName::MnTail, params, n, t, raw);
    report.notes = notes;
    Ok(report)
}

/// The chi-squared law with `(2a - m - 1) m` degrees of freedom that is
/// stochastically dominated by `m det(X)^{1/m}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareLaw {
    pub df: f64,
}

impl ChiSquareLaw {
    pub fn new(params: &WishartParams) -> Result<Self> {
        params.require_positive_df()?;
        Ok(ChiSquareLaw {
            df: params.chi_square_df(),
        })
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        chi_squared_cdf(self.df, x)
    }

    fn sampler(&self) -> Gamma<f64> {
        Gamma::new(0.5 * self.df, 2.0).expect("positive degrees of freedom")
    }
}

/// `P(U_n <= t) <= min_{j <= j_max} P(R_1 ... R_j <= m^j e^{t/sqrt m})` with
/// `R_i` i.i.d. chi-squared.
///
/// The `j = 1` term is exact. Terms with `j >= 2` are Monte Carlo frequencies
/// over `mc_budget` draws of `sum log R_i`, replaced by their Wilson upper
/// limit at `z = 3`; without a budget only `j = 1` is used.
pub fn un_cdf_bound(
    params: &WishartParams,
    n: usize,
    t: f64,
    j_max: usize,
    mc_budget: Option<usize>,
    rng: Option<RngStream>,
) -> Result<BoundReport> {
    const NAME: &str = "un_cdf_bound";
    check_walk_args(NAME, n, t)?;
    if j_max == 0 || j_max > n {
        return Err(Error::domain(NAME, format!("requires 1 <= j_max <= n = {n}, got {j_max}")));
    }
    let law = ChiSquareLaw::new(params)?;
    let m = params.m() as f64;
    let log_level = t / m.sqrt();
    let first = law.cdf((m.ln() + log_level).exp()).map_err(|e| e.in_bound(NAME))?;
    let mut notes = vec![format!(
        "requires a > (m+1)/2 (degrees of freedom {} > 0), stricter than the density condition a > (m-1)/2",
        law.df
    )];
    let mut best = (1, first);

    if let Some(budget) = mc_budget.filter(|_| j_max >= 2) {
        if budget < MIN_SAMPLES {
            return Err(Error::domain(NAME, format!("Monte Carlo budget must be at least {MIN_SAMPLES}, got {budget}")));
        }
        let stream = rng.ok_or_else(|| Error::domain(NAME, "a Monte Carlo budget needs an RngStream"))?;
        let gamma = law.sampler();
        let counts = chunked_fold(
            budget,
            stream,
            || vec![0usize; j_max + 1],
            |acc, r| {
                let mut log_prod = 0.0;
                for j in 1..=j_max {
                    log_prod += gamma.sample(r).ln();
                    if log_prod <= j as f64 * m.ln() + log_level {
                        acc[j] += 1;
                    }
                }
                Ok(())
            },
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )?;
        for (j, &c) in counts.iter().enumerate().skip(2) {
            let upper = wilson_interval(c, budget, CDF_MC_Z).1;
            if upper < best.1 {
                best = (j, upper);
            }
        }
        notes.push(format!(
            "terms j >= 2 from {budget} Monte Carlo draws, inflated to the z = {CDF_MC_Z} Wilson upper limit"
        ));
    }
    notes.push(format!("minimum attained at j = {}", best.0));
    let mut report = BoundReport::new(BoundName::UnCdf, params, n, t, best.1);
    report.notes = notes;
    Ok(report)
}
