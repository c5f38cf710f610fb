//! The Hoffmann-Jorgensen inequality for the composition walk:
//!
//! `P(U_n > (n_circ-1) t_0 + (2 n_1 - 1) t_1 + 2 sum_{j>=2} n_j t_j)
//!   <= P(M_n > t_0) + [P(U_n <= t_1)]^{1 not in I0} prod_{j in I0} P(U_n > t_j)^{n_j}
//!      prod_{j not in I0} (1/n_j!) (P(U_n > t_j) / P(U_n <= t_j))^{n_j}`
//!
//! with `I0 = {i : P(U_n <= t_i)^{n_i - [i = 1]} <= 1/n_i!}`. Since `I0` depends
//! on the unknown law of `U_n`, membership is decided from probability bounds
//! and undecided indices are resolved by the worst case over both choices.

use serde::{Deserialize, Serialize};

use crate::bounds::{mn_tail_bound, un_cdf_bound, un_tail_bound, BoundReport};
use crate::error::{Error, Result};
use crate::mc::{estimate_from_sample, TailEstimate};
use crate::rng::RngStream;
use crate::sampling::{WalkStats, WishartParams};
use crate::special::ln_factorial;

/// At most this many undecided indices are resolved by enumeration.
pub const MAX_AMBIGUOUS: usize = 10;

const CONSISTENCY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHjConfig", into = "RawHjConfig")]
pub struct HjConfig {
    l: usize,
    n_list: Vec<usize>,
    t0: f64,
    t_list: Vec<f64>,
    n: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHjConfig {
    l: usize,
    n_list: Vec<usize>,
    t0: f64,
    t_list: Vec<f64>,
    n: usize,
}

impl TryFrom<RawHjConfig> for HjConfig {
    type Error = Error;
    fn try_from(r: RawHjConfig) -> Result<Self> {
        HjConfig::new(r.n_list, r.t0, r.t_list, r.n).and_then(|c| {
            if c.l == r.l {
                Ok(c)
            } else {
                Err(Error::Invalid(format!("l = {} but n_list has {} entries", r.l, c.l)))
            }
        })
    }
}

impl From<HjConfig> for RawHjConfig {
    fn from(c: HjConfig) -> Self {
        RawHjConfig {
            l: c.l,
            n_list: c.n_list,
            t0: c.t0,
            t_list: c.t_list,
            n: c.n,
        }
    }
}

impl HjConfig {
    pub fn new(n_list: Vec<usize>, t0: f64, t_list: Vec<f64>, n: usize) -> Result<Self> {
        let l = n_list.len();
        if l == 0 {
            return Err(Error::Invalid("hj config needs l >= 1".into()));
        }
        if t_list.len() != l {
            return Err(Error::Invalid(format!(
                "t_list has {} entries but n_list has {l}",
                t_list.len()
            )));
        }
        if n_list.contains(&0) {
            return Err(Error::Invalid("every n_j must be a positive integer".into()));
        }
        if n == 0 {
            return Err(Error::Invalid("walk length n must be at least 1".into()));
        }
        for &t in std::iter::once(&t0).chain(&t_list) {
            if !(t >= 0.0) || t.is_infinite() {
                return Err(Error::Invalid(format!("thresholds must be finite and nonnegative, got {t}")));
            }
        }
        let c = HjConfig {
            l,
            n_list,
            t0,
            t_list,
            n,
        };
        if c.n_circ() > n + 1 {
            return Err(Error::Invalid(format!(
                "n_1 + ... + n_l = {} exceeds n + 1 = {}",
                c.n_circ(),
                n + 1
            )));
        }
        Ok(c)
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n_list(&self) -> &[usize] {
        &self.n_list
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_list(&self) -> &[f64] {
        &self.t_list
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_circ(&self) -> usize {
        self.n_list.iter().sum()
    }

    /// `(n_circ - 1) t_0 + (2 n_1 - 1) t_1 + 2 sum_{j>=2} n_j t_j`.
    pub fn threshold(&self) -> f64 {
        let rest: f64 = self.n_list[1..]
            .iter()
            .zip(&self.t_list[1..])
            .map(|(&nj, &tj)| nj as f64 * tj)
            .sum();
        (self.n_circ() as f64 - 1.0) * self.t0 + (2.0 * self.n_list[0] as f64 - 1.0) * self.t_list[0] + 2.0 * rest
    }

    /// `n_i - [i = 1]` for 0-based `i`.
    fn membership_exponent(&self, i: usize) -> i32 {
        self.n_list[i] as i32 - i32::from(i == 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Analytic,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prob {
    pub value: f64,
    pub source: Source,
    /// What produced the value, e.g. `un_tail_bound(t = 5)`.
    pub origin: String,
}

impl Prob {
    pub fn new(value: f64, source: Source, origin: impl Into<String>) -> Self {
        Prob {
            value,
            source,
            origin: origin.into(),
        }
    }
}

/// Probability bounds entering the right-hand side; vectors are indexed by `j = 1..l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbInputs {
    pub pm_upper: Prob,
    /// Replaces `pm_upper` when present (order-statistic strengthening).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pm_strengthened: Option<Prob>,
    pub tail_upper: Vec<Prob>,
    pub cdf_upper: Vec<Prob>,
    pub cdf_lower: Vec<Prob>,
}

fn values(p: &[Prob]) -> Vec<f64> {
    p.iter().map(|x| x.value).collect()
}

impl ProbInputs {
    pub fn new(pm_upper: Prob, tail_upper: Vec<Prob>, cdf_upper: Vec<Prob>, cdf_lower: Vec<Prob>) -> Result<Self> {
        let p = ProbInputs {
            pm_upper,
            pm_strengthened: None,
            tail_upper,
            cdf_upper,
            cdf_lower,
        };
        p.validate()?;
        Ok(p)
    }

    /// Inputs with `cdf_lower = 1 - tail_upper`, all from one source.
    pub fn from_values(pm: f64, tail_upper: &[f64], cdf_upper: &[f64], source: Source) -> Result<Self> {
        let mk = |v: f64, what: &str| Prob::new(v, source, what);
        ProbInputs::new(
            mk(pm, "pM"),
            tail_upper.iter().map(|&v| mk(v, "tail")).collect(),
            cdf_upper.iter().map(|&v| mk(v, "cdf_upper")).collect(),
            tail_upper.iter().map(|&v| mk(1.0 - v, "1 - tail")).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.tail_upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tail_upper.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let l = self.tail_upper.len();
        if self.cdf_upper.len() != l || self.cdf_lower.len() != l {
            return Err(Error::Invalid(format!(
                "probability lists differ in length: tail {l}, cdf_upper {}, cdf_lower {}",
                self.cdf_upper.len(),
                self.cdf_lower.len()
            )));
        }
        let all = std::iter::once(&self.pm_upper)
            .chain(&self.pm_strengthened)
            .chain(&self.tail_upper)
            .chain(&self.cdf_upper)
            .chain(&self.cdf_lower);
        for p in all {
            if !(0.0..=1.0).contains(&p.value) {
                return Err(Error::Invalid(format!("probability {} ({}) outside [0, 1]", p.value, p.origin)));
            }
        }
        for j in 0..l {
            let (lo, hi, tail) = (self.cdf_lower[j].value, self.cdf_upper[j].value, self.tail_upper[j].value);
            if lo > hi + CONSISTENCY_TOL {
                return Err(Error::Invalid(format!(
                    "index {}: cdf lower bound {lo} exceeds cdf upper bound {hi}",
                    j + 1
                )));
            }
            if lo + tail < 1.0 - CONSISTENCY_TOL {
                return Err(Error::Invalid(format!(
                    "index {}: cdf lower bound {lo} plus tail bound {tail} is below 1",
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    In,
    Out,
    Ambiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RhsForm {
    /// Product over `I0` times product over its complement.
    ProductForm,
    /// All tails over one denominator.
    QuotientForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HjResult {
    pub config: HjConfig,
    pub threshold: f64,
    /// Right-hand side clamped to `[0, 1]`.
    pub rhs: f64,
    pub rhs_raw: f64,
    pub membership: Vec<Membership>,
    pub form: RhsForm,
    pub strengthened_term: Option<f64>,
    /// 1-based indices whose membership was resolved by the worst case.
    pub ambiguous: Vec<usize>,
    pub inputs: ProbInputs,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bound_reports: Vec<BoundReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Classifies each index using an upper and a lower bound on `P(U_n <= t_i)`.
pub fn i0_membership(config: &HjConfig, cdf_upper: &[f64], cdf_lower: &[f64]) -> Result<Vec<Membership>> {
    let l = config.l();
    if cdf_upper.len() != l || cdf_lower.len() != l {
        return Err(Error::Invalid(format!(
            "expected {l} cdf bounds, got {} upper and {} lower",
            cdf_upper.len(),
            cdf_lower.len()
        )));
    }
    (0..l)
        .map(|i| {
            let (hi, lo) = (cdf_upper[i], cdf_lower[i]);
            if !(0.0..=1.0).contains(&hi) || !(0.0..=1.0).contains(&lo) {
                return Err(Error::Invalid(format!("index {}: cdf bounds must lie in [0, 1]", i + 1)));
            }
            if lo > hi + CONSISTENCY_TOL {
                return Err(Error::Invalid(format!(
                    "index {}: cdf lower bound {lo} exceeds upper bound {hi}",
                    i + 1
                )));
            }
            let e = config.membership_exponent(i);
            let limit = (-ln_factorial(config.n_list()[i])).exp();
            Ok(if hi.powi(e) <= limit {
                Membership::In
            } else if lo.powi(e) > limit {
                Membership::Out
            } else {
                Membership::Ambiguous
            })
        })
        .collect()
}

fn check_inputs(config: &HjConfig, probs: &ProbInputs, membership: &[Membership]) -> Result<()> {
    probs.validate()?;
    if probs.len() != config.l() || membership.len() != config.l() {
        return Err(Error::Invalid(format!(
            "expected {} entries, got {} probabilities and {} memberships",
            config.l(),
            probs.len(),
            membership.len()
        )));
    }
    if membership.contains(&Membership::Ambiguous) {
        return Err(Error::Invalid(
            "membership has undecided entries; resolve them before evaluating the right-hand side".into(),
        ));
    }
    Ok(())
}

/// Unclamped right-hand side, or `None` when a denominator vanishes.
fn rhs_value(config: &HjConfig, probs: &ProbInputs, membership: &[Membership], form: RhsForm) -> Option<f64> {
    let pm = probs.pm_strengthened.as_ref().unwrap_or(&probs.pm_upper).value;
    let lead = if membership[0] == Membership::Out {
        probs.cdf_upper[0].value.min(1.0)
    } else {
        1.0
    };
    let n = config.n_list();
    let tail = |j: usize| probs.tail_upper[j].value;
    let lower = |j: usize| probs.cdf_lower[j].value;
    let out = |j: usize| membership[j] == Membership::Out;
    if (0..config.l()).any(|j| out(j) && lower(j) == 0.0) {
        return None;
    }
    let product = match form {
        RhsForm::ProductForm => (0..config.l())
            .map(|j| {
                let nj = n[j] as i32;
                if out(j) {
                    (-ln_factorial(n[j])).exp() * (tail(j) / lower(j)).powi(nj)
                } else {
                    tail(j).powi(nj)
                }
            })
            .product::<f64>(),
        RhsForm::QuotientForm => {
            let num: f64 = (0..config.l()).map(|j| tail(j).powi(n[j] as i32)).product();
            let den: f64 = (0..config.l())
                .filter(|&j| out(j))
                .map(|j| (ln_factorial(n[j])).exp() * lower(j).powi(n[j] as i32))
                .product();
            num / den
        }
    };
    Some(pm + lead * product)
}

/// Evaluates the right-hand side for a decided membership vector.
pub fn hj_rhs(config: &HjConfig, probs: &ProbInputs, membership: &[Membership]) -> Result<HjResult> {
    hj_rhs_in_form(config, probs, membership, RhsForm::ProductForm)
}

pub fn hj_rhs_in_form(
    config: &HjConfig,
    probs: &ProbInputs,
    membership: &[Membership],
    form: RhsForm,
) -> Result<HjResult> {
    check_inputs(config, probs, membership)?;
    let mut notes = Vec::new();
    let raw = match rhs_value(config, probs, membership, form) {
        Some(v) => v,
        None => {
            notes.push("a cdf lower bound in a denominator is 0; the bound degenerates to 1".into());
            f64::INFINITY
        }
    };
    Ok(HjResult {
        config: config.clone(),
        threshold: config.threshold(),
        rhs: raw.clamp(0.0, 1.0),
        rhs_raw: raw.min(f64::MAX),
        membership: membership.to_vec(),
        form,
        strengthened_term: probs.pm_strengthened.as_ref().map(|p| p.value),
        ambiguous: Vec::new(),
        inputs: probs.clone(),
        bound_reports: Vec::new(),
        notes,
    })
}

/// Classifies membership from `probs` and resolves undecided indices by the
/// maximum of the right-hand side over every assignment.
pub fn resolve_hj(config: &HjConfig, probs: &ProbInputs) -> Result<HjResult> {
    let membership = i0_membership(config, &values(&probs.cdf_upper), &values(&probs.cdf_lower))?;
    let ambiguous: Vec<usize> = (0..membership.len())
        .filter(|&j| membership[j] == Membership::Ambiguous)
        .collect();
    if ambiguous.len() > MAX_AMBIGUOUS {
        return Err(Error::Invalid(format!(
            "{} undecided indices exceed the enumeration cap of {MAX_AMBIGUOUS}",
            ambiguous.len()
        )));
    }
    let mut worst: Option<HjResult> = None;
    for mask in 0u32..(1 << ambiguous.len()) {
        let mut choice = membership.clone();
        for (bit, &j) in ambiguous.iter().enumerate() {
            choice[j] = if mask >> bit & 1 == 1 { Membership::Out } else { Membership::In };
        }
        let r = hj_rhs(config, probs, &choice)?;
        if worst.as_ref().is_none_or(|w| r.rhs_raw > w.rhs_raw) {
            worst = Some(r);
        }
    }
    let mut result = worst.expect("at least one assignment");
    if !ambiguous.is_empty() {
        result.notes.push(format!(
            "membership undecided at indices {:?}; reported the worst case over {} assignments",
            ambiguous.iter().map(|j| j + 1).collect::<Vec<_>>(),
            1 << ambiguous.len()
        ));
        result.membership = membership;
        result.ambiguous = ambiguous.iter().map(|j| j + 1).collect();
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CertifyOptions {
    /// Largest `j` in the CDF bound; defaults to 1 (the exact term).
    pub cdf_j_max: Option<usize>,
    pub mc_budget: Option<usize>,
    pub rng: Option<RngStream>,
}

/// Right-hand side built entirely from the analytic Wishart bounds.
pub fn certified_hj_bound(params: &WishartParams, config: &HjConfig) -> Result<HjResult> {
    certified_hj_bound_with(params, config, &CertifyOptions::default())
}

pub fn certified_hj_bound_with(params: &WishartParams, config: &HjConfig, opts: &CertifyOptions) -> Result<HjResult> {
    let n = config.n();
    let mut reports = Vec::new();
    let pm = mn_tail_bound(params, n, config.t0())?;
    let pm_prob = Prob::new(pm.clamped, Source::Analytic, format!("mn_tail_bound(t = {})", config.t0()));
    reports.push(pm);
    let mut notes = Vec::new();
    let cdf_available = params.require_positive_df().is_ok();
    if !cdf_available {
        notes.push("a <= (m+1)/2: the chi-squared CDF bound does not apply, cdf upper bounds set to 1".into());
    }
    let (mut tails, mut uppers, mut lowers) = (Vec::new(), Vec::new(), Vec::new());
    for &t in config.t_list() {
        let tail = un_tail_bound(params, n, t)?;
        let tail_value = tail.clamped;
        tails.push(Prob::new(tail.clamped, Source::Analytic, format!("un_tail_bound(t = {t})")));
        lowers.push(Prob::new(1.0 - tail.clamped, Source::Analytic, format!("1 - un_tail_bound(t = {t})")));
        reports.push(tail);
        if cdf_available {
            let j_max = opts.cdf_j_max.unwrap_or(1).min(n);
            let cdf = un_cdf_bound(params, n, t, j_max, opts.mc_budget, opts.rng)?;
            // both are upper bounds on the same CDF; the analytic lower bound may not exceed it
            let value = cdf.clamped.max(1.0 - tail_value);
            uppers.push(Prob::new(value, Source::Analytic, format!("un_cdf_bound(t = {t})")));
            reports.push(cdf);
        } else {
            uppers.push(Prob::new(1.0, Source::Analytic, "trivial"));
        }
    }
    let probs = ProbInputs::new(pm_prob, tails, uppers, lowers)?;
    let mut result = resolve_hj(config, &probs)?;
    result.bound_reports = reports;
    result.notes.extend(notes);
    Ok(result)
}

/// Monte Carlo estimates of the order-statistic term
/// `P(sum of the top n_circ - 1 step distances > (n_circ - 1) t_0)` and of
/// the plain `P(M_n > t_0)` on the same ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrengthenedTerm {
    pub strengthened: TailEstimate,
    pub plain: TailEstimate,
}

pub fn strengthened_m_term(stats: &[WalkStats], config: &HjConfig, seed: Option<RngStream>) -> Result<StrengthenedTerm> {
    let k = config.n_circ() - 1;
    if let Some(short) = stats.iter().find(|s| s.len() < k) {
        return Err(Error::Invalid(format!(
            "walk of length {} has fewer than n_circ - 1 = {k} steps",
            short.len()
        )));
    }
    let level = k as f64 * config.t0();
    let strengthened = estimate_from_sample(
        stats,
        |s| {
            let top: f64 = s.order_stats[s.len() - k..].iter().sum();
            top > level
        },
        seed,
    );
    let plain = estimate_from_sample(stats, |s| s.mn > config.t0(), seed);
    Ok(StrengthenedTerm { strengthened, plain })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n_list: Vec<usize>, t0: f64, t_list: Vec<f64>, n: usize) -> HjConfig {
        HjConfig::new(n_list, t0, t_list, n).unwrap()
    }

    #[test]
    fn threshold_formula() {
        let c = cfg(vec![2, 1, 3], 1.0, vec![0.5, 2.0, 1.5], 6);
        assert_eq!(c.n_circ(), 6);
        assert_eq!(c.threshold(), 5.0 + 3.0 * 0.5 + 2.0 * (2.0 + 4.5));
    }

    #[test]
    fn n_circ_limit() {
        assert!(HjConfig::new(vec![3, 3], 1.0, vec![1.0, 1.0], 4).is_err());
        assert!(HjConfig::new(vec![3, 2], 1.0, vec![1.0, 1.0], 4).is_ok());
    }

    #[test]
    fn classical_shape_is_all_in() {
        let c = cfg(vec![1, 1], 2.0, vec![3.0, 3.0], 4);
        for (hi, lo) in [(1.0, 1.0), (0.3, 0.1), (0.0, 0.0)] {
            assert_eq!(i0_membership(&c, &[hi, hi], &[lo, lo]).unwrap(), vec![Membership::In; 2]);
        }
    }

    #[test]
    fn membership_arithmetic() {
        let c = cfg(vec![1, 3], 1.0, vec![1.0, 1.0], 4);
        assert_eq!(i0_membership(&c, &[1.0, 1.0], &[1.0, 1.0]).unwrap()[1], Membership::Out);
        let c = cfg(vec![1, 2], 1.0, vec![1.0, 1.0], 4);
        assert_eq!(
            i0_membership(&c, &[1.0, 0.8], &[1.0, 0.6]).unwrap()[1],
            Membership::Ambiguous
        );
        assert!(i0_membership(&c, &[1.0, 0.6], &[1.0, 0.8]).is_err());
        assert!(i0_membership(&c, &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn classical_rhs() {
        let c = cfg(vec![1, 1], 2.0, vec![3.0, 3.0], 4);
        let p = ProbInputs::from_values(0.1, &[0.2, 0.2], &[0.9, 0.9], Source::Analytic).unwrap();
        let r = resolve_hj(&c, &p).unwrap();
        assert!((r.rhs - (0.1 + 0.04)).abs() < 1e-15);
        assert_eq!(r.threshold, 2.0 + 9.0);
        let zero = ProbInputs::from_values(0.1, &[0.0, 0.0], &[1.0, 1.0], Source::Analytic).unwrap();
        assert_eq!(resolve_hj(&c, &zero).unwrap().rhs, 0.1);
    }

    #[test]
    fn forms_agree() {
        let c = cfg(vec![2, 3, 1], 0.5, vec![1.0, 2.0, 3.0], 6);
        let p = ProbInputs::from_values(0.05, &[0.3, 0.4, 0.1], &[0.8, 0.7, 0.95], Source::Empirical).unwrap();
        let mem = [Membership::Out, Membership::Out, Membership::In];
        let a = hj_rhs_in_form(&c, &p, &mem, RhsForm::ProductForm).unwrap();
        let b = hj_rhs_in_form(&c, &p, &mem, RhsForm::QuotientForm).unwrap();
        assert!((a.rhs_raw - b.rhs_raw).abs() < 1e-15);
    }

    #[test]
    fn ambiguous_rejected_by_rhs() {
        let c = cfg(vec![1, 2], 1.0, vec![1.0, 1.0], 4);
        let p = ProbInputs::from_values(0.0, &[0.2, 0.2], &[0.9, 0.9], Source::Analytic).unwrap();
        assert!(hj_rhs(&c, &p, &[Membership::In, Membership::Ambiguous]).is_err());
    }

    #[test]
    fn zero_denominator_degenerates() {
        let c = cfg(vec![1, 3], 1.0, vec![1.0, 1.0], 4);
        let p = ProbInputs::from_values(0.0, &[0.2, 1.0], &[1.0, 1.0], Source::Analytic).unwrap();
        let r = hj_rhs(&c, &p, &[Membership::In, Membership::Out]).unwrap();
        assert_eq!(r.rhs, 1.0);
        assert!(!r.notes.is_empty());
    }

    #[test]
    fn order_statistic_term_edges() {
        let s = vec![
            WalkStats::from_distances(vec![1.0, 3.0, 2.0], vec![1.0, 2.0, 4.0]),
            WalkStats::from_distances(vec![0.5, 0.7, 0.2], vec![0.5, 0.9, 1.0]),
        ];
        let c1 = cfg(vec![1], 0.0, vec![1.0], 3);
        assert_eq!(strengthened_m_term(&s, &c1, None).unwrap().strengthened.p_hat, 0.0);
        let c2 = cfg(vec![1, 1], 1.0, vec![1.0, 1.0], 3);
        let r = strengthened_m_term(&s, &c2, None).unwrap();
        assert_eq!(r.strengthened.successes, r.plain.successes);
    }
}
