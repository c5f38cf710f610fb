use std::fmt::Write as _;

use serde::Serialize;

use super::{chunked_map, estimate_from_sample, ks_two_sample, simulate_walks, TailEstimate};
use crate::bounds::{mn_tail_bound, un_cdf_bound, un_tail_bound, un_tail_bound_geometric, BoundName, BoundReport};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sampling::{walk_statistics, WalkStats, WishartParams, WishartSampler};
use crate::spd::{compose, riemannian_distance, SpdMatrix};

/// Pre-registered KS level.
pub const KS_LEVEL: f64 = 0.01;

pub const MIN_SUITE_SAMPLES: usize = 10_000;

fn require_suite_budget(n: usize) -> Result<()> {
    if n < MIN_SUITE_SAMPLES {
        return Err(Error::Invalid(format!(
            "suite needs at least {MIN_SUITE_SAMPLES} samples, got {n}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsComparison {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
    /// Whether the two laws are supposed to agree.
    pub expect_equal: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub params: WishartParams,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: RngStream,
    pub comparisons: Vec<KsComparison>,
    /// `max |d_R(X o A, X o B) - d_R(A, B)|` over shared triples; zero up to
    /// roundoff because `X o .` is a congruence.
    pub left_congruence_max_diff: f64,
    pub passed: bool,
}

fn compare(name: &str, x: &[f64], y: &[f64], expect_equal: bool) -> Result<KsComparison> {
    let ks = ks_two_sample(x, y)?;
    let agrees = ks.p_value >= KS_LEVEL;
    Ok(KsComparison {
        name: name.into(),
        statistic: ks.statistic,
        p_value: ks.p_value,
        n1: ks.n1,
        n2: ks.n2,
        expect_equal,
        passed: agrees == expect_equal,
    })
}

/// Distributional identities of the composition, tested through the scalar
/// observable `d_R(I, .)` on independent ensembles.
///
/// The commutativity and associativity comparisons use factors with distinct
/// indices `a, a+1, a+2`; with identically distributed factors the
/// commutativity comparison would hold by relabelling alone.
pub fn invariance_suite(params: WishartParams, n: usize, rng: RngStream) -> Result<InvarianceReport> {
    require_suite_budget(n)?;
    let m = params.m();
    let a = params.a();
    let samplers: Vec<WishartSampler> = (0..3)
        .map(|i| WishartParams::new(m, a + i as f64).map(WishartSampler::new))
        .collect::<Result<_>>()?;
    let base = WishartSampler::new(params);
    let triple = |r: &mut rand_chacha::ChaCha8Rng| {
        let x: Vec<SpdMatrix> = samplers.iter().map(|s| s.sample(r)).collect();
        x
    };
    let dist_id = |x: &SpdMatrix| x.distance_from_identity();

    let ordered = chunked_map(n, rng.derive(1), |r| {
        let x = triple(r);
        Ok(dist_id(&compose(&compose(&x[0], &x[1])?, &x[2])?))
    })?;
    let permuted = chunked_map(n, rng.derive(2), |r| {
        let x = triple(r);
        Ok(dist_id(&compose(&compose(&x[2], &x[0])?, &x[1])?))
    })?;
    let right_nested = chunked_map(n, rng.derive(3), |r| {
        let x = triple(r);
        Ok(dist_id(&compose(&x[0], &compose(&x[1], &x[2])?)?))
    })?;

    let draw3 = |r: &mut rand_chacha::ChaCha8Rng| (base.sample(r), base.sample(r), base.sample(r));
    let left = chunked_map(n, rng.derive(4), |r| {
        let (a, b, x) = draw3(r);
        riemannian_distance(&compose(&x, &a)?, &compose(&x, &b)?)
    })?;
    let plain = chunked_map(n, rng.derive(5), |r| {
        let (a, b, _) = draw3(r);
        riemannian_distance(&a, &b)
    })?;
    let right = chunked_map(n, rng.derive(6), |r| {
        let (a, b, x) = draw3(r);
        riemannian_distance(&compose(&a, &x)?, &compose(&b, &x)?)
    })?;

    let single = chunked_map(n, rng.derive(7), |r| Ok(dist_id(&base.sample(r))))?;
    let double = chunked_map(n, rng.derive(8), |r| {
        let x1 = base.sample(r);
        let x2 = base.sample(r);
        Ok(dist_id(&compose(&x1, &x2)?))
    })?;

    let shared = chunked_map(n.min(2000), rng.derive(9), |r| {
        let (a, b, x) = draw3(r);
        let d = riemannian_distance(&a, &b)?;
        Ok((riemannian_distance(&compose(&x, &a)?, &compose(&x, &b)?)? - d).abs() / (1.0 + d))
    })?;
    let left_congruence_max_diff = shared.into_iter().fold(0.0, f64::max);

    let comparisons = vec![
        compare("commutativity: (X1 o X2) o X3 vs (X3 o X1) o X2", &ordered, &permuted, true)?,
        compare("associativity: (X1 o X2) o X3 vs X1 o (X2 o X3)", &ordered, &right_nested, true)?,
        compare("metric invariance: d(X o A, X o B) vs d(A, B)", &left, &plain, true)?,
        compare("metric invariance: d(A, B) vs d(A o X, B o X)", &plain, &right, true)?,
        compare("metric invariance: d(X o A, X o B) vs d(A o X, B o X)", &left, &right, true)?,
        compare("negative control: d(I, X1) vs d(I, X1 o X2)", &single, &double, false)?,
    ];
    let passed = comparisons.iter().all(|c| c.passed) && left_congruence_max_diff <= 1e-8;
    Ok(InvarianceReport {
        params,
        n,
        seed: rng,
        comparisons,
        left_congruence_max_diff,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanCheck {
    pub step: usize,
    pub row: usize,
    pub col: usize,
    pub sample_mean: f64,
    pub expected: f64,
    pub std_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovCheck {
    pub functional: &'static str,
    pub t: f64,
    pub p_hat: f64,
    pub markov_bound: f64,
    pub sigma: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub params: WishartParams,
    pub n: usize,
    #[serde(rename = "N")]
    pub samples: usize,
    pub seed: RngStream,
    pub monotonicity_violations: usize,
    pub mean_checks: Vec<MeanCheck>,
    pub markov_checks: Vec<MarkovCheck>,
    pub passed: bool,
}

fn mean_and_se(xs: impl Iterator<Item = f64> + Clone, count: usize) -> (f64, f64) {
    let nf = count as f64;
    let mean = xs.clone().sum::<f64>() / nf;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

fn prefix_max_violations(xs: &[f64]) -> usize {
    let mut running = 0.0;
    let mut bad = 0;
    for k in 1..=xs.len() {
        let next = xs[..k].iter().copied().fold(0.0, f64::max);
        if next < running {
            bad += 1;
        }
        running = next;
    }
    bad
}

/// Growth of `E(S_j) = (2a)^j I` (entrywise, 4 standard errors), per-path
/// monotonicity of `M_j` and `U_j`, and Markov's inequality for `M_n`, `U_n`
/// (3 standard errors).
pub fn martingale_suite(params: WishartParams, n: usize, samples: usize, rng: RngStream) -> Result<MartingaleReport> {
    require_suite_budget(samples)?;
    let m = params.m();
    let walks = simulate_walks(params, n, samples, rng, |path| {
        let entries: Vec<Vec<f64>> = path.partials.iter().map(|s| s.as_matrix().iter().copied().collect()).collect();
        (walk_statistics(&path), entries)
    })?;

    let mut monotonicity_violations = 0;
    for (stats, _) in &walks {
        monotonicity_violations += prefix_max_violations(&stats.step_dists) + prefix_max_violations(&stats.partial_dists);
        for k in 1..stats.len() {
            let (p, q) = (stats.prefix(k), stats.prefix(k + 1));
            monotonicity_violations += usize::from(q.mn < p.mn) + usize::from(q.un < p.un);
        }
    }

    let growth = 2.0 * params.a();
    let mut mean_checks = Vec::new();
    for step in 0..n {
        for row in 0..m {
            for col in row..m {
                let idx = col * m + row;
                let (mean, se) = mean_and_se(walks.iter().map(|(_, e)| e[step][idx]), samples);
                let expected = if row == col { growth.powi(step as i32 + 1) } else { 0.0 };
                mean_checks.push(MeanCheck {
                    step: step + 1,
                    row,
                    col,
                    sample_mean: mean,
                    expected,
                    std_error: se,
                    passed: (mean - expected).abs() <= 4.0 * se,
                });
            }
        }
    }

    let mut markov_checks = Vec::new();
    for (name, get) in [("M_n", (|s: &WalkStats| s.mn) as fn(&WalkStats) -> f64), ("U_n", |s: &WalkStats| s.un)] {
        let (mean, se) = mean_and_se(walks.iter().map(|(s, _)| get(s)), samples);
        for factor in [1.25, 1.5, 2.0, 3.0, 5.0] {
            let t = factor * mean;
            let est = TailEstimate::from_counts(walks.iter().filter(|(s, _)| get(s) >= t).count(), samples, Some(rng));
            let sigma = (est.sigma().powi(2) + (se / t).powi(2)).sqrt();
            markov_checks.push(MarkovCheck {
                functional: name,
                t,
                p_hat: est.p_hat,
                markov_bound: mean / t,
                sigma,
                passed: est.p_hat <= mean / t + 3.0 * sigma,
            });
        }
    }
    let passed = monotonicity_violations == 0
        && mean_checks.iter().all(|c| c.passed)
        && markov_checks.iter().all(|c| c.passed);
    Ok(MartingaleReport {
        params,
        n,
        samples,
        seed: rng,
        monotonicity_violations,
        mean_checks,
        markov_checks,
        passed,
    })
}

pub const DOMINATION_CSV_HEADER: &str = "t,p_hat,ci_low,ci_high,bound_raw,bound_clamped,bound_name,seed,N";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationRow {
    pub t: f64,
    pub bound_name: BoundName,
    pub estimate: TailEstimate,
    pub bound_raw: f64,
    pub bound_clamped: f64,
    /// `bound_clamped < p_hat - 3 sigma`.
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationReport {
    pub params: WishartParams,
    pub n: usize,
    #[serde(rename = "N")]
    pub samples: usize,
    pub seed: RngStream,
    pub rows: Vec<DominationRow>,
    pub reports: Vec<BoundReport>,
    pub violations: usize,
    /// Grid points where the geometric refinement came out above the plain bound.
    pub geometric_above_plain: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub passed: bool,
}

impl DominationReport {
    /// CSV with columns `t,p_hat,ci_low,ci_high,bound_raw,bound_clamped,bound_name,seed,N`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(DOMINATION_CSV_HEADER);
        out.push('\n');
        self.write_csv_rows(&mut out);
        out
    }

    pub fn write_csv_rows(&self, out: &mut String) {
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.t,
                r.estimate.p_hat,
                r.estimate.ci_low,
                r.estimate.ci_high,
                r.bound_raw,
                r.bound_clamped,
                r.bound_name.as_str(),
                self.seed.seed,
                r.estimate.n
            );
        }
    }
}

/// Which bounds `domination_suite` checks.
#[derive(Debug, Clone, PartialEq)]
pub struct DominationOptions {
    pub bounds: Vec<BoundName>,
    /// Largest `j` in the CDF bound; `None` uses `n`.
    pub cdf_j_max: Option<usize>,
}

impl Default for DominationOptions {
    fn default() -> Self {
        DominationOptions {
            bounds: vec![BoundName::MnTail, BoundName::UnTail, BoundName::UnTailGeometric, BoundName::UnCdf],
            cdf_j_max: None,
        }
    }
}

/// Compares every selected bound with the empirical probability of its event
/// on a fresh ensemble of `samples` walks.
pub fn domination_suite(
    params: WishartParams,
    n: usize,
    t_grid: &[f64],
    samples: usize,
    rng: RngStream,
) -> Result<DominationReport> {
    domination_suite_with(params, n, t_grid, samples, rng, &DominationOptions::default())
}

pub fn domination_suite_with(
    params: WishartParams,
    n: usize,
    t_grid: &[f64],
    samples: usize,
    rng: RngStream,
    opts: &DominationOptions,
) -> Result<DominationReport> {
    let stats = simulate_walks(params, n, samples, rng.derive(0), |p| walk_statistics(&p))?;
    domination_from_ensemble(params, n, t_grid, &stats, rng, opts)
}

/// As [`domination_suite_with`] on an existing ensemble; walks longer than
/// `n` are truncated to their first `n` steps.
pub fn domination_from_ensemble(
    params: WishartParams,
    n: usize,
    t_grid: &[f64],
    ensemble: &[WalkStats],
    rng: RngStream,
    opts: &DominationOptions,
) -> Result<DominationReport> {
    if ensemble.iter().any(|s| s.len() < n) {
        return Err(Error::Invalid(format!("ensemble walks are shorter than n = {n}")));
    }
    let stats: Vec<WalkStats> = ensemble
        .iter()
        .map(|s| if s.len() == n { s.clone() } else { s.prefix(n) })
        .collect();
    let samples = stats.len();
    let mut notes = Vec::new();
    let cdf_ok = params.require_positive_df().is_ok();
    if opts.bounds.contains(&BoundName::UnCdf) && !cdf_ok {
        notes.push("a <= (m+1)/2: the chi-squared CDF bound is skipped".into());
    }
    let j_max = opts.cdf_j_max.unwrap_or(n).clamp(1, n);
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut geometric_above_plain = Vec::new();
    for (i, &t) in t_grid.iter().enumerate() {
        let mut plain_raw = None;
        for &name in &opts.bounds {
            let (report, estimate) = match name {
                BoundName::MnTail => (mn_tail_bound(&params, n, t)?, estimate_from_sample(&stats, |s| s.mn > t, Some(rng))),
                BoundName::UnTail => (un_tail_bound(&params, n, t)?, estimate_from_sample(&stats, |s| s.un > t, Some(rng))),
                BoundName::UnTailGeometric => (
                    un_tail_bound_geometric(&params, n, t)?,
                    estimate_from_sample(&stats, |s| s.un > t, Some(rng)),
                ),
                BoundName::UnCdf => {
                    if !cdf_ok {
                        continue;
                    }
                    let budget = samples.max(super::MIN_SAMPLES);
                    (
                        un_cdf_bound(&params, n, t, j_max, Some(budget), Some(rng.derive(1000 + i as u64)))?,
                        estimate_from_sample(&stats, |s| s.un <= t, Some(rng)),
                    )
                }
            };
            match name {
                BoundName::UnTail => plain_raw = Some(report.raw),
                BoundName::UnTailGeometric => {
                    if let Some(p) = plain_raw {
                        if report.raw > p * (1.0 + 1e-6) + 1e-12 {
                            geometric_above_plain.push(t);
                        }
                    }
                }
                _ => {}
            }
            rows.push(DominationRow {
                t,
                bound_name: name,
                violation: report.clamped < estimate.p_hat - 3.0 * estimate.sigma(),
                estimate,
                bound_raw: report.raw,
                bound_clamped: report.clamped,
            });
            reports.push(report);
        }
    }
    let violations = rows.iter().filter(|r| r.violation).count();
    Ok(DominationReport {
        params,
        n,
        samples,
        seed: rng,
        passed: violations == 0 && geometric_above_plain.is_empty(),
        rows,
        reports,
        violations,
        geometric_above_plain,
        notes,
    })
}
