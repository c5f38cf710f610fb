//! Acceptance suite: one PASS/FAIL line per criterion. Runtime budgets are
//! checked against wall-clock time.
//!
//! Criterion 8 is a known failure: for m >= 2 the law of d_R(A o X, B o X)
//! differs from that of d_R(A, B), so the right-composition comparisons are
//! rejected. It is reported as FAIL and listed in `EXPECTED_FAILURES`; the
//! process exits nonzero on any other failure, or if criterion 8 starts to pass.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{
    det, f_double_oracle, gl, grid_minimum, hessian_min_eigenvalue, k_oracle, params, random_skew, random_spd, rel,
    selberg_oracle_m2, stream, weight,
};
use rand::Rng;
use spdwalk::bounds::{
    chernoff_objective, geometric_objective, mn_tail_bound, theta_interval, un_cdf_bound, un_tail_bound, BoundName,
};
use spdwalk::hj::{certified_hj_bound, strengthened_m_term, HjConfig};
use spdwalk::mc::{
    domination_from_ensemble, estimate_from_sample, invariance_suite, martingale_suite, simulate_stats,
    simulate_walks, DominationOptions,
};
use spdwalk::special::{eigen_band_probability, f_double, f_single, k_integral_ln, selberg_ln_i, v_upper};
use spdwalk::{haar_orthogonal, riemannian_distance, thompson_distance, WalkStats};
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const EXPECTED_FAILURES: [usize; 1] = [8];

const T_GRID: [f64; 10] = [0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0];
const ENSEMBLE_N: usize = 100_000;
const WALK_LENGTHS: [usize; 3] = [1, 4, 8];

/// One `N = 1e5`, `n = 8` ensemble per `m in {1, 2, 3}` at `a = m + 1`, shared
/// by the domination criteria; shorter walks are prefixes.
fn ensembles() -> &'static Vec<(usize, Vec<WalkStats>)> {
    static CELL: OnceLock<Vec<(usize, Vec<WalkStats>)>> = OnceLock::new();
    CELL.get_or_init(|| {
        (1..=3)
            .map(|m| (m, simulate_stats(params(m, m as f64 + 1.0), 8, ENSEMBLE_N, stream(4000 + m as u64)).unwrap()))
            .collect()
    })
}

fn domination(bounds: &[BoundName]) -> Outcome {
    let mut rows = 0;
    for (m, stats) in ensembles() {
        let p = params(*m, *m as f64 + 1.0);
        for n in WALK_LENGTHS {
            let opts = DominationOptions {
                bounds: bounds.to_vec(),
                cdf_j_max: None,
            };
            let r = domination_from_ensemble(p, n, &T_GRID, stats, stream(5000 + *m as u64), &opts).unwrap();
            let bad: Vec<_> = r.rows.iter().filter(|x| x.violation).map(|x| (x.t, x.bound_name)).collect();
            ensure!(bad.is_empty(), "m={m} n={n}: violations at {bad:?}");
            ensure!(r.geometric_above_plain.is_empty(), "m={m} n={n}: geometric above plain at {:?}", r.geometric_above_plain);
            rows += r.rows.len();
        }
    }
    Ok(format!("{rows} rows, 0 violations"))
}

fn c1_metric_geometry() -> Outcome {
    let mut worst = [0.0f64; 3];
    for m in [2usize, 3, 5] {
        let mut rng = stream(100 + m as u64).rng();
        let sm = (m as f64).sqrt();
        for _ in 0..10_000 {
            let (a, b, c) = (random_spd(m, &mut rng), random_spd(m, &mut rng), random_spd(m, &mut rng));
            let k = haar_orthogonal(m, &mut rng);
            let (ka, kb) = (k.conjugate(&a).unwrap(), k.conjugate(&b).unwrap());
            for d in [riemannian_distance, thompson_distance] {
                let ab = d(&a, &b).unwrap();
                let sym = (ab - d(&b, &a).unwrap()).abs();
                let tri = d(&a, &c).unwrap() - ab - d(&b, &c).unwrap();
                let inv = (d(&ka, &kb).unwrap() - ab).abs();
                ensure!(sym <= 1e-10, "m={m}: symmetry defect {sym}");
                ensure!(tri <= 1e-9, "m={m}: triangle excess {tri}");
                ensure!(inv <= 1e-9, "m={m}: orthogonal invariance defect {inv}");
                worst = [worst[0].max(sym), worst[1].max(tri), worst[2].max(inv)];
            }
            let (dr, dt) = (riemannian_distance(&a, &b).unwrap(), thompson_distance(&a, &b).unwrap());
            ensure!(dt <= dr, "m={m}: d_T {dt} > d_R {dr}");
            // sqrt(m) d_T is itself rounded
            ensure!(dr <= sm * dt * (1.0 + 1e-15), "m={m}: d_R {dr} > sqrt(m) d_T {}", sm * dt);
        }
    }
    Ok(format!("3 x 1e4 triples; max symmetry {:.1e}, triangle excess {:.1e}, invariance {:.1e}", worst[0], worst[1], worst[2]))
}

fn c2_walk_algebra() -> Outcome {
    let paths = simulate_walks(params(3, 4.0), 8, 1000, stream(200), |p| p).unwrap();
    let dense = |x: &spdwalk::SpdMatrix| {
        let a = x.as_matrix();
        (0..3).map(|i| (0..3).map(|j| a[(i, j)]).collect()).collect::<Vec<Vec<f64>>>()
    };
    let mut worst: f64 = 0.0;
    for p in &paths {
        ensure!(p.partials[0] == p.steps[0], "S_1 differs from X_1");
        let prod: f64 = p.steps.iter().map(|x| det(dense(x))).product();
        let err = (det(dense(p.partials.last().unwrap())) / prod - 1.0).abs();
        ensure!(err <= 1e-8, "relative determinant error {err}");
        worst = worst.max(err);
    }
    Ok(format!("1e3 walks (m=3, a=4, n=8); max relative error {worst:.1e}"))
}

fn c3_special_functions() -> Outcome {
    for (m, a, j, u, v) in [(2, 2.0, 1, 0.5, 4.0), (1, 1.7, 0, 0.1, 9.0), (3, 2.2, 2, 1.0, 25.0), (4, 3.5, 3, 0.05, 2.0)] {
        let p = params(m, a);
        let e = rel(f_single(&p, j, u, v).unwrap(), gl(weight(&p, j), u, v, 200));
        ensure!(e < 1e-10, "f_single m={m} j={j}: {e:e}");
    }
    for (m, a, i, j, u, v) in [(2, 2.0, 0, 1, 0.5, 4.0), (2, 2.0, 1, 0, 0.5, 4.0), (3, 2.5, 0, 2, 0.3, 8.0), (3, 2.5, 2, 1, 0.3, 8.0)] {
        let p = params(m, a);
        let e = rel(f_double(&p, i, j, u, v).unwrap(), f_double_oracle(&p, i, j, u, v));
        ensure!(e < 1e-8, "f_double m={m} ({i},{j}): {e:e}");
    }
    for (m, a, v, theta) in [(2, 2.0, 0.3, 0.6), (1, 1.5, 0.2, 0.3), (3, 4.0, 1.1, 0.5), (2, 1.2, 0.05, 0.9)] {
        let p = params(m, a);
        let e = rel(k_integral_ln(&p, v, theta).unwrap().exp(), k_oracle(&p, v, theta));
        ensure!(e < 1e-8, "k_integral m={m} v={v} theta={theta}: {e:e}");
    }
    let p = params(2, 2.5);
    let e = rel(selberg_ln_i(&p, 0.5).unwrap().exp(), selberg_oracle_m2(&p, 0.5));
    ensure!(e < 1e-4, "selberg: {e:e}");
    let mut rng = stream(300).rng();
    let mut checked = 0;
    for k in 0..100 {
        let (r, full) = random_skew(2 * (1 + k % 4), &mut rng);
        let d = det(full);
        ensure!(d >= 0.0, "determinant of a skew matrix is negative: {d}");
        let e = (r.pfaffian().abs() - d.sqrt()).abs() / d.sqrt().max(1e-300);
        ensure!(e < 1e-8, "pfaffian: {e:e}");
        checked += 1;
    }
    Ok(format!("13 quadrature points, {checked} Pfaffians"))
}

fn c4_max_step_tail() -> Outcome {
    for (a, n, t) in [(2.0, 4, 1.0), (1.5, 1, 0.3), (3.0, 8, 2.5), (0.8, 2, 5.0)] {
        let chi = ChiSquared::new(2.0 * a).unwrap();
        let band: f64 = chi.cdf(f64::exp(t)) - chi.cdf(f64::exp(-t));
        let got = mn_tail_bound(&params(1, a), n, t).unwrap().raw;
        ensure!((got - (1.0 - band.powi(n as i32))).abs() < 1e-6, "m=1 a={a} n={n} t={t}");
    }
    for a in [2.0, 3.0] {
        let mass = eigen_band_probability(&params(2, a), 1e-4, 1e3 * 2.0 * a).unwrap().probability;
        ensure!((0.999..=1.0 + 1e-9).contains(&mass), "normalization at a={a}: {mass}");
    }
    domination(&[BoundName::MnTail])
}

fn c5_walk_tail() -> Outcome {
    let combos = [(1, 2.0, 1, 6.0), (1, 3.0, 4, 20.0), (2, 3.0, 4, 30.0), (2, 2.0, 2, 15.0), (3, 4.0, 8, 60.0), (3, 2.5, 1, 10.0)];
    for (m, a, n, t) in combos {
        let p = params(m, a);
        let got = un_tail_bound(&p, n, t).unwrap().raw;
        let oracle = n as f64 * grid_minimum(&p, |v, th| chernoff_objective(&p, n, t, v, th).unwrap()).exp();
        ensure!(rel(got, oracle) < 1e-4, "optimizer m={m} a={a} n={n} t={t}: {got} vs {oracle}");
    }
    let mut points = 0;
    for (m, a, n, t) in &combos[..4] {
        let p = params(*m, *a);
        let (lo, hi) = theta_interval(&p);
        for i in 0..5 {
            for j in 0..5 {
                let theta = lo + (hi - lo) * (0.1 + 0.2 * i as f64);
                let v = v_upper(&p, theta) * (0.05 + 0.2125 * j as f64);
                let e = hessian_min_eigenvalue(|v, th| chernoff_objective(&p, *n, *t, v, th).unwrap(), v, theta, 1e-4);
                ensure!(e >= -1e-8, "Hessian at m={m} v={v} theta={theta}: {e}");
                points += 1;
            }
        }
    }
    let mut rng = stream(500).rng();
    for _ in 0..1000 {
        let m = rng.random_range(1..5usize);
        let p = params(m, 0.5 * (m as f64 - 1.0) + rng.random_range(0.05..4.0));
        let (lo, hi) = theta_interval(&p);
        let theta = lo + (hi - lo) * rng.random_range(0.001..0.999);
        let v = rng.random_range(0.0..0.999) * v_upper(&p, theta);
        let (n, t) = (rng.random_range(1..10usize), rng.random_range(0.0..40.0));
        let plain = (n as f64).ln() + chernoff_objective(&p, n, t, v, theta).unwrap();
        let geo = geometric_objective(&p, n, t, v, theta).unwrap();
        ensure!(geo <= plain + 1e-12, "geometric above plain at m={m} v={v} theta={theta}");
    }
    let dom = domination(&[BoundName::UnTail, BoundName::UnTailGeometric])?;
    Ok(format!("6 optimizer oracles, {points} Hessians, 1000 shared points; {dom}"))
}

fn c6_walk_cdf() -> Outcome {
    for (m, a, n, t) in [(1, 2.0, 3, 1.0), (2, 3.0, 4, 0.5), (3, 4.0, 8, 2.0), (2, 1.75, 1, 3.0)] {
        let p = params(m, a);
        let chi = ChiSquared::new(p.chi_square_df()).unwrap();
        let x = m as f64 * (t / (m as f64).sqrt()).exp();
        let got = un_cdf_bound(&p, n, t, 1, None, None).unwrap().raw;
        ensure!((got - chi.cdf(x)).abs() < 1e-9, "j=1 term m={m} a={a}: {got} vs {}", chi.cdf(x));
    }
    domination(&[BoundName::UnCdf])
}

fn c7_hoffmann_jorgensen() -> Outcome {
    let configs: [(usize, Vec<usize>, f64, Vec<f64>, usize); 6] = [
        (2, vec![1, 1], 12.0, vec![25.0, 25.0], 4),
        (1, vec![1, 1], 6.0, vec![12.0, 12.0], 4),
        (1, vec![1, 1], 8.0, vec![16.0, 16.0], 8),
        (1, vec![2, 1], 8.0, vec![16.0, 16.0], 8),
        (3, vec![1, 1], 18.0, vec![35.0, 35.0], 4),
        (2, vec![1, 2], 14.0, vec![60.0, 60.0], 8),
    ];
    let mut lines = Vec::new();
    for (m, n_list, t0, t_list, n) in configs {
        let stats: Vec<WalkStats> = ensembles()[m - 1].1.iter().map(|s| s.prefix(n)).collect();
        let cfg = HjConfig::new(n_list.clone(), t0, t_list, n).unwrap();
        let r = certified_hj_bound(&params(m, m as f64 + 1.0), &cfg).unwrap();
        ensure!(r.rhs < 1.0, "m={m} {n_list:?}: certified rhs is trivial");
        let est = estimate_from_sample(&stats, |s| s.un > r.threshold, None);
        ensure!(est.p_hat - 3.0 * est.sigma() <= r.rhs, "m={m} {n_list:?}: {} - 3 sigma > {}", est.p_hat, r.rhs);
        let terms = strengthened_m_term(&stats, &cfg, None).unwrap();
        if cfg.n_circ() == 2 {
            ensure!(terms.strengthened == terms.plain, "m={m}: order-statistic term differs at n_circ = 2");
        }
        ensure!(terms.strengthened.successes <= terms.plain.successes, "order-statistic term exceeds plain");
        lines.push(format!("{:.1e}<={:.1e}", est.p_hat, r.rhs));
    }
    Ok(format!("6 configs, empirical<=rhs: {}", lines.join(" ")))
}

fn c8_distributional_lemmas() -> Outcome {
    let r = invariance_suite(params(2, 2.0), 20_000, stream(800)).unwrap();
    let failing: Vec<String> = r
        .comparisons
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} (p = {:.1e})", c.name, c.p_value))
        .collect();
    ensure!(r.left_congruence_max_diff <= 1e-8, "left congruence defect {}", r.left_congruence_max_diff);
    ensure!(failing.is_empty(), "m=2, a=2, N=2e4, seed 800: {}", failing.join("; "));
    Ok(format!("{} comparisons at level 0.01, negative control rejected", r.comparisons.len()))
}

fn c9_martingale() -> Outcome {
    let mut checks = 0;
    for (m, a) in [(1, 1.0), (1, 2.0), (2, 3.0)] {
        let r = martingale_suite(params(m, a), 4, 100_000, stream(900 + m as u64)).unwrap();
        ensure!(r.monotonicity_violations == 0, "m={m}: {} monotonicity violations", r.monotonicity_violations);
        for c in r.mean_checks.iter().filter(|c| !c.passed) {
            return Err(format!("m={m} a={a} step {} entry ({},{}): {} vs {} (se {})", c.step, c.row, c.col, c.sample_mean, c.expected, c.std_error));
        }
        for c in r.markov_checks.iter().filter(|c| !c.passed) {
            return Err(format!("m={m} a={a} Markov {} at t={}: {} > {}", c.functional, c.t, c.p_hat, c.markov_bound));
        }
        checks += r.mean_checks.len() + r.markov_checks.len();
    }
    Ok(format!("{checks} mean and Markov checks, 0 monotonicity violations"))
}

fn c10_reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("verify.toml");
    std::fs::write(&path, "subcommand = \"verify\"\nm = 2\na = 3.0\nn = 4\nt_grid = [1.0, 4.0, 16.0]\nN = 10000\n").unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_spdwalk"))
            .args(["--config", path.to_str().unwrap(), "--seed", "7", "--format", "csv", "--threads", threads])
            .output()
            .unwrap()
    };
    let (one, four) = (run("1"), run("4"));
    ensure!(!one.stdout.is_empty(), "verify wrote no CSV");
    ensure!(one.stdout == four.stdout, "CSV differs between --threads 1 and --threads 4");
    ensure!(one.status.code() == four.status.code(), "exit codes differ");
    Ok(format!("{} identical CSV bytes", one.stdout.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("metric geometry", c1_metric_geometry, 30),
        ("walk algebra", c2_walk_algebra, 10),
        ("special functions vs oracles", c3_special_functions, 60),
        ("maximum-step tail bound", c4_max_step_tail, 300),
        ("partial-product tail bound", c5_walk_tail, 300),
        ("partial-product cdf bound", c6_walk_cdf, 120),
        ("Hoffmann-Jorgensen end to end", c7_hoffmann_jorgensen, 300),
        ("distributional lemmas", c8_distributional_lemmas, 120),
        ("martingale and Markov checks", c9_martingale, 120),
        ("reproducibility across thread counts", c10_reproducibility, 60),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let (mut failures, mut unexpected) = (0, Vec::new());
    for (i, (name, check, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > Duration::from_secs(budget) => Err(format!("over the {budget} s budget")),
            o => o,
        };
        let expected_failure = EXPECTED_FAILURES.contains(&(i + 1));
        let (tag, detail) = match outcome {
            Ok(d) => {
                if expected_failure {
                    unexpected.push(i + 1);
                }
                ("PASS", d)
            }
            Err(d) => {
                failures += 1;
                if !expected_failure {
                    unexpected.push(i + 1);
                }
                (if expected_failure { "FAIL (expected)" } else { "FAIL" }, d)
            }
        };
        println!("criterion {:>2} {tag} [{name}] {:.1} s: {detail}", i + 1, elapsed.as_secs_f64());
    }
    println!("{} of 10 criteria passed; expected failures {EXPECTED_FAILURES:?}; unexpected outcomes {unexpected:?}", 10 - failures);
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
