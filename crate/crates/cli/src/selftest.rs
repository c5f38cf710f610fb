//! Quick closed-form and identity checks of the library, run by `selftest`.

use std::fmt::Write as _;

use serde::Serialize;
use spdwalk::bounds::{geometric_sum, un_cdf_bound};
use spdwalk::hj::{resolve_hj, strengthened_m_term, HjConfig, ProbInputs, Source};
use spdwalk::mc::{kolmogorov_survival, simulate_walks, wilson_interval, Z95};
use spdwalk::special::{eigen_band_probability, f_single};
use spdwalk::{
    compose, riemannian_distance, thompson_distance, walk_statistics, wishart_sample, RngStream, SpdMatrix,
    WishartParams,
};

use crate::config::{Format, Resolved, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn close(name: &'static str, value: f64, expected: f64, tolerance: f64) -> Check {
    Check {
        name,
        value,
        expected,
        tolerance,
        passed: (value - expected).abs() <= tolerance,
    }
}

fn relative(name: &'static str, value: f64, expected: f64, tolerance: f64) -> Check {
    let mut c = close(name, value, expected, tolerance * expected.abs());
    c.tolerance = tolerance;
    c
}

fn failed(name: &'static str, err: spdwalk::Error) -> Check {
    eprintln!("selftest {name}: {err}");
    Check {
        name,
        value: f64::NAN,
        expected: f64::NAN,
        tolerance: 0.0,
        passed: false,
    }
}

fn params(m: usize, a: f64) -> WishartParams {
    WishartParams::new(m, a).expect("valid selftest parameters")
}

type CheckFn = fn(u64) -> spdwalk::Result<Check>;

const CHECKS: &[(&str, CheckFn)] = &[
    ("compose_with_identity", |seed| {
        let mut rng = RngStream::new(seed, 1).rng();
        let a = wishart_sample(params(3, 2.5), &mut rng);
        let c = compose(&SpdMatrix::identity(3), &a)?;
        Ok(close("compose_with_identity", (c.as_matrix() - a.as_matrix()).amax(), 0.0, 1e-12))
    }),
    ("thompson_riemannian_sandwich", |seed| {
        let mut rng = RngStream::new(seed, 2).rng();
        let p = params(4, 3.0);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let (a, b) = (wishart_sample(p, &mut rng), wishart_sample(p, &mut rng));
            let (dr, dt) = (riemannian_distance(&a, &b)?, thompson_distance(&a, &b)?);
            worst = worst.max(dt - dr).max(dr - 2.0 * dt);
        }
        Ok(Check {
            name: "thompson_riemannian_sandwich",
            value: worst,
            expected: 0.0,
            tolerance: 1e-12,
            passed: worst <= 1e-12,
        })
    }),
    ("walk_determinant_product", |seed| {
        let path = spdwalk::generate_walk(params(3, 2.0), 8, RngStream::new(seed, 3))?;
        let lhs = path.partials.last().expect("nonempty walk").log_determinant();
        let rhs: f64 = path.steps.iter().map(SpdMatrix::log_determinant).sum();
        // relative error of det(S_n) through its logarithm
        Ok(close("walk_determinant_product", (lhs - rhs).exp_m1().abs(), 0.0, 1e-8))
    }),
    ("f_single_closed_form", |_| {
        // m = 1, a = 1: the weight is e^{-t/2}
        let (u, v) = (0.3, 5.0);
        let exact = 2.0 * ((-0.5 * u as f64).exp() - (-0.5 * v as f64).exp());
        Ok(relative("f_single_closed_form", f_single(&params(1, 1.0), 0, u, v)?, exact, 1e-12))
    }),
    ("scalar_band_is_chi_squared", |_| {
        // W_1(1) is chi-squared with 2 degrees of freedom
        let (u, v) = (0.5, 4.0);
        let band = eigen_band_probability(&params(1, 1.0), u, v)?.probability;
        Ok(close("scalar_band_is_chi_squared", band, (-0.5 * u).exp() - (-0.5 * v).exp(), 1e-6))
    }),
    ("band_normalization_m2", |_| {
        let p = params(2, 3.0);
        let mass = eigen_band_probability(&p, 1e-4, 1e3 * 2.0 * 3.0)?.probability;
        Ok(Check {
            name: "band_normalization_m2",
            value: mass,
            expected: 1.0,
            tolerance: 1e-3,
            passed: (0.999..=1.0 + 1e-9).contains(&mass),
        })
    }),
    ("cdf_bound_first_term", |_| {
        // chi-squared(2) at m e^{t/sqrt m} = e
        let r = un_cdf_bound(&params(1, 2.0), 3, 1.0, 1, None, None)?;
        Ok(close("cdf_bound_first_term", r.raw, 1.0 - (-0.5 * std::f64::consts::E).exp(), 1e-9))
    }),
    ("geometric_sum", |_| Ok(close("geometric_sum", geometric_sum(2.0, 3), 14.0, 1e-12))),
    ("wilson_interval_symmetry", |_| {
        let (lo, hi) = wilson_interval(50, 100, Z95);
        Ok(close("wilson_interval_symmetry", lo + hi, 1.0, 1e-12))
    }),
    ("kolmogorov_critical_value", |_| {
        Ok(close("kolmogorov_critical_value", kolmogorov_survival(1.358_099), 0.05, 1e-5))
    }),
    ("hj_classical_shape", |_| {
        let cfg = HjConfig::new(vec![1, 1], 1.0, vec![2.0, 2.0], 4)?;
        let (pm, tail) = (0.1, 0.2);
        let probs = ProbInputs::from_values(pm, &[tail, tail], &[0.85, 0.85], Source::Analytic)?;
        Ok(close("hj_classical_shape", resolve_hj(&cfg, &probs)?.rhs, pm + tail * tail, 1e-15))
    }),
    ("order_statistic_term_at_n_circ_2", |seed| {
        let cfg = HjConfig::new(vec![1, 1], 1.5, vec![1.0, 1.0], 4)?;
        let stats = simulate_walks(params(2, 3.0), 4, 1000, RngStream::new(seed, 4), |p| walk_statistics(&p))?;
        let t = strengthened_m_term(&stats, &cfg, None)?;
        Ok(close("order_statistic_term_at_n_circ_2", t.strengthened.p_hat, t.plain.p_hat, 0.0))
    }),
];

pub fn run_checks(seed: u64) -> Vec<Check> {
    CHECKS
        .iter()
        .map(|(name, f)| f(seed).unwrap_or_else(|e| failed(name, e)))
        .collect()
}

pub fn render(r: &Resolved) -> (String, bool) {
    let checks = run_checks(r.seed);
    let passed = checks.iter().all(|c| c.passed);
    let body = match r.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                config: &'a RunConfig,
                checks: &'a [Check],
                passed: bool,
            }
            let mut s = serde_json::to_string(&Out {
                config: &r.config,
                checks: &checks,
                passed,
            })
            .expect("checks serialize");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::from("name,value,expected,tolerance,passed\n");
            for c in &checks {
                let _ = writeln!(s, "{},{},{},{},{}", c.name, c.value, c.expected, c.tolerance, c.passed);
            }
            s
        }
    };
    (body, passed)
}
