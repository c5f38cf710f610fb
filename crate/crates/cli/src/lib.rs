//! Command-line front end: reads a run configuration, dispatches to the
//! library and renders reports as JSON or CSV.
//!
//! All randomness derives from the top-level `seed`, so every number in a
//! report can be replayed from the config embedded in it.

pub mod config;
pub mod selftest;

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use spdwalk::bounds::{mn_tail_bound, un_cdf_bound, un_tail_bound, un_tail_bound_geometric, BoundName, BoundReport};
use spdwalk::hj::{certified_hj_bound_with, strengthened_m_term, CertifyOptions, HjResult, StrengthenedTerm};
use spdwalk::mc::{
    domination_from_ensemble, estimate_from_sample, invariance_suite, martingale_suite, simulate_walks,
    DominationOptions, DominationReport, InvarianceReport, MartingaleReport, TailEstimate,
};
use spdwalk::{generate_walk, walk_statistics, RngStream, WalkDump, WishartParams};

pub use config::{resolve, Command, Format, Resolved, RunConfig};

/// Stream tags under the top-level seed, one per kind of experiment.
mod tags {
    pub const SIMULATE: u64 = 10;
    pub const BOUND: u64 = 20;
    pub const CERTIFY: u64 = 30;
    pub const DOMINATION: u64 = 40;
    pub const INVARIANCE: u64 = 41;
    pub const MARTINGALE: u64 = 42;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Validation,
    Runtime,
    Assertion,
}

#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{kind:?}: {message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Validation,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Runtime,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Runtime => 1,
            ErrorKind::Validation => 2,
            ErrorKind::Assertion => 3,
        }
    }

    /// `{"error":{"kind":...,"message":...},"exit_code":...}`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: &'a CliError,
            exit_code: i32,
        }
        serde_json::to_string(&Wrapper {
            error: self,
            exit_code: self.exit_code(),
        })
        .expect("error serializes")
    }
}

impl From<spdwalk::Error> for CliError {
    fn from(e: spdwalk::Error) -> Self {
        CliError::runtime(e.to_string())
    }
}

/// Rendered output of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub resolved: Resolved,
    pub body: String,
    /// False when a `verify` or `selftest` check failed.
    pub passed: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            3
        }
    }
}

/// Runs `config` and returns the report text without writing it anywhere.
pub fn execute(config: &RunConfig) -> Result<Outcome, CliError> {
    let resolved = resolve(config)?;
    let (body, passed) = match resolved.command {
        Command::Simulate => (simulate(&resolved)?, true),
        Command::Bound => (bound(&resolved)?, true),
        Command::Certify => (certify(&resolved)?, true),
        Command::Verify => verify(&resolved)?,
        Command::Selftest => selftest::render(&resolved),
    };
    Ok(Outcome { resolved, body, passed })
}

/// Runs `config`, writes the report to `output` (stdout if unset) and
/// returns the process exit code. Errors go to stderr as JSON.
pub fn run(config: RunConfig) -> i32 {
    let result = execute(&config).and_then(|outcome| {
        emit(outcome.resolved.config.output.as_deref(), &outcome.body)?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) if outcome.passed => 0,
        Ok(outcome) => {
            let err = CliError {
                kind: ErrorKind::Assertion,
                message: format!("{} reported failing checks", config::command_name(outcome.resolved.command)),
            };
            eprintln!("{}", err.to_json());
            err.exit_code()
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            err.exit_code()
        }
    }
}

fn emit(path: Option<&Path>, body: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, body).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(body.as_bytes())
                .map_err(|e| CliError::runtime(format!("cannot write to stdout: {e}")))
        }
    }
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("report serializes");
    s.push('\n');
    s
}

fn params_of(r: &Resolved) -> WishartParams {
    r.params.expect("resolved walk parameters")
}

fn base_stream(r: &Resolved) -> RngStream {
    RngStream::new(r.seed, 0)
}

fn simulate(r: &Resolved) -> Result<String, CliError> {
    let params = params_of(r);
    let stream = base_stream(r).derive(tags::SIMULATE);
    // one stream per walk, so each dump line replays on its own
    let dumps: Vec<WalkDump> = {
        use rayon::prelude::*;
        (0..r.samples as u64)
            .into_par_iter()
            .map(|k| {
                let rng = stream.chunk(k);
                let path = generate_walk(params, r.n, rng)?;
                let mut dump = WalkDump::from_path(&path, rng);
                dump.stats = Some(walk_statistics(&path));
                Ok(dump)
            })
            .collect::<spdwalk::Result<Vec<_>>>()?
    };
    let mut out = String::new();
    match r.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Header<'a> {
                config: &'a RunConfig,
            }
            out.push_str(&json_line(&Header { config: &r.config }));
            for d in &dumps {
                out.push_str(&d.to_json_line());
                out.push('\n');
            }
        }
        Format::Csv => {
            out.push_str("walk,seed,stream_id,step,step_dist,partial_dist\n");
            for (k, d) in dumps.iter().enumerate() {
                let s = d.stats.as_ref().expect("stats attached");
                for j in 0..s.len() {
                    let _ = writeln!(
                        out,
                        "{k},{},{},{},{},{}",
                        d.seed,
                        d.stream_id,
                        j + 1,
                        s.step_dists[j],
                        s.partial_dists[j]
                    );
                }
            }
        }
    }
    Ok(out)
}

/// Computes the requested bounds on the grid, in grid-major order.
pub fn bound_reports(r: &Resolved) -> Result<Vec<BoundReport>, CliError> {
    let params = params_of(r);
    let stream = base_stream(r).derive(tags::BOUND);
    let mut reports = Vec::new();
    for (i, &t) in r.t_grid.iter().enumerate() {
        for &name in &r.bounds {
            let report = match name {
                BoundName::MnTail => mn_tail_bound(&params, r.n, t)?,
                BoundName::UnTail => un_tail_bound(&params, r.n, t)?,
                BoundName::UnTailGeometric => un_tail_bound_geometric(&params, r.n, t)?,
                BoundName::UnCdf => {
                    let mc = (r.j_max > 1).then_some(r.samples);
                    un_cdf_bound(&params, r.n, t, r.j_max, mc, mc.map(|_| stream.derive(i as u64)))?
                }
            };
            reports.push(report);
        }
    }
    Ok(reports)
}

pub const BOUND_CSV_HEADER: &str = "t,bound_name,raw,clamped,status,v,theta,evaluations,m,a,n";

fn bound(r: &Resolved) -> Result<String, CliError> {
    let reports = bound_reports(r)?;
    Ok(match r.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                config: &'a RunConfig,
                reports: &'a [BoundReport],
            }
            json_line(&Out {
                config: &r.config,
                reports: &reports,
            })
        }
        Format::Csv => {
            let mut out = format!("{BOUND_CSV_HEADER}\n");
            for b in &reports {
                let (v, theta) = b.minimizer.map_or((String::new(), String::new()), |mz| (mz.v.to_string(), mz.theta.to_string()));
                let status = serde_json::to_value(b.status).expect("status serializes");
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{v},{theta},{},{},{},{}",
                    b.t,
                    b.bound_name.as_str(),
                    b.raw,
                    b.clamped,
                    status.as_str().unwrap_or_default(),
                    b.evaluations,
                    b.params.m(),
                    b.params.a(),
                    b.n
                );
            }
            out
        }
    })
}

pub fn certified_result(r: &Resolved) -> Result<HjResult, CliError> {
    let hj = r.hj.as_ref().ok_or_else(|| CliError::validation("certify needs an [hj] block"))?;
    let mc = (r.j_max > 1).then_some(r.samples);
    let opts = CertifyOptions {
        cdf_j_max: Some(r.j_max),
        mc_budget: mc,
        rng: mc.map(|_| base_stream(r).derive(tags::CERTIFY)),
    };
    Ok(certified_hj_bound_with(&params_of(r), hj, &opts)?)
}

pub const CERTIFY_CSV_HEADER: &str = "threshold,rhs,rhs_raw,form,membership,ambiguous";

fn certify(r: &Resolved) -> Result<String, CliError> {
    let result = certified_result(r)?;
    Ok(match r.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                config: &'a RunConfig,
                result: &'a HjResult,
            }
            json_line(&Out {
                config: &r.config,
                result: &result,
            })
        }
        Format::Csv => {
            let membership: Vec<String> = result
                .membership
                .iter()
                .map(|m| serde_json::to_value(m).expect("membership serializes").as_str().unwrap_or_default().to_owned())
                .collect();
            let ambiguous: Vec<String> = result.ambiguous.iter().map(usize::to_string).collect();
            format!(
                "{CERTIFY_CSV_HEADER}\n{},{},{},{:?},{},{}\n",
                result.threshold,
                result.rhs,
                result.rhs_raw,
                result.form,
                membership.join(";"),
                ambiguous.join(";")
            )
        }
    })
}

/// Certified right-hand side against the empirical tail at the composite
/// threshold, on the domination ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HjCheck {
    pub certified: HjResult,
    pub empirical_tail: TailEstimate,
    /// `P(M_n > t0)` and the order-statistic term on the same ensemble.
    pub m_terms: StrengthenedTerm,
    /// `p_hat - 3 sigma <= rhs`.
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport<'a> {
    pub config: &'a RunConfig,
    pub domination: DominationReport,
    pub invariance: InvarianceReport,
    pub martingale: MartingaleReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hj: Option<HjCheck>,
    pub passed: bool,
}

fn verify(r: &Resolved) -> Result<(String, bool), CliError> {
    let params = params_of(r);
    let base = base_stream(r);
    let dom_rng = base.derive(tags::DOMINATION);
    let stats = simulate_walks(params, r.n, r.samples, dom_rng.derive(0), |p| walk_statistics(&p))?;
    let opts = DominationOptions {
        bounds: r.bounds.clone(),
        cdf_j_max: Some(r.j_max),
    };
    let domination = domination_from_ensemble(params, r.n, &r.t_grid, &stats, dom_rng, &opts)?;
    let invariance = invariance_suite(params, r.samples, base.derive(tags::INVARIANCE))?;
    let martingale = martingale_suite(params, r.n, r.samples, base.derive(tags::MARTINGALE))?;

    let hj = match &r.hj {
        Some(cfg) => {
            let certified = certified_result(r)?;
            let threshold = cfg.threshold();
            let empirical_tail = estimate_from_sample(&stats, |s| s.un > threshold, Some(dom_rng));
            let m_terms = strengthened_m_term(&stats, cfg, Some(dom_rng))?;
            let passed = empirical_tail.p_hat - 3.0 * empirical_tail.sigma() <= certified.rhs;
            Some(HjCheck {
                certified,
                empirical_tail,
                m_terms,
                passed,
            })
        }
        None => None,
    };

    let passed = domination.passed && invariance.passed && martingale.passed && hj.as_ref().is_none_or(|h| h.passed);
    let body = match r.format {
        Format::Json => json_line(&VerifyReport {
            config: &r.config,
            domination,
            invariance,
            martingale,
            hj,
            passed,
        }),
        Format::Csv => domination.to_csv(),
    };
    Ok((body, passed))
}
