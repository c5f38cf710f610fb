//! Run configuration as read from TOML or JSON, and its resolved form.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spdwalk::bounds::BoundName;
use spdwalk::hj::HjConfig;
use spdwalk::mc::{MIN_SAMPLES, MIN_SUITE_SAMPLES};
use spdwalk::WishartParams;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Bound,
    Certify,
    Verify,
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Walks written by `simulate` when `N` is not given.
pub const DEFAULT_SIMULATE_WALKS: usize = 100;
/// Monte Carlo budget for the other subcommands when `N` is not given.
pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hj: Option<HjConfig>,
    /// Monte Carlo budget.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<BoundName>>,
    /// Largest `j` in the chi-squared CDF bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_max: Option<usize>,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, CliError> {
        toml::from_str(s).map_err(|e| CliError::validation(format!("config: {e}")))
    }

    pub fn from_json_str(s: &str) -> Result<Self, CliError> {
        serde_json::from_str(s).map_err(|e| CliError::validation(format!("config: {e}")))
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
        if path.extension().is_some_and(|x| x.eq_ignore_ascii_case("json")) {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub command: Command,
    pub params: Option<WishartParams>,
    pub n: usize,
    pub t_grid: Vec<f64>,
    pub hj: Option<HjConfig>,
    pub samples: usize,
    pub seed: u64,
    pub format: Format,
    pub bounds: Vec<BoundName>,
    pub j_max: usize,
    /// The input with defaults written back; embedded in every report.
    pub config: RunConfig,
}

fn need<T>(v: Option<T>, key: &str, cmd: Command) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::validation(format!("`{key}` is required for {}", command_name(cmd))))
}

pub fn command_name(cmd: Command) -> &'static str {
    match cmd {
        Command::Simulate => "simulate",
        Command::Bound => "bound",
        Command::Certify => "certify",
        Command::Verify => "verify",
        Command::Selftest => "selftest",
    }
}

pub fn resolve(config: &RunConfig) -> Result<Resolved, CliError> {
    let command = config
        .subcommand
        .ok_or_else(|| CliError::validation("no subcommand given on the command line or in the config"))?;
    let mut out = config.clone();
    let seed = *out.seed.get_or_insert(0);
    let format = *out.format.get_or_insert(Format::Json);

    if command == Command::Selftest {
        return Ok(Resolved {
            command,
            params: None,
            n: 0,
            t_grid: Vec::new(),
            hj: None,
            samples: 0,
            seed,
            format,
            bounds: Vec::new(),
            j_max: 0,
            config: out,
        });
    }

    let params = WishartParams::new(need(config.m, "m", command)?, need(config.a, "a", command)?)
        .map_err(|e| CliError::validation(e.to_string()))?;

    if let Some(hj) = &config.hj {
        match config.n {
            Some(n) if n != hj.n() => {
                return Err(CliError::validation(format!("n = {n} differs from hj.n = {}", hj.n())));
            }
            _ => out.n = Some(hj.n()),
        }
    }
    let n = need(out.n, "n", command)?;
    if n == 0 {
        return Err(CliError::validation("walk length n must be at least 1"));
    }
    if command == Command::Certify && config.hj.is_none() {
        return Err(CliError::validation("certify needs an [hj] block"));
    }

    let t_grid = match (config.t, &config.t_grid) {
        (Some(_), Some(_)) => return Err(CliError::validation("give either `t` or `t_grid`, not both")),
        (Some(t), None) => vec![t],
        (None, Some(g)) => g.clone(),
        (None, None) => Vec::new(),
    };
    if matches!(command, Command::Bound | Command::Verify) && t_grid.is_empty() {
        return Err(CliError::validation(format!("`t` or `t_grid` is required for {}", command_name(command))));
    }
    if let Some(bad) = t_grid.iter().find(|t| !(**t >= 0.0) || t.is_infinite()) {
        return Err(CliError::validation(format!("thresholds must be finite and nonnegative, got {bad}")));
    }
    if !t_grid.is_empty() {
        out.t = None;
        out.t_grid = Some(t_grid.clone());
    }

    let default_samples = if command == Command::Simulate { DEFAULT_SIMULATE_WALKS } else { DEFAULT_SAMPLES };
    let samples = *out.samples.get_or_insert(default_samples);
    let min_samples = match command {
        Command::Simulate => 1,
        Command::Verify => MIN_SUITE_SAMPLES,
        _ => MIN_SAMPLES,
    };
    if samples < min_samples {
        return Err(CliError::validation(format!(
            "N = {samples} is below the minimum {min_samples} for {}",
            command_name(command)
        )));
    }

    let cdf_ok = params.require_positive_df().is_ok();
    let bounds = match (&config.bounds, command) {
        (Some(list), _) => {
            if list.is_empty() {
                return Err(CliError::validation("`bounds` must not be empty"));
            }
            if list.contains(&BoundName::UnCdf) && !cdf_ok {
                return Err(CliError::validation(format!(
                    "un_cdf needs a > (m+1)/2, got a = {} with m = {}",
                    params.a(),
                    params.m()
                )));
            }
            list.clone()
        }
        (None, Command::Bound | Command::Verify) => {
            let mut all = vec![BoundName::MnTail, BoundName::UnTail, BoundName::UnTailGeometric];
            if cdf_ok {
                all.push(BoundName::UnCdf);
            }
            all
        }
        (None, _) => Vec::new(),
    };
    if matches!(command, Command::Bound | Command::Verify) {
        out.bounds = Some(bounds.clone());
    }

    let j_max = match command {
        Command::Bound | Command::Certify | Command::Verify => {
            let default = if command == Command::Verify { n } else { 1 };
            let j = *out.j_max.get_or_insert(default);
            if j == 0 || j > n {
                return Err(CliError::validation(format!("j_max must lie in [1, n = {n}], got {j}")));
            }
            j
        }
        _ => 1,
    };

    Ok(Resolved {
        command,
        params: Some(params),
        n,
        t_grid,
        hj: config.hj.clone(),
        samples,
        seed,
        format,
        bounds,
        j_max,
        config: out,
    })
}
