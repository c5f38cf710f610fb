use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use spdwalk_cli::{run, Command, CliError, Format, RunConfig};

/// Wishart random walks on the positive definite cone: simulation, tail
/// bounds, Hoffmann-Jorgensen certificates and Monte Carlo verification.
#[derive(Debug, Parser)]
#[command(name = "spdwalk", version)]
struct Args {
    /// Subcommand; may instead be given as `subcommand` in the config.
    #[arg(value_enum)]
    command: Option<Command>,
    /// Run configuration (`.json` for JSON, TOML otherwise).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; output does not depend on it.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn build_config(args: &Args) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    match (args.command, config.subcommand) {
        (Some(cli), Some(file)) if cli != file => {
            return Err(CliError::validation(format!(
                "subcommand {cli:?} conflicts with {file:?} in the config"
            )));
        }
        (Some(cli), _) => config.subcommand = Some(cli),
        _ => {}
    }
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    if args.out.is_some() {
        config.output = args.out.clone();
    }
    if args.format.is_some() {
        config.format = args.format;
    }
    if args.threads == 0 {
        return Err(CliError::validation("--threads must be at least 1"));
    }
    Ok(config)
}

fn fail(err: CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => return fail(CliError::validation(e.to_string().trim_end())),
    };
    let config = match build_config(&args) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.threads).build() {
        Ok(p) => p,
        Err(e) => return fail(CliError::runtime(format!("cannot start thread pool: {e}"))),
    };
    let code = pool.install(|| run(config));
    ExitCode::from(code as u8)
}
