use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use hyprel::runner::{self, Command, RunConfig, EXIT_CONFIG_ERROR};
use hyprel::Error;

/// Numerical experiments on relative entropy, renormalized area and mean
/// curvature flow in the hyperbolic half-space.
#[derive(Debug, Parser)]
#[command(name = "hyprel", version)]
struct Cli {
    /// One of: geodesic-entropy, invariance, hemisphere, catenoid,
    /// separation, mcf, scaling-test, weighted.
    #[arg(value_parser = parse_command)]
    command: Command,

    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long)]
    verbose: bool,
}

fn parse_command(s: &str) -> Result<Command, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn threads_from_env() -> Result<Option<usize>, Error> {
    match std::env::var("HYPREL_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("HYPREL_THREADS must be a positive integer, got `{v}`"))),
        },
    }
}

fn execute(cli: &Cli) -> Result<i32, Error> {
    if let Some(n) = threads_from_env()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let config = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    let (command, out) = runner::resolve(&config, Some(cli.command), cli.out.as_deref())?;
    let report = runner::run(&config, command, &out)?;
    for c in &report.summary.checks {
        println!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
    }
    println!("outputs written to {}", report.output_dir.display());
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_CONFIG_ERROR } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(runner::error_exit_code(&e) as u8)
        }
    }
}
