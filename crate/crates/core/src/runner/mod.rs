//! Experiment runner behind the `hyprel` command line tool.
//!
//! A run reads a [`RunConfig`], executes one [`Command`], and writes
//! `manifest.json`, `summary.json` and the command's CSV files into an
//! output directory.

mod commands;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub use commands::{
    CatenoidParams, GeodesicEntropyParams, GridSpec, HemisphereParams, InvarianceParams, LogRange, McfParams, ScalingParams,
    SeparationParams, WeightedParams,
};

/// Exit status of a run that passed every check.
pub const EXIT_PASS: i32 = 0;
/// Exit status when at least one invariant check failed.
pub const EXIT_INVARIANT_FAILURE: i32 = 2;
pub const EXIT_NUMERICAL_ERROR: i32 = 3;
pub const EXIT_CONFIG_ERROR: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    GeodesicEntropy,
    Invariance,
    Hemisphere,
    Catenoid,
    Separation,
    Mcf,
    ScalingTest,
    Weighted,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::GeodesicEntropy,
        Command::Invariance,
        Command::Hemisphere,
        Command::Catenoid,
        Command::Separation,
        Command::Mcf,
        Command::ScalingTest,
        Command::Weighted,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::GeodesicEntropy => "geodesic-entropy",
            Command::Invariance => "invariance",
            Command::Hemisphere => "hemisphere",
            Command::Catenoid => "catenoid",
            Command::Separation => "separation",
            Command::Mcf => "mcf",
            Command::ScalingTest => "scaling-test",
            Command::Weighted => "weighted",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command `{s}`")))
    }
}

/// Contents of a configuration file. Every field is optional; `parameters`
/// is checked strictly against the command's parameter set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub parameters: Option<Value>,
    pub output_dir: Option<PathBuf>,
    /// Reserved; no command draws random numbers.
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn for_command(command: Command) -> Self {
        Self {
            command: Some(command),
            ..Default::default()
        }
    }

    pub fn with_parameters(mut self, parameters: Value) -> Self {
        self.parameters = Some(parameters);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Parse a parameter object into `T`, filling defaults; unknown keys fail.
pub(crate) fn parse_parameters<T: DeserializeOwned>(value: Option<&Value>) -> Result<T> {
    let v = match value {
        None | Some(Value::Null) => Value::Object(Default::default()),
        Some(v) => v.clone(),
    };
    serde_json::from_value(v).map_err(|e| Error::Config(format!("parameters: {e}")))
}

/// One pass/fail line of a summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= upper,
            value: Some(value),
            lower: None,
            upper: Some(upper),
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, lower: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= lower,
            value: Some(value),
            lower: Some(lower),
            upper: None,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= lower && value <= upper,
            value: Some(value),
            lower: Some(lower),
            upper: Some(upper),
        }
    }

    /// A wall-clock limit. The measured time goes to the manifest so that
    /// the summary stays reproducible.
    pub fn timed(name: impl Into<String>, seconds: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: seconds < limit,
            value: None,
            lower: None,
            upper: Some(limit),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: Command,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub results: Value,
}

impl Summary {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// The configuration actually used, with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub command: Command,
    pub parameters: Value,
    pub output_dir: PathBuf,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: Command,
    pub library_version: String,
    pub config: ResolvedConfig,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub timings: Vec<(String, f64)>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: Summary,
    pub manifest: Manifest,
    pub output_dir: PathBuf,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.summary.passed {
            EXIT_PASS
        } else {
            EXIT_INVARIANT_FAILURE
        }
    }
}

/// Exit status for a run that stopped with an error.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidInput(_)
        | Error::NotInHalfSpace(_)
        | Error::MappedToInfinity(_)
        | Error::IncomparableConfigs(_)
        | Error::EmptyTruncation { .. } => EXIT_CONFIG_ERROR,
        _ => EXIT_NUMERICAL_ERROR,
    }
}

/// What a command hands back to the runner.
pub(crate) struct Outcome {
    pub parameters: Value,
    pub checks: Vec<Check>,
    pub results: Value,
    pub files: Vec<(String, Vec<u8>)>,
    pub timings: Vec<(String, f64)>,
}

pub(crate) fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))
}

fn to_json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Resolve the command and the output directory. `command` overrides the
/// file only if both agree; `out` takes precedence over the file.
pub fn resolve(config: &RunConfig, command: Option<Command>, out: Option<&Path>) -> Result<(Command, PathBuf)> {
    let cmd = match (command, config.command) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Config(format!("command `{a}` does not match `{b}` in the configuration")));
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(Error::Config("no command given".into())),
    };
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("hyprel-out").join(cmd.name()));
    Ok((cmd, dir))
}

/// Execute a command and write its outputs into `out_dir`.
pub fn run(config: &RunConfig, command: Command, out_dir: &Path) -> Result<RunReport> {
    let start = Instant::now();
    let params = config.parameters.as_ref();
    log::info!("running {command} into {}", out_dir.display());
    let outcome = match command {
        Command::GeodesicEntropy => commands::geodesic_entropy(params)?,
        Command::Invariance => commands::invariance(params)?,
        Command::Hemisphere => commands::hemisphere(params)?,
        Command::Catenoid => commands::catenoid(params)?,
        Command::Separation => commands::separation(params)?,
        Command::Mcf => commands::mcf(params)?,
        Command::ScalingTest => commands::scaling_test(params)?,
        Command::Weighted => commands::weighted(params)?,
    };
    for c in &outcome.checks {
        log::info!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
    }
    let summary = Summary {
        command,
        passed: outcome.checks.iter().all(|c| c.passed),
        checks: outcome.checks,
        results: outcome.results,
    };
    fs::create_dir_all(out_dir)?;
    let mut outputs = Vec::new();
    for (name, bytes) in &outcome.files {
        fs::write(out_dir.join(name), bytes)?;
        outputs.push(name.clone());
    }
    fs::write(out_dir.join("summary.json"), to_json_bytes(&summary)?)?;
    outputs.push("summary.json".into());
    let manifest = Manifest {
        command,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config: ResolvedConfig {
            command,
            parameters: outcome.parameters,
            output_dir: out_dir.to_path_buf(),
            seed: config.seed,
        },
        threads: rayon::current_num_threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        timings: outcome.timings,
        outputs,
    };
    fs::write(out_dir.join("manifest.json"), to_json_bytes(&manifest)?)?;
    Ok(RunReport {
        summary,
        manifest,
        output_dir: out_dir.to_path_buf(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.name()));
        }
        assert!(matches!("mfc".parse::<Command>(), Err(Error::Config(_))));
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(RunConfig::from_json(r#"{"command":"mcf","extra":1}"#).is_err());
        let c = RunConfig::from_json(r#"{"command":"mcf","parameters":{"nodes":50}}"#).unwrap();
        assert_eq!(c.command, Some(Command::Mcf));
        let e = parse_parameters::<McfParams>(Some(&serde_json::json!({"nodez": 3}))).unwrap_err();
        assert!(e.to_string().contains("nodez"), "{e}");
    }

    #[test]
    fn resolve_prefers_flags_and_detects_conflicts() {
        let c = RunConfig::for_command(Command::Mcf);
        assert!(resolve(&c, Some(Command::Hemisphere), None).is_err());
        let (cmd, dir) = resolve(&c, None, Some(Path::new("x"))).unwrap();
        assert_eq!((cmd, dir), (Command::Mcf, PathBuf::from("x")));
        assert!(resolve(&RunConfig::default(), None, None).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(error_exit_code(&Error::Config("x".into())), EXIT_CONFIG_ERROR);
        assert_eq!(error_exit_code(&Error::InvalidInput("x".into())), EXIT_CONFIG_ERROR);
        assert_eq!(error_exit_code(&Error::Integrator("x".into())), EXIT_NUMERICAL_ERROR);
    }

    #[test]
    fn timed_checks_carry_no_value() {
        let c = Check::timed("runtime", 1.0, 5.0);
        assert!(c.passed && c.value.is_none());
        assert!(!Check::timed("runtime", 6.0, 5.0).passed);
        assert!(!Check::at_most("x", f64::NAN, 1.0).passed);
    }
}
