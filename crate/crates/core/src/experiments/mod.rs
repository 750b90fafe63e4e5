//! Named experiments behind the `metasep` binary.
//!
//! Every command reads a flat JSON config (optional), applies command-line
//! overrides, writes its data files into an output directory, and finishes with a
//! `manifest.json` holding the resolved config and a SHA-256 per output file.
//!
//! Outputs depend only on the resolved config. The worker count, output path and
//! wall time are deliberately left out of every file so that reruns with a
//! different `--workers` value are byte-identical.

mod commands;
mod output;
pub mod suites;

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::risk::Workers;

pub use commands::{
    growth_rows, run_dynamics, run_growth, run_nsearch, run_risk, run_separation, DynamicsConfig, GrowthConfig,
    GrowthRow, QueryConfig, SeparationConfig, SeparationReport,
};
pub use output::OutputDir;
pub use suites::{SuiteReport, VerifyConfig};

/// Stream ids reserved per experiment, mixed with sub-indices via `hash_mix`.
pub mod stream {
    pub const DYNAMICS: u64 = 1;
    pub const GROWTH: u64 = 2;
    pub const SEPARATION: u64 = 3;
    pub const RISK: u64 = 4;
    pub const NSEARCH: u64 = 5;
    pub const VERIFY: u64 = 6;
}

/// Default master seed.
pub const DEFAULT_SEED: u64 = 42;

/// The experiment commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Dynamics,
    Growth,
    Separation,
    Verify,
    Risk,
    Nsearch,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Dynamics,
        Command::Growth,
        Command::Separation,
        Command::Verify,
        Command::Risk,
        Command::Nsearch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Dynamics => "dynamics",
            Command::Growth => "growth",
            Command::Separation => "separation",
            Command::Verify => "verify",
            Command::Risk => "risk",
            Command::Nsearch => "nsearch",
        }
    }

    /// Config key that `--trials` maps to, if the command has one.
    fn trials_key(self) -> Option<&'static str> {
        match self {
            Command::Dynamics => None,
            Command::Growth => Some("seeds"),
            Command::Verify => Some("cases"),
            Command::Separation | Command::Risk | Command::Nsearch => Some("trials"),
        }
    }
}

impl std::str::FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment \"{s}\"")))
    }
}

/// Everything a command needs besides its config values.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Contents of the config file (a flat JSON object), if any.
    pub config: Map<String, Value>,
    /// `key=value` overrides applied after the file.
    pub overrides: Vec<(String, Value)>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: PathBuf,
    pub workers: usize,
    pub inject_fault: bool,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        RunOptions {
            config: Map::new(),
            overrides: Vec::new(),
            seed: None,
            trials: None,
            out: out.into(),
            workers: 1,
            inject_fault: false,
        }
    }
}

/// What a finished command reports back.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: Command,
    /// Output files in the order they were written (manifest last).
    pub outputs: Vec<PathBuf>,
    /// False when a verification suite failed.
    pub passed: bool,
    /// One-line human summary per item, printed by the binary.
    pub lines: Vec<String>,
}

/// Reads a config file: a single flat JSON object.
pub fn load_config_file(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Error::Config(format!("{}: config must be a JSON object", path.display()))),
        Err(e) => Err(Error::Config(format!("{}: {e}", path.display()))),
    }
}

/// Parses `key=value`; the value is read as JSON when it parses, else as a string.
pub fn parse_override(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override \"{s}\" is not key=value")))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

/// Merges file values, overrides and common flags, then deserializes.
pub(crate) fn resolve<T: DeserializeOwned>(cmd: Command, opts: &RunOptions) -> Result<T> {
    let mut map = opts.config.clone();
    if let Some(name) = map.remove("experiment") {
        if name.as_str() != Some(cmd.name()) {
            return Err(Error::Config(format!(
                "config is for experiment {name}, not \"{}\"",
                cmd.name()
            )));
        }
    }
    for (k, v) in &opts.overrides {
        map.insert(k.clone(), v.clone());
    }
    if let Some(seed) = opts.seed {
        map.insert("seed".into(), seed.into());
    }
    if let Some(trials) = opts.trials {
        match cmd.trials_key() {
            Some(key) => {
                map.insert(key.into(), trials.into());
            }
            None => log::warn!("--trials has no effect on {}", cmd.name()),
        }
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| Error::Config(format!("{}: {e}", cmd.name())))
}

pub(crate) fn echo<T: Serialize>(cmd: Command, cfg: &T) -> Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Value::Object(m) = &mut v {
        m.insert("experiment".into(), cmd.name().into());
    }
    v
}

/// Runs one command end to end.
pub fn run(cmd: Command, opts: &RunOptions) -> Result<RunReport> {
    let workers = Workers::new(opts.workers)?;
    let started = std::time::Instant::now();
    let report = match cmd {
        Command::Dynamics => commands::dynamics_cmd(opts),
        Command::Growth => commands::growth_cmd(opts, &workers),
        Command::Separation => commands::separation_cmd(opts, &workers),
        Command::Risk => commands::risk_cmd(opts, &workers),
        Command::Nsearch => commands::nsearch_cmd(opts, &workers),
        Command::Verify => suites::verify_cmd(opts, &workers),
    }?;
    log::info!("{} finished in {:.2?}", cmd.name(), started.elapsed());
    Ok(report)
}

/// Exit status for an error: 2 for bad configuration, 1 otherwise.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Json(_) => 2,
        _ => 1,
    }
}
