//! Front end for the workspace: scenario runs, analytic tables, Petri net
//! analysis and measured-versus-analytic comparison.
//!
//! Exit codes: 0 success, 1 usage, 2 configuration, 3 runtime assertion.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use vnc_harness::{measure_speedup, ConfigError, HarnessError, Registry, ScenarioConfig};

mod analyze;
mod compare;
mod petri_cmd;

pub use analyze::{analysis_inputs, analyze, AnalyticSummary, AnalyzeInputs};
pub use compare::{compare, Delta, Measured};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Config(_) => 2,
            CliError::Assertion(_) | CliError::Runtime(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) | HarnessError::UnknownScenario(_) | HarnessError::Unschedulable(_) => {
                CliError::Config(e.to_string())
            }
            HarnessError::Assertion(m) => CliError::Assertion(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Every scenario the front end knows about.
pub fn registry() -> Registry {
    let mut r = Registry::default();
    vnc_ncp::register(&mut r);
    vnc_mgmt::register(&mut r);
    r
}

#[derive(Debug, Parser)]
#[command(name = "vnc", version, about = "Optimistic lookahead network configuration toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its CSV and JSON reports.
    Run(RunArgs),
    /// Evaluate the analytic model and print its table.
    Analyze(AnalyzeArgs),
    /// Synchronic distances and tolerance propagation for a net file.
    Petri(PetriArgs),
    /// Compare a measured summary with analytic values.
    Compare(CompareArgs),
    /// List the registered scenarios.
    List,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Flat key=value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    /// Scenario name when the config does not set one.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// vnc or sequential.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Skip the sequential rerun used to measure speedup.
    #[arg(long)]
    pub no_baseline: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PetriArgs {
    /// Net in the plain-text matrix format.
    pub net: PathBuf,
    /// First transition set, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub t1: Vec<String>,
    /// Second transition set, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub t2: Vec<String>,
    /// Firing sequence for tolerance propagation.
    #[arg(long, value_delimiter = ',')]
    pub fire: Vec<String>,
    /// Keep place/transition semantics instead of forcing capacity 1.
    #[arg(long)]
    pub pt: bool,
    #[arg(long, default_value_t = 100_000)]
    pub depth: usize,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// summary.json written by `run`.
    #[arg(long)]
    pub measured: PathBuf,
    /// JSON from `analyze --json`, or a key=value analysis config.
    #[arg(long)]
    pub analytic: PathBuf,
    /// Fail with exit code 3 when any delta exceeds this.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

pub fn load_config(args: &ConfigArgs) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => ScenarioConfig::from_file(p)?,
        None => ScenarioConfig::default(),
    };
    for kv in &args.set {
        cfg.apply_override(kv)
            .map_err(|_| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
    }
    Ok(cfg)
}

fn run(a: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = load_config(&a.cfg)?;
    if let Some(s) = &a.scenario {
        cfg.set("scenario", s);
    }
    if let Some(seed) = a.seed {
        cfg.set("seed", seed);
    }
    if let Some(m) = &a.mode {
        cfg.set("mode", m);
    }
    if cfg.get("scenario").is_none() {
        return Err(CliError::Config(
            "no scenario: pass --scenario or set scenario= in the config".into(),
        ));
    }
    let reg = registry();
    let mut report = reg.run(&cfg)?;
    if !a.no_baseline && report.mode == "vnc" && !report.latencies.is_empty() {
        let mut base = cfg.clone();
        base.set("mode", "sequential");
        let b = reg.run(&base)?;
        report.measured_speedup = measure_speedup(&report, &b).ok();
    }
    let files = report.write_outputs(&a.out)?;
    writeln!(
        out,
        "{} seed {} ({}): {}",
        report.scenario,
        report.seed,
        report.mode,
        files.join(", ")
    )?;
    writeln!(
        out,
        "messages real {} virtual {} anti {}",
        report.class_totals.real, report.class_totals.virtual_, report.class_totals.anti
    )?;
    if let Some(b) = report.measured_beta {
        writeln!(out, "beta {b:.4}")?;
    }
    if let Some(s) = report.measured_speedup {
        writeln!(out, "speedup {s:.4}")?;
    }
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(a) => run(a, out),
        Command::Analyze(a) => analyze::command(a, out),
        Command::Petri(a) => petri_cmd::command(a, out),
        Command::Compare(a) => compare::command(a, out),
        Command::List => {
            for name in registry().names() {
                writeln!(out, "{name}")?;
            }
            Ok(())
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "vnc: {e}");
            e.code()
        }
    }
}
