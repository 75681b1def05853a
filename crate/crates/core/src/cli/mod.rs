//! Command-line front end: `solve`, `verify`, and `navigate`.
//!
//! Exit codes: 0 ok, 1 configuration or output error, 2 solver
//! non-convergence, 3 verification failure, 4 simulation failure.

mod commands;
mod config;
mod table;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_navigate, cmd_solve, cmd_verify, weight_replay_error, weights_at_step, Artifacts, CliError,
    ControllerChoice, Outcome,
};
pub use config::{
    ExperimentConfig, InlineProgram, InlineQuadratic, NavigateConfig, ProblemSpec, SolveMode, VerifyConfig,
    SCHEMA_VERSION,
};
pub use table::Table;

/// Environment variable holding the log filter.
pub const LOG_ENV: &str = "COUNTERSPEC_LOG";

#[derive(Debug, Parser)]
#[command(name = "counterspec", version, about = "Counterfactual optimization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the configured program and write its iterate trace.
    Solve(CommonArgs),
    /// Solve, then certify the compromise and check sensitivities.
    Verify(VerifyArgs),
    /// Run the terrain-navigation comparison.
    Navigate(NavigateArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment config (JSON); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Certify `s† + δ` instead of `s†`.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub perturb_slack: f64,
}

#[derive(Debug, Args)]
pub struct NavigateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = ControllerChoice::Both)]
    pub controller: ControllerChoice,
    /// Also write the counterfactual plan's equivalent LQR weights.
    #[arg(long)]
    pub emit_weights: bool,
}

fn load(common: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path).map_err(CliError::Config)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Runs a parsed command and writes its outputs. Returns the exit code.
pub fn execute(cli: &Cli) -> i32 {
    let (common, result) = match &cli.command {
        Command::Solve(a) => (a, load(a).and_then(|cfg| cmd_solve(&cfg))),
        Command::Verify(a) => (
            &a.common,
            load(&a.common).and_then(|cfg| cmd_verify(&cfg, a.perturb_slack)),
        ),
        Command::Navigate(a) => (
            &a.common,
            load(&a.common).and_then(|cfg| cmd_navigate(&cfg, a.controller, a.emit_weights)),
        ),
    };
    let outcome = match result {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    match outcome.artifacts.write_to(&common.out) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    }
    if outcome.exit_code == 0 {
        println!("{}", outcome.message);
    } else {
        eprintln!("{}", outcome.message);
    }
    outcome.exit_code
}

/// Entry point used by the binary: parses `args` and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).try_init();
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
