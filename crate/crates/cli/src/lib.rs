//! Command-line experiment runner over `cstar-core`.
//!
//! Exit codes: 0 pass, 1 falsified (witness written next to the CSV),
//! 2 inconclusive or budget overflow, 3 config or usage error.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use cstar_core::Verdict;

pub use config::Config;
pub use error::CliError;
pub use experiments::{Experiment, Outcome, RunParams};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FALSIFIED: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cstar", version, about = "Falsification-style experiments on group actions")]
pub struct Cli {
    /// Flat `key = value` experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// CSV destination; overrides `output.path`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print the CSV to stdout instead of the summary.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Also write a chart next to the CSV.
    #[arg(long, global = true)]
    pub svg: bool,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub slack: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Uniform-weight bound ‖Σ (1/J) g⁻ʲhgʲ‖ ≤ C/√J for J ≤ J_max.
    Panalytic,
    /// Decay of M_J(T) − a_e·Id against (C/√J)Σ|a_h|.
    Average,
    /// Lower bound for ‖T‖ with its witness.
    Norm,
    /// Trace identities for S, T (and averages when g is given).
    Trace,
    /// Faithfulness and W_j disjointness.
    Orbits,
    /// Ping-pong consistency checks for (h, g).
    Pingpong,
    /// The √N blow-up for finite-order g.
    Blowup,
    /// Pivot, translate and average a finite sum.
    Ideal,
}

impl Command {
    pub fn experiment(&self) -> Experiment {
        match self {
            Self::Panalytic => Experiment::Panalytic,
            Self::Average => Experiment::Average,
            Self::Norm => Experiment::Norm,
            Self::Trace => Experiment::Trace,
            Self::Orbits => Experiment::Orbits,
            Self::Pingpong => Experiment::Pingpong,
            Self::Blowup => Experiment::Blowup,
            Self::Ideal => Experiment::Ideal,
        }
    }
}

pub fn exit_code(verdict: Verdict) -> i32 {
    match verdict {
        Verdict::Pass => EXIT_PASS,
        Verdict::Falsified => EXIT_FALSIFIED,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// Sibling path `<stem>.<suffix>` of the CSV output.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

/// Parses `args`, runs the experiment and writes artifacts. Returns the exit
/// code; diagnostics go to `stderr`.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = if e.use_stderr() { write!(stderr, "{e}") } else { write!(stdout, "{e}") };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            EXIT_USAGE
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let experiment = cli.command.experiment();
    let Some(config_path) = &cli.config else {
        return Err(CliError::config(None, "--config", "a config file is required"));
    };
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::config(None, "--config", format!("{}: {e}", config_path.display())))?;
    let config = Config::parse(&text)?;
    if let Some(named) = config.raw("experiment") {
        if named != experiment.name() {
            return Err(config.error("experiment", format!("config is for `{named}`, not `{}`", experiment.name())));
        }
    }
    if !(cli.slack >= 0.0 && cli.slack.is_finite()) {
        return Err(CliError::config(None, "--slack", "must be a finite nonnegative number"));
    }
    let csv_path = cli.out.clone().or_else(|| config.raw("output.path").map(PathBuf::from));
    if cli.svg && csv_path.is_none() {
        return Err(CliError::config(None, "--svg", "needs --out or output.path"));
    }

    let params = RunParams { seed: cli.seed, slack: cli.slack };
    let outcome = experiments::run(experiment, &config, params)?;
    let verdict = outcome.verdict();
    let hash = config.param_hash(experiment.name(), cli.seed, cli.slack);
    let csv = output::render_csv(&outcome.rows, &hash);

    if let Some(path) = &csv_path {
        std::fs::write(path, &csv)?;
        let witness_path = sibling(path, "witness.csv");
        if verdict == Verdict::Falsified && !outcome.witnesses.is_empty() {
            std::fs::write(&witness_path, output::render_witness(&outcome.witnesses))?;
        } else if witness_path.exists() {
            std::fs::remove_file(&witness_path)?;
        }
        if cli.svg {
            std::fs::write(sibling(path, "svg"), output::render_svg(&outcome.rows, experiment.name()))?;
        }
    }
    let mut notes = vec![format!("presentation: {}", config.presentation())];
    notes.extend(outcome.notes.iter().cloned());
    if let Some(reason) = &outcome.interrupted {
        notes.push(format!("stopped early: {reason}"));
    }
    if cli.csv {
        stdout.write_all(csv.as_bytes())?;
    } else {
        let summary = output::render_summary(experiment.name(), &hash, &notes, &outcome.rows, verdict);
        stdout.write_all(summary.as_bytes())?;
    }
    Ok(exit_code(verdict))
}
