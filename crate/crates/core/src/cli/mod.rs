//! Command-line front end.
//!
//! ```text
//! ndkorn <constants|verify|korn|betti|convergence> [--config PATH]
//!        [--domain box,ball] [--dim N] [--resolution 17,33,65]
//!        [--seed 0..100] [--family general,skew] [--bc-mode full|tangential]
//!        [--format csv|json] [--out PATH] [--dump-dir DIR]
//!        [--deterministic-sum] [--no-sharp]
//! ```
//!
//! Exit codes: 0 all checks pass, 1 a mathematical violation was found,
//! 2 configuration error (including domains that violate a hypothesis, such
//! as harmonic 1-forms in `verify`), 3 numerical failure.
//!
//! Counterexamples from `verify` are written to the dump directory in the
//! snapshot format of [`crate::snapshot`]; the header carries the failing
//! assertion ids, every ratio and the constants used.

mod commands;
mod config;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{
    build_mask, cmd_betti, cmd_constants, cmd_convergence, cmd_korn, cmd_verify, richardson, CONVERGENCE_FLAG,
    KORN_IDENTITY_TOL, KORN_RATIO_SLACK,
};
pub use config::{parse_seeds, ExperimentConfig, Format, Overrides};
pub use report::{fmt_float, Cell, CheckCounts, RunReport, FORMAT_VERSION};

use crate::error::Error;
use crate::summation::{set_summation, Summation};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Run(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(e) => match e {
                Error::InvalidDomain(_)
                | Error::DisconnectedBoundary(_)
                | Error::HarmonicFormsPresent(_)
                | Error::Incompatible(_)
                | Error::DegreeOutOfRange { .. }
                | Error::InvalidMultiIndex { .. }
                | Error::Snapshot(_)
                | Error::Io(_) => 2,
                Error::InvariantViolation(_) => 1,
                _ => 3,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ndkorn", version, about = "Korn-type inequalities and spectral constants on cubical grids")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Comma-separated domain kinds.
    #[arg(long, global = true)]
    pub domain: Option<String>,
    /// Spatial dimension N.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Comma-separated vertices per axis, strictly increasing.
    #[arg(long, global = true)]
    pub resolution: Option<String>,
    /// `a..b`, `a..=b` or a comma list.
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Comma-separated tensor families for `verify`.
    #[arg(long, global = true)]
    pub family: Option<String>,
    /// `full` or `tangential`.
    #[arg(long, global = true)]
    pub bc_mode: Option<String>,
    /// `csv` or `json`.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Report file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Directory for counterexample snapshots.
    #[arg(long, global = true)]
    pub dump_dir: Option<PathBuf>,
    /// Sequential reductions and no timings, for byte-stable reports.
    #[arg(long, global = true)]
    pub deterministic_sum: bool,
    /// Skip the sharp-constant eigenproblem.
    #[arg(long, global = true)]
    pub no_sharp: bool,
}

#[derive(Debug, Clone, Copy, Subcommand, PartialEq, Eq)]
pub enum Command {
    /// c_p, c_m, c_hat and harmonic 1-forms per resolution.
    Constants,
    /// c_sharp <= c_hat and the estimate chain over seeds.
    Verify,
    /// Korn ratio and identity residual over seeds.
    Korn,
    /// Harmonic Dirichlet form counts for every degree.
    Betti,
    /// Dyadic sweep with Richardson limits.
    Convergence,
}

impl Args {
    fn overrides(&self) -> Overrides {
        Overrides {
            domains: self.domain.clone(),
            dim: self.dim,
            resolutions: self.resolution.clone(),
            seeds: self.seed.clone(),
            families: self.family.clone(),
            bc_mode: self.bc_mode.clone(),
            format: self.format.clone(),
            out: self.out.clone(),
            dump_dir: self.dump_dir.clone(),
            deterministic_sum: self.deterministic_sum,
            no_sharp: self.no_sharp,
        }
    }
}

pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    set_summation(if cfg.deterministic_sum { Summation::Sequential } else { Summation::Chunked });
    match command {
        Command::Constants => cmd_constants(cfg),
        Command::Verify => cmd_verify(cfg),
        Command::Korn => cmd_korn(cfg),
        Command::Betti => cmd_betti(cfg),
        Command::Convergence => cmd_convergence(cfg),
    }
}

/// Parses `argv`, runs the campaign, writes the report and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let cfg = match ExperimentConfig::load(args.config.as_deref(), &args.overrides()) {
        Ok(c) => c,
        Err(msg) => {
            let e = CliError::Config(msg);
            eprintln!("ndkorn: {e}");
            return e.exit_code();
        }
    };
    let report = match execute(args.command, &cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("ndkorn: {e}");
            return e.exit_code();
        }
    };
    let text = report.render(cfg.format);
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("ndkorn: cannot write {}: {e}", path.display());
                return 2;
            }
        }
        None => print!("{text}"),
    }
    let c = report.checks;
    eprintln!("ndkorn {}: {} checks, {} passed, {} failed", report.command, c.executed, c.passed, c.failed);
    for p in &report.counterexamples {
        eprintln!("  counterexample: {p}");
    }
    report.exit_code()
}
