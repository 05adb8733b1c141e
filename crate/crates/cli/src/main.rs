//! `nsk41`: run, sweep, diagnose and report.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nsk41_core::diagnostics::DiagnosticsError;
use nsk41_core::io::ConfigError;
use nsk41_core::solver::SolverError;
use nsk41_core::sweep::SweepError;

#[derive(Parser, Debug)]
#[command(name = "nsk41", version, about = "Pseudo-spectral Navier-Stokes runs with K41 and inviscid-limit diagnostics")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one configuration (or re-run a manifest.json).
    Run {
        config: PathBuf,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        flags: Overrides,
    },
    /// Run every viscosity in `sweep.mu_list`.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        flags: Overrides,
    },
    /// Recompute diagnostics from a checkpoint directory.
    Diag {
        checkpoint_dir: PathBuf,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        flags: Overrides,
    },
    /// Merge every checkpoint directory under DIR into one report.
    Report {
        dir: PathBuf,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        flags: Overrides,
    },
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Allow writing into a non-empty output directory.
    #[arg(long)]
    pub force: bool,
}

/// Flags that override config keys.
#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub kstar: Option<usize>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Comma-separated lags for the modulus table.
    #[arg(long = "dt-list", value_delimiter = ',', num_args = 1..)]
    pub dt_list: Option<Vec<f64>>,
}

impl Overrides {
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        if let Some(t) = self.threads {
            v.push(("threads", t.to_string()));
        }
        if let Some(s) = self.seed {
            v.push(("seed", s.to_string()));
        }
        if let Some(a) = self.alpha {
            v.push(("diag.alpha", a.to_string()));
        }
        if let Some(b) = self.beta {
            v.push(("diag.beta", b.to_string()));
        }
        if let Some(k) = self.kstar {
            v.push(("diag.kstar", k.to_string()));
        }
        if let Some(q) = self.q {
            v.push(("diag.q", q.to_string()));
        }
        if let Some(l) = &self.dt_list {
            let parts: Vec<String> = l.iter().map(f64::to_string).collect();
            v.push(("diag.dt_list", format!("{{{}}}", parts.join(","))));
        }
        v
    }
}

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;
pub const EXIT_PARTIAL: u8 = 4;

/// Exit status for an error, from the first recognised cause in its chain.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() || cause.is::<DiagnosticsError>() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<SolverError>() {
            match e {
                SolverError::Diverged { .. } => return EXIT_DIVERGED,
                SolverError::InvalidConfig(_) | SolverError::UnknownPreset(_) => return EXIT_CONFIG,
                _ => {}
            }
        }
        if let Some(e) = cause.downcast_ref::<SweepError>() {
            match e {
                SweepError::Partial { .. } => return EXIT_PARTIAL,
                SweepError::InvalidConfig(_) => return EXIT_CONFIG,
                _ => {}
            }
        }
    }
    EXIT_OTHER
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Run { config, out, flags } => commands::run(config, out, flags),
        Command::Sweep { config, out, flags } => commands::sweep(config, out, flags),
        Command::Diag { checkpoint_dir, out, flags } => commands::diag(checkpoint_dir, out, flags),
        Command::Report { dir, out, flags } => commands::report(dir, out, flags),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
