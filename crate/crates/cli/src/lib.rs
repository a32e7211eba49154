//! Front end for the `bagforge` binary.

pub mod config;
pub mod error;
pub mod run;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use config::{build, defaults_help, Command, RunConfig, Settings};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "bagforge",
    version,
    about = "Radial soliton and bag-model solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Minimize the radial soliton energy, one run per value in --g.
    Soliton(Flags),
    /// Optimize the radius of the sharp-interface bag, one run per value in --g.
    Bag(Flags),
    /// Confined-bag eigenvalue for each radius in --R.
    Mit(Flags),
    /// Two-zone bags with exterior masses 2^n m against the confined optimum.
    MitLimit(Flags),
    /// Diffuse-interface minimizers along a decreasing eps schedule.
    GammaSweep(Flags),
    /// Randomized invariant checks with a pass/fail table.
    Verify(Flags),
}

/// Every flag maps to one config key; see the key table under --help.
#[derive(Debug, Args)]
struct Flags {
    /// Config file of `key = value` lines; `[section]` prefixes later keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Quark count.
    #[arg(long = "N")]
    quarks: Option<String>,
    /// Coupling; soliton and bag accept a comma-separated list.
    #[arg(long)]
    g: Option<String>,
    /// Quark mass.
    #[arg(long)]
    m: Option<String>,
    /// Ladder index, or one index per quark (soliton).
    #[arg(long)]
    k: Option<String>,
    /// Well stiffness; the surface constant is sqrt(kappa)/3.
    #[arg(long)]
    kappa: Option<String>,
    /// Volume coefficient.
    #[arg(long)]
    b: Option<String>,
    /// Surface tension of the sharp bag.
    #[arg(long)]
    a: Option<String>,
    /// Lower end of the radius search.
    #[arg(long = "r-min")]
    r_min: Option<String>,
    /// Upper end of the radius search.
    #[arg(long = "r-max")]
    r_max: Option<String>,
    /// Cavity radius, or a comma-separated list.
    #[arg(long = "R")]
    radius: Option<String>,
    /// Largest n in the exterior masses 2^n m.
    #[arg(long = "n-max")]
    n_max: Option<String>,
    /// Outer radius of the computational grid.
    #[arg(long = "grid-r-max")]
    grid_r_max: Option<String>,
    /// Number of grid cells.
    #[arg(long)]
    n: Option<String>,
    /// Descent method: lbfgs or damped.
    #[arg(long)]
    method: Option<String>,
    /// Iteration cap per descent.
    #[arg(long = "max-iter")]
    max_iter: Option<String>,
    /// Stopping tolerance on the Euler-Lagrange residual.
    #[arg(long)]
    tol: Option<String>,
    /// Initial step of the damped method, in (0, 1].
    #[arg(long)]
    damping: Option<String>,
    /// L-BFGS memory.
    #[arg(long)]
    memory: Option<String>,
    /// Strictly decreasing eps schedule.
    #[arg(long)]
    eps: Option<String>,
    /// Radius of the first warm start, or `auto` for the sharp optimum.
    #[arg(long)]
    r0: Option<String>,
    /// Random cases per verify check.
    #[arg(long)]
    samples: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Also write field and density profiles.
    #[arg(long)]
    profiles: Option<String>,
    /// Seed for randomized checks.
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads; defaults to $BAGFORGE_JOBS, then the core count.
    #[arg(long)]
    jobs: Option<String>,
}

impl Flags {
    fn settings(&self) -> Vec<(&'static str, String)> {
        let pairs = [
            ("model.N", &self.quarks),
            ("model.g", &self.g),
            ("model.m", &self.m),
            ("model.k", &self.k),
            ("potential.kappa", &self.kappa),
            ("potential.b", &self.b),
            ("bag.a", &self.a),
            ("bag.r_min", &self.r_min),
            ("bag.r_max", &self.r_max),
            ("mit.R", &self.radius),
            ("mit.n_max", &self.n_max),
            ("grid.r_max", &self.grid_r_max),
            ("grid.n", &self.n),
            ("solver.method", &self.method),
            ("solver.max_iter", &self.max_iter),
            ("solver.tol", &self.tol),
            ("solver.damping", &self.damping),
            ("solver.memory", &self.memory),
            ("sweep.eps", &self.eps),
            ("sweep.r0", &self.r0),
            ("verify.samples", &self.samples),
            ("output.dir", &self.out),
            ("output.format", &self.format),
            ("output.profiles", &self.profiles),
            ("run.seed", &self.seed),
            ("run.jobs", &self.jobs),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect()
    }
}

/// Result of argument parsing.
pub enum Parsed {
    Run(Box<RunConfig>),
    /// Help or version text was requested.
    Info(String),
}

fn clap_command() -> clap::Command {
    let mut cmd = Cli::command();
    for c in Command::ALL {
        cmd = cmd.mut_subcommand(c.name(), |s| s.after_help(defaults_help(c)));
    }
    cmd
}

/// Parses and validates a command line. `jobs_env` stands in for
/// `$BAGFORGE_JOBS`.
pub fn parse<I, T>(args: I, jobs_env: Option<String>) -> Result<Parsed, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match clap_command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    Ok(Parsed::Info(e.render().to_string()))
                }
                _ => Err(CliError::Usage(e.render().to_string())),
            }
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let (command, flags) = match &cli.command {
        Sub::Soliton(f) => (Command::Soliton, f),
        Sub::Bag(f) => (Command::Bag, f),
        Sub::Mit(f) => (Command::Mit, f),
        Sub::MitLimit(f) => (Command::MitLimit, f),
        Sub::GammaSweep(f) => (Command::GammaSweep, f),
        Sub::Verify(f) => (Command::Verify, f),
    };
    let settings = Settings::resolve(
        command,
        flags.config.as_deref(),
        &flags.settings(),
        jobs_env,
    )?;
    Ok(Parsed::Run(Box::new(build(settings)?)))
}

/// Runs the program and returns its exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let parsed = parse(args, std::env::var("BAGFORGE_JOBS").ok());
    let cfg = match parsed {
        Ok(Parsed::Info(text)) => {
            print!("{text}");
            return 0;
        }
        Ok(Parsed::Run(cfg)) => cfg,
        Err(e) => {
            eprintln!("{}", e.to_string().trim_end());
            return e.exit_code();
        }
    };
    match run::execute(&cfg) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            for note in &outcome.flags {
                eprintln!("flagged: {note}");
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
