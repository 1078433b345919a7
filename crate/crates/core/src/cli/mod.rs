//! Configuration-driven experiment runner behind the `opmlab` binary.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 numerical (or output) failure.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{verify_report, Check, VerifyReport};
pub use config::{ConfigError, ExperimentConfig};

use config::{parse_degrees, parse_geometry, parse_z0};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "OPMLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "opmlab", version, about = "Optimal prediction measures and Christoffel asymptotics on planar curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for optimal prediction measures at each degree.
    Opm,
    /// Convergence table of OPMs against the balayage.
    Convergence,
    /// Balayage of the point mass at z0 and its moments.
    Balayage,
    /// Faber polynomial coefficients and asymptotic deviations.
    Faber,
    /// Random-density optimality check of the Poisson density at 1/conj(Phi(z0)).
    Szego,
    /// Run the invariant suite and report pass/fail per check.
    Verify,
}

/// Every configuration key can be overridden from the command line.
#[derive(Debug, Args)]
struct Overrides {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// circle, interval, ellipse:A,B, or a JSON geometry object.
    #[arg(long, global = true)]
    geometry: Option<String>,
    /// Evaluation point as "re,im".
    #[arg(long, global = true, allow_hyphen_values = true)]
    z0: Option<String>,
    /// "a..b", "a..b:step" (inclusive) or "n1,n2,...".
    #[arg(long, global = true)]
    degrees: Option<String>,
    /// Number of boundary grid nodes.
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    gap_tol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    #[arg(long, global = true)]
    szego_grid: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    #[arg(long, global = true)]
    faber_radius: Option<f64>,
    #[arg(long, global = true)]
    fault_injection: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Numerical(String),
    Verification(String),
    Io(PathBuf, std::io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Verification(_) => EXIT_VERIFY,
            Failure::Numerical(_) | Failure::Io(..) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
            Failure::Io(p, e) => write!(f, "cannot write {}: {e}", p.display()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Numerical(e.to_string())
    }
}

fn load_config(o: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &o.geometry {
        cfg.geometry = parse_geometry(s)?;
    }
    if let Some(s) = &o.z0 {
        cfg.z0 = parse_z0(s)?;
    }
    if let Some(s) = &o.degrees {
        cfg.degrees = parse_degrees(s)?;
    }
    if let Some(v) = o.grid {
        cfg.grid_size = v;
    }
    if let Some(v) = o.gap_tol {
        cfg.gap_tol = v;
    }
    if let Some(v) = o.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = o.szego_grid {
        cfg.szego_grid = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.trials {
        cfg.trials = v;
    }
    if let Some(v) = o.faber_radius {
        cfg.faber_radius = v;
    }
    if let Some(v) = &o.fault_injection {
        cfg.fault_injection = Some(v.clone());
    }
    if let Some(v) = &o.out {
        cfg.output_dir = v.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| ConfigError::new(THREADS_ENV, format!("expected a positive integer, got `{value}`")))?;
    // A pool may already exist when `run` is called twice in one process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn execute(command: &Command, cfg: &ExperimentConfig) -> Result<(), Failure> {
    match command {
        Command::Opm => commands::cmd_opm(cfg),
        Command::Convergence => commands::cmd_convergence(cfg),
        Command::Balayage => commands::cmd_balayage(cfg),
        Command::Faber => commands::cmd_faber(cfg),
        Command::Szego => commands::cmd_szego(cfg),
        Command::Verify => commands::cmd_verify(cfg),
    }
}

/// Parses arguments, runs one subcommand, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = configure_threads()
        .map_err(Failure::from)
        .and_then(|()| load_config(&cli.overrides).map_err(Failure::from))
        .and_then(|cfg| execute(&cli.command, &cfg));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("opmlab: {e}");
            e.exit_code()
        }
    }
}
