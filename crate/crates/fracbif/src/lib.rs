//! Command-line front end for `fracbif-core`: configuration files, the
//! `eigen`, `solve`, `bifurcation` and `verify` commands, and their CSV,
//! JSON and SVG outputs.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use config::{ConfigMap, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_NO_SOLUTION: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "fracbif", version, about = "Bifurcation analysis for the sublinear fractional p-Laplacian")]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, value_name = "X")]
    pub lambda: Option<f64>,

    #[arg(long = "lambda-min", global = true, value_name = "X")]
    pub lambda_min: Option<f64>,

    #[arg(long = "lambda-max", global = true, value_name = "X")]
    pub lambda_max: Option<f64>,

    /// Number of continuation points.
    #[arg(long, global = true, value_name = "N")]
    pub steps: Option<usize>,

    /// Bisection bracket for the threshold.
    #[arg(long, global = true, value_name = "LO,HI")]
    pub bracket: Option<String>,

    /// Target width of the threshold bracket.
    #[arg(long, global = true, value_name = "W")]
    pub width: Option<f64>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,

    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, value_name = "N", env = "FRACBIF_THREADS")]
    pub threads: Option<usize>,

    /// Replace the kernel by a non-monotone one (negative control for `verify`).
    #[arg(long = "corrupt-kernel", global = true, hide = true)]
    pub corrupt_kernel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Principal eigenpair of the discrete operator.
    Eigen,
    /// Biggest and mountain-pass solutions at one lambda.
    Solve,
    /// Branch continuation and threshold bisection.
    Bifurcation,
    /// Operator, gradient, oracle and threshold checks.
    Verify,
}

impl Cli {
    /// Config file values with the command-line flags applied on top.
    pub fn resolve(&self) -> Result<RunConfig, config::ConfigError> {
        let path = self.config.as_ref().ok_or_else(|| config::ConfigError::Missing("--config".into()))?;
        let mut map = ConfigMap::load(path)?;
        if let Some(v) = self.lambda {
            map.set("lambda", v);
        }
        if let Some(v) = self.lambda_min {
            map.set("lambda_min", v);
        }
        if let Some(v) = self.lambda_max {
            map.set("lambda_max", v);
        }
        if let Some(v) = self.steps {
            map.set("steps", v);
        }
        if let Some(v) = &self.bracket {
            map.set("bracket", v);
        }
        if let Some(v) = self.width {
            map.set("width", v);
        }
        if let Some(v) = self.seed {
            map.set("seed", v);
        }
        RunConfig::from_map(&map)
    }
}

/// Parses `args` and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let cfg = match cli.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let result = match cli.command {
        Command::Eigen => commands::eigen(&cfg, &cli.out),
        Command::Solve => commands::solve(&cfg, &cli.out),
        Command::Bifurcation => commands::bifurcation(&cfg, &cli.out),
        Command::Verify => commands::verify(&cfg, &cli.out, cli.corrupt_kernel),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    }
}
