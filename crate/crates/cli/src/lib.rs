//! `oscimarket` command line: JSON scenario files in, CSV/JSON out.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

/// Caps the worker threads used for ensembles.
pub const THREADS_ENV: &str = "OSCIMARKET_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "oscimarket",
    version,
    about = "Second-order stochastic market models"
)]
pub struct Cli {
    /// Master seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Ensemble size; overrides the config's `paths`.
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single damped oscillator trajectory and energy series (asset.csv).
    SimulateAsset { config: PathBuf },
    /// Normal modes and interlacing check (modes.json).
    Modes { config: PathBuf },
    /// Coefficients from proper and mode frequencies (inverse_modes.json).
    InverseModes { config: PathBuf },
    /// Deterministic or stochastic market paths (market.csv).
    SimulateMarket { config: PathBuf },
    /// Sector detection, reduction and energy split (sectors.json).
    Sectors { config: PathBuf },
    /// Projectability report (check_reduce.json).
    CheckReduce { config: PathBuf },
    /// Periodogram and peaks of every column after the first (spectrum.csv, peaks.csv).
    Spectrum {
        csv: PathBuf,
        /// Peaks reported per column.
        #[arg(long, default_value_t = 3)]
        peaks: usize,
    },
    /// Stationary radial density against a simulated histogram (density.csv).
    Density { config: PathBuf },
    /// Mispricing AR(2) fit of a price CSV (fit.json).
    Fit {
        csv: PathBuf,
        /// `log_ratio` or `difference`.
        #[arg(long, default_value = "log_ratio")]
        mode: String,
        /// Constant fair value used instead of the CSV column.
        #[arg(long)]
        fair_value: Option<f64>,
        /// Rolling-mean window when the CSV has no fair value.
        #[arg(long, default_value_t = oscimarket::ingest::DEFAULT_ROLLING_WINDOW)]
        window: usize,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config { path: PathBuf, message: String },
    Model(oscimarket::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Config { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<oscimarket::Error> for CliError {
    fn from(e: oscimarket::Error) -> Self {
        CliError::Model(e)
    }
}

pub(crate) type CliResult<T> = Result<T, CliError>;

/// Settings shared by every subcommand.
pub(crate) struct Context {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub out: PathBuf,
    pub quiet: bool,
}

impl Context {
    pub fn seed(&self, from_config: Option<u64>) -> u64 {
        self.seed.or(from_config).unwrap_or(0)
    }

    pub fn paths(&self, from_config: Option<usize>) -> CliResult<usize> {
        match self.paths.or(from_config).unwrap_or(1) {
            0 => Err(CliError::Usage("paths must be at least 1".into())),
            n => Ok(n),
        }
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

pub(crate) fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn thread_count() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let ctx = Context {
        seed: cli.seed,
        paths: cli.paths,
        out: cli.out,
        quiet: cli.quiet,
    };
    std::fs::create_dir_all(&ctx.out)
        .map_err(|e| CliError::Io(format!("{}: {e}", ctx.out.display())))?;
    match cli.command {
        Command::SimulateAsset { config } => commands::simulate_asset(&ctx, &config),
        Command::Modes { config } => commands::modes(&ctx, &config),
        Command::InverseModes { config } => commands::inverse_modes(&ctx, &config),
        Command::SimulateMarket { config } => commands::simulate_market(&ctx, &config),
        Command::Sectors { config } => commands::sectors(&ctx, &config),
        Command::CheckReduce { config } => commands::check_reduce(&ctx, &config),
        Command::Spectrum { csv, peaks } => commands::spectrum(&ctx, &csv, peaks),
        Command::Density { config } => commands::density(&ctx, &config),
        Command::Fit {
            csv,
            mode,
            fair_value,
            window,
        } => commands::fit(&ctx, &csv, &mode, fair_value, window),
    }
}

/// Runs the command line `argv` (including the program name) and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = thread_count().and_then(|threads| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
        pool.install(|| dispatch(cli))
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
