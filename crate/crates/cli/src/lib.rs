//! Batch front-end for `starlanczos`: problem files in, CSV/JSON reports out.
//!
//! Exit codes: 0 on success, 1 when the input is rejected, 2 when the
//! numerics fail (breakdown, singular or ill-conditioned inversions, a
//! residual above `--tol`, a failing `verify` check).

pub mod commands;
pub mod output;
pub mod problem;
pub mod suite;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use starlanczos::star_lanczos::BetaMode;
use starlanczos::Settings;
use thiserror::Error;

pub use problem::{load_problem, parse_problem, Output, ProblemSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<starlanczos::Error> for CliError {
    fn from(e: starlanczos::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else if let starlanczos::Error::Io(m) = e {
            CliError::Io(m)
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Invert,
    Lanczos,
    Evolve,
    Green,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Numeric,
    Resolvent,
}

impl From<ModeArg> for BetaMode {
    fn from(m: ModeArg) -> BetaMode {
        match m {
            ModeArg::Numeric => BetaMode::Numeric,
            ModeArg::Resolvent => BetaMode::Resolvent,
        }
    }
}

/// star invert|lanczos|evolve|green|verify --problem <file> --out <dir>
#[derive(Parser, Debug, Clone)]
#[command(name = "star", version, about = "Time-ordered exponentials through the ∗-Lanczos algorithm")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON problem file.
    #[arg(long, value_name = "FILE")]
    pub problem: Option<PathBuf>,
    /// Directory receiving the reports.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Number of grid points, overriding `n_points`.
    #[arg(long, value_name = "N")]
    pub grid: Option<usize>,
    /// Overrides `beta_mode` from the problem file.
    #[arg(long, value_enum)]
    pub beta_mode: Option<ModeArg>,
    /// Fail with exit code 2 when the command's residual exceeds this.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Relative breakdown threshold [default: 1e-10].
    #[arg(long)]
    pub tau_bd: Option<f64>,
    /// Relative annihilation tolerance [default: 1e-8].
    #[arg(long)]
    pub tau_ann: Option<f64>,
    /// Largest accepted condition estimate [default: 1e12].
    #[arg(long)]
    pub cond_cap: Option<f64>,
    /// Highest delta-derivative order kept [default: 8].
    #[arg(long)]
    pub m_max: Option<usize>,
    /// RK4 substeps per grid interval [default: 10].
    #[arg(long)]
    pub substeps: Option<usize>,
    /// Relative size below which a diagonal counts as zero [default: 1e-7].
    #[arg(long)]
    pub tau_diag: Option<f64>,
}

impl Cli {
    pub fn settings(&self) -> Result<Settings, CliError> {
        let mut s = Settings::default();
        let pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(CliError::Validation(format!("--{name} must be a positive number, got {v}")))
            }
        };
        if let Some(v) = self.tau_bd {
            s.tau_bd = pos("tau-bd", v)?;
        }
        if let Some(v) = self.tau_ann {
            s.tau_ann = pos("tau-ann", v)?;
        }
        if let Some(v) = self.cond_cap {
            s.cond_cap = pos("cond-cap", v)?;
        }
        if let Some(v) = self.tau_diag {
            s.tau_diag = pos("tau-diag", v)?;
        }
        if let Some(v) = self.m_max {
            if v == 0 {
                return Err(CliError::Validation("--m-max must be at least 1".into()));
            }
            s.m_max = v;
        }
        if let Some(v) = self.substeps {
            if v == 0 {
                return Err(CliError::Validation("--substeps must be at least 1".into()));
            }
            s.substeps = v;
        }
        if let Some(t) = self.tol {
            pos("tol", t)?;
        }
        Ok(s)
    }
}

/// Reads `STAR_THREADS`; `None` when unset.
pub fn thread_cap(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value {
        None => Ok(None),
        Some(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Validation(format!("STAR_THREADS must be a positive integer, got `{s}`"))),
        },
    }
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let threads = thread_cap(std::env::var("STAR_THREADS").ok().as_deref());
    let mut buf = Vec::new();
    let result = threads.and_then(|cap| match cap {
        Some(n) => starlanczos::par::with_threads(n, || commands::run(&cli, &mut buf)),
        None => commands::run(&cli, &mut buf),
    });
    let _ = stdout.write_all(&buf);
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
