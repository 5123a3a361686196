//! Command line front end.
//!
//! Exit codes: 0 when every check passes, 1 on a failed check or a numerical
//! error, 2 on invalid arguments, unreadable input or unwritable output.

mod experiments;
mod solve;
mod verify;

pub use solve::solve_with;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::report::{fmt_f64, CsvTable};

#[derive(Parser, Debug)]
#[command(name = "schurlab", version, about = "Saddle point spectra and domain decomposition experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Base seed; per-trial seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output directory.
    #[arg(long, env = "SCHURLAB_OUT", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Route agreement, preconditioner floors and Schur bounds on random systems.
    Verify {
        #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Augmented Lagrangian diagnostics over a grid of penalty parameters.
    Alm {
        #[arg(long, value_delimiter = ',', default_value = "1e-4,1e-3,1e-2,1e-1,1,1e1,1e2")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Schur complement spectra of the Darcy discretization.
    Darcy {
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        n: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Schur complement spectra of the Stokes discretization.
    Stokes {
        #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
        n: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// FETI condition numbers and PCG iterations.
    Feti(DdmArgs),
    /// FETI-DP condition numbers and PCG iterations.
    Fetidp(DdmArgs),
    /// Solve a saddle point system stored as A.mtx, B.mtx, f.mtx, g.mtx.
    Solve {
        /// Directory holding the system.
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Strategy::Direct)]
        strategy: Strategy,
        /// Relative residual tolerance of the iterative strategies.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        /// Penalty parameter of the augmented Lagrangian strategy.
        #[arg(long, default_value_t = 1e-2)]
        eps: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone)]
pub struct DdmArgs {
    /// Subdomains per side.
    #[arg(long = "M", value_delimiter = ',', default_value = "3")]
    pub subdomains: Vec<usize>,
    /// Fine cells per subdomain side.
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
    pub n: Vec<usize>,
    /// Analyse the preconditioned operator.
    #[arg(long)]
    pub precond: bool,
    /// Write the operator (and preconditioner) of every point as Matrix Market.
    #[arg(long)]
    pub dump: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Direct,
    SchurCg,
    Alm,
    MinresMgw,
}

/// One line of a checks report.
#[derive(Clone, Debug)]
pub(crate) struct CheckRow {
    pub check: String,
    pub context: String,
    pub value: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckRow {
    pub fn new(check: impl Into<String>, context: impl Into<String>, value: f64, passed: bool) -> Self {
        CheckRow {
            check: check.into(),
            context: context.into(),
            value,
            passed,
            detail: String::new(),
        }
    }

    pub fn error(check: impl Into<String>, context: impl Into<String>, err: &Error) -> Self {
        CheckRow {
            check: check.into(),
            context: context.into(),
            value: f64::NAN,
            passed: false,
            detail: err.to_string(),
        }
    }
}

pub(crate) fn checks_table(rows: &[CheckRow]) -> CsvTable {
    let mut t = CsvTable::new(&["check", "context", "value", "passed", "detail"]);
    for r in rows {
        t.push(vec![
            r.check.clone(),
            r.context.clone(),
            fmt_f64(r.value),
            r.passed.to_string(),
            r.detail.clone(),
        ]);
    }
    t
}

/// Writes the checks table and reports failures on stderr. Returns whether all passed.
pub(crate) fn finish(out: &Path, name: &str, rows: &[CheckRow]) -> Result<bool> {
    checks_table(rows).write(&out.join(name))?;
    let failed: Vec<&CheckRow> = rows.iter().filter(|r| !r.passed).collect();
    for r in &failed {
        eprintln!("FAIL {} [{}] value={} {}", r.check, r.context, fmt_f64(r.value), r.detail);
    }
    println!("{} checks, {} failed -> {}", rows.len(), failed.len(), out.join(name).display());
    Ok(failed.is_empty())
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", dir.display())))
}

/// Runs a parsed command; `Ok(true)` means every check passed.
pub fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Verify { trials, common } => {
            prepare_out(&common.out)?;
            verify::run(trials, &common)
        }
        Command::Alm { eps, trials, common } => {
            prepare_out(&common.out)?;
            experiments::alm(&eps, trials, &common)
        }
        Command::Darcy { n, common } => {
            prepare_out(&common.out)?;
            experiments::mixed("darcy", &n, &common)
        }
        Command::Stokes { n, common } => {
            prepare_out(&common.out)?;
            experiments::mixed("stokes", &n, &common)
        }
        Command::Feti(args) => {
            prepare_out(&args.common.out)?;
            experiments::ddm(crate::ddm::Method::Feti, &args)
        }
        Command::Fetidp(args) => {
            prepare_out(&args.common.out)?;
            experiments::ddm(crate::ddm::Method::FetiDp, &args)
        }
        Command::Solve {
            dir,
            strategy,
            tol,
            max_iter,
            eps,
            common,
        } => {
            prepare_out(&common.out)?;
            solve::run(&dir, strategy, tol, max_iter, eps, &common)
        }
    }
}

/// Parses arguments, runs, and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                2
            } else {
                1
            }
        }
    }
}
