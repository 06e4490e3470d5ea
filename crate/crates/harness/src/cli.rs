//! `vitool` subcommands. Exit codes: 0 success or feasible, 1 infeasible or
//! invalid configuration, 2 usage error, 3 runtime failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use vi_core::diagnostics::{feasible_beta_interval, validate_params};
use vi_core::oracle::{brute_dual_solutions, brute_solutions, GridSpec, DEFAULT_ORACLE_TOL};
use vi_core::problems::{builtin, CATALOG};
use vi_core::{Method, ViError};

use crate::bench::{run_benchmark, BenchOptions};
use crate::config::{load_config, DEFAULT_OUTPUT_DIR};
use crate::OUT_DIR_ENV;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "vitool", version, about = "Variational inequality solvers and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a benchmark matrix from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides VITOOL_OUT_DIR and the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        jobs: u16,
        /// Also write wall-clock timings under timings/.
        #[arg(long)]
        timings: bool,
    },
    /// Check (alpha, beta, mu) against the inertial feasibility conditions.
    Validate {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
    },
    /// Print the feasible beta interval for (alpha, mu).
    BetaRange {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
    },
    /// Brute-force solution and dual solution sets of a low-dimensional builtin, as CSV.
    Oracle {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        step: Option<f64>,
    },
    /// List builtin problems and registered methods.
    List,
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match cli.command {
        Command::Run {
            config,
            out: out_dir,
            jobs,
            timings,
        } => cmd_run(&config, out_dir, jobs as usize, timings, out, err),
        Command::Validate { alpha, beta, mu } => match validate_params(alpha, beta, mu) {
            Ok(v) => {
                let _ = write!(out, "{v}");
                if v.feasible {
                    EXIT_OK
                } else {
                    let _ = writeln!(err, "infeasible: {}", v.describe_failures());
                    EXIT_INFEASIBLE
                }
            }
            Err(e) => fail(err, &e.to_string(), EXIT_INFEASIBLE),
        },
        Command::BetaRange { alpha, mu } => match feasible_beta_interval(alpha, mu) {
            Ok(Some(i)) => {
                let _ = writeln!(out, "{i}");
                EXIT_OK
            }
            Ok(None) => {
                let _ = writeln!(out, "empty");
                EXIT_INFEASIBLE
            }
            Err(e) => fail(err, &e.to_string(), EXIT_INFEASIBLE),
        },
        Command::Oracle { problem, step } => cmd_oracle(&problem, step, out, err),
        Command::List => {
            let _ = writeln!(out, "problems:");
            for (name, desc) in CATALOG {
                let _ = writeln!(out, "  {name:<22} {desc}");
            }
            let _ = writeln!(out, "methods:");
            for m in Method::ALL {
                let _ = writeln!(out, "  {m}");
            }
            EXIT_OK
        }
    }
}

fn fail(err: &mut dyn Write, msg: &str, code: i32) -> i32 {
    let _ = writeln!(err, "error: {msg}");
    code
}

/// `--out`, then `VITOOL_OUT_DIR`, then the config's `output_dir`, then `vitool-out`.
pub fn resolve_out_dir(flag: Option<PathBuf>, configured: Option<&Path>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| configured.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn cmd_run(config: &Path, out_dir: Option<PathBuf>, jobs: usize, timings: bool, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cfg = match load_config(config) {
        Ok(c) => c,
        Err(e) => return fail(err, &e.to_string(), e.exit_code()),
    };
    let dir = resolve_out_dir(out_dir, cfg.output_dir.as_deref());
    match run_benchmark(&cfg, &dir, BenchOptions { jobs, timings }) {
        Ok(o) => {
            let failed = o.results.iter().filter(|r| r.outcome.is_err()).count();
            let _ = writeln!(
                out,
                "{} cells, {} files written to {}{}",
                o.results.len(),
                o.files.len(),
                o.dir.display(),
                if failed > 0 { format!(" ({failed} cell(s) failed, see summary.csv)") } else { String::new() }
            );
            EXIT_OK
        }
        Err(e) => fail(err, &e.to_string(), e.exit_code()),
    }
}

fn cmd_oracle(name: &str, step: Option<f64>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let problem = match builtin(name) {
        Ok(p) => p,
        Err(e) => return fail(err, &e.to_string(), EXIT_INFEASIBLE),
    };
    let run = || -> Result<Vec<(&str, Vec<vi_core::Vector>)>, ViError> {
        let grid = GridSpec::for_problem(&problem, step)?;
        Ok(vec![
            ("S", brute_solutions(&problem, &grid, DEFAULT_ORACLE_TOL)?),
            ("S_D", brute_dual_solutions(&problem, &grid, DEFAULT_ORACLE_TOL)?),
        ])
    };
    let sets = match run() {
        Ok(s) => s,
        Err(e @ (ViError::Input(_) | ViError::GridTooLarge { .. })) => return fail(err, &e.to_string(), EXIT_INFEASIBLE),
        Err(e) => return fail(err, &e.to_string(), EXIT_RUNTIME),
    };
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["set".to_string()];
    header.extend((1..=problem.dim()).map(|i| format!("x{i}")));
    let mut ok = w.write_record(&header).is_ok();
    for (label, points) in &sets {
        for p in points {
            let mut row = vec![label.to_string()];
            row.extend(p.iter().map(|c| format!("{c:e}")));
            ok &= w.write_record(&row).is_ok();
        }
    }
    match w.into_inner() {
        Ok(bytes) if ok => {
            let _ = out.write_all(&bytes);
            EXIT_OK
        }
        _ => fail(err, "failed to format CSV", EXIT_RUNTIME),
    }
}
