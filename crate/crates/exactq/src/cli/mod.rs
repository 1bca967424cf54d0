//! Command-line front-end: argument parsing and dispatch.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 numeric failure,
//! 4 I/O error. The default output directory is taken from `--out`, then the
//! `EXACTQ_OUT` environment variable, then the current directory.

pub mod config;
pub mod pipeline;

use crate::{Error, Result};
use clap::{Parser, Subcommand};
use config::RunConfig;
use pipeline::SweepAxis;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "exactq", version, about = "Exact qubit dynamics in a finite oscillator reservoir")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write distribution/series/summary files.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: $EXACTQ_OUT or the working directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-solve a template config across one axis and write sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Axis to vary: eta | s | n | g_e.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long)]
        values: String,
        /// Parallel workers.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Export basis, Hamiltonian block, and edges for one excitation subspace.
    Subspace {
        /// Bath oscillator count N.
        #[arg(long)]
        n: usize,
        /// Excitation number Σ.
        #[arg(long)]
        sigma: u32,
        /// Coupling matrix as row,col,re,im CSV (1-based, Hermitian).
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant checks and print a pass/fail table.
    Selftest,
}

fn resolve_out(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("EXACTQ_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_file(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Run the parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let cfg = load_config(&config, seed)?;
            let out = out.or_else(|| cfg.out_dir.clone().map(PathBuf::from));
            let files = pipeline::cmd_simulate(&cfg, &resolve_out(out))?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(0)
        }
        Command::Sweep { config, axis, values, jobs, out, seed } => {
            let cfg = load_config(&config, seed)?;
            let axis = SweepAxis::parse(&axis)?;
            let values: Vec<f64> = values
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad sweep value '{v}'")))
                })
                .collect::<Result<_>>()?;
            let out = out.or_else(|| cfg.out_dir.clone().map(PathBuf::from));
            let path = pipeline::cmd_sweep(&cfg, axis, &values, jobs, &resolve_out(out))?;
            println!("{}", path.display());
            Ok(0)
        }
        Command::Subspace { n, sigma, matrix, out } => {
            let files = pipeline::cmd_subspace(n, sigma, &matrix, &resolve_out(out))?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(0)
        }
        Command::Selftest => {
            let checks = pipeline::selftest_checks();
            let mut failed = false;
            for c in &checks {
                match &c.result {
                    Ok(()) => println!("PASS {}", c.name),
                    Err(detail) => {
                        failed = true;
                        println!("FAIL {} {}", c.name, detail);
                    }
                }
            }
            Ok(if failed { 3 } else { 0 })
        }
    }
}
