//! Thin command-line front end over the experiment runners. Exit codes:
//! 0 success, 1 config error, 2 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rd_arnoldi::error::Error;
use rd_arnoldi::experiments::{
    run_calibrate, run_convergence_experiment, run_phi, run_residual_experiment, run_sector,
    run_window_experiment, ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "rd-arnoldi",
    about = "Rational Arnoldi computation of phi_k(hL)v for sectorial operators",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// key=value config file; defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// output directory for CSV files (overrides the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// enable/disable the dense reference solution: on|off
    #[arg(long, global = true)]
    oracle: Option<String>,

    /// seed recorded in outputs (randomized checks live in the test suite)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// large mode: M = 1000, oracle off, bounds/residual only
    #[arg(long, global = true)]
    large: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Per-iteration error, bounds and residual curves (CSV per phi index)
    Converge,
    /// True error vs generalized residual curves (CSV per phi index)
    Residual,
    /// Admissible tau window around the optimum for m = 2..40
    Window,
    /// Coarse-grid calibration of the iteration count and tau
    Calibrate,
    /// Field-of-values sector angle and radius of the operator
    Sector,
    /// One-shot computation of phi_k(hL)v, written as a CSV column
    Phi,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(oracle) = &cli.oracle {
        cfg.oracle = match oracle.as_str() {
            "on" | "true" => true,
            "off" | "false" => false,
            other => {
                return Err(Error::Config {
                    line: 0,
                    message: format!("--oracle must be on or off, got '{other}'"),
                })
            }
        };
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.large {
        cfg.large = true;
        cfg.oracle = false;
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<(), Error> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Converge => {
            for path in run_convergence_experiment(&cfg)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Residual => {
            for path in run_residual_experiment(&cfg)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Window => {
            let path = run_window_experiment(&cfg)?;
            println!("wrote {}", path.display());
        }
        Command::Calibrate => {
            let (policy, theta) = run_calibrate(&cfg)?;
            println!("theta = {:.6}", theta);
            println!("target_m = {}", policy.target_m);
            println!("tau_opt = {:.6}", policy.tau_opt);
            if policy.window.bracket_failed {
                println!(
                    "window = [{:.6}, {:.6}] (fallback tau_opt/2 .. 2 tau_opt)",
                    policy.tau_opt / 2.0,
                    2.0 * policy.tau_opt
                );
            } else {
                println!(
                    "window = [{:.6}, {:.6}]",
                    policy.window.lo, policy.window.hi
                );
            }
        }
        Command::Sector => {
            let info = run_sector(&cfg)?;
            println!("theta = {:.6}", info.theta);
            println!("radius = {:.6e}", info.radius);
        }
        Command::Phi => {
            let (path, approx) = run_phi(&cfg)?;
            println!(
                "converged = {} after m = {} iterations{}",
                approx.converged,
                approx.m,
                if approx.breakdown {
                    " (happy breakdown)"
                } else {
                    ""
                }
            );
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::Config { .. } | Error::Io(_))) => {
            eprintln!("config error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(2)
        }
    }
}
