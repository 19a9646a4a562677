//! Command-line front end: convergence studies, shift sweeps, φ optimization,
//! state snapshots and the self test.

pub mod commands;
pub mod config;
pub mod selftest;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
pub use commands::{
    convergence_rows, optimize_report, read_error_csv, state_output, sweep_rows, write_error_csv, write_state, ErrorRow,
    OptimizeReport,
};
pub use config::{PhiPolicy, ProblemSource, RunConfig, VariantName};
pub use selftest::{run_selftest, SelftestOptions, SelftestReport};

#[derive(Parser, Debug)]
#[command(name = "knlanczos", about = "Block Lanczos quadratures for transfer functions of diffusion operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Run configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,

    /// Worker threads for per-shift and per-node evaluations.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Overrides `seed` from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Error of each variant against the reference at every checkpoint.
    Convergence,
    /// Error of each variant over a shift grid at `m_max`.
    Sweep,
    /// φ optimization report with the cheated φ for comparison.
    Optimize,
    /// Time-harmonic state snapshots and cross-section series.
    State,
    /// Built-in invariant checks.
    Selftest {
        /// Flip the sign of the κ̂ update in the Stieltjes extraction.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn load_config(cli: &Cli) -> Result<(RunConfig, PathBuf)> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this subcommand needs --config".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn output_dir(cli: &Cli, cfg: &RunConfig, base: &Path) -> Result<PathBuf> {
    let dir = match (&cli.output, &cfg.output_dir) {
        (Some(dir), _) => dir.clone(),
        (None, Some(dir)) => base.join(dir),
        (None, None) => PathBuf::from("out"),
    };
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

/// Executes one command; returns the process exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    if let Some(threads) = cli.threads {
        // Fails only when a pool already exists, in which case it is reused.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    if let Command::Selftest { inject_fault } = cli.command {
        let report = run_selftest(SelftestOptions {
            seed: cli.seed.unwrap_or(0),
            fault: inject_fault,
        });
        for check in &report.checks {
            println!("{check}");
        }
        let ok = report.passed();
        println!("selftest {}", if ok { "passed" } else { "FAILED" });
        return Ok(if ok { 0 } else { 1 });
    }

    let (cfg, base) = load_config(cli)?;
    let problem = cfg.problem.load(&base)?;
    let dir = output_dir(cli, &cfg, &base)?;
    match cli.command {
        Command::Convergence => {
            let path = dir.join("convergence.csv");
            write_error_csv(&path, &convergence_rows(&cfg, &problem)?)?;
            println!("wrote {}", path.display());
        }
        Command::Sweep => {
            let path = dir.join("sweep.csv");
            write_error_csv(&path, &sweep_rows(&cfg, &problem)?)?;
            println!("wrote {}", path.display());
        }
        Command::Optimize => {
            let report = optimize_report(&cfg, &problem)?;
            for entry in report.checkpoints.iter().filter_map(|e| e.warning.as_ref().map(|w| (e.m, w))) {
                eprintln!("warning at m = {}: {}", entry.0, entry.1);
            }
            let path = dir.join("optimize.json");
            let text = serde_json::to_string_pretty(&report)?;
            std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
            println!("wrote {}", path.display());
        }
        Command::State => {
            let out = state_output(&cfg, &problem)?;
            for path in write_state(&out, &problem, &dir)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Selftest { .. } => unreachable!("handled above"),
    }
    Ok(0)
}
