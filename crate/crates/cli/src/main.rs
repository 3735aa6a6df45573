//! `adiasim`: build, simulate and check adiabatic Brownian samplers.

mod cmd;
mod config;
mod machine;
mod metrics;
mod out;
mod records;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use adiasim::graph::NodeId;
use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{apply_overrides, parse_pairs, ExperimentConfig, Mode};
use out::OutDir;

#[derive(Parser)]
#[command(
    name = "adiasim",
    version,
    about = "Build, simulate and check adiabatic Brownian samplers"
)]
struct Cli {
    /// Directory every output is written under.
    #[arg(long, global = true, env = "ADIASIM_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a machine for forward and backward determinism, and optionally its chains.
    Verify {
        #[arg(long)]
        tm: PathBuf,
        /// Also run every r-bit seed and check that no two runs meet.
        #[arg(long)]
        r: Option<u32>,
        /// Step bound for those runs.
        #[arg(long = "T", default_value_t = 10_000)]
        t: usize,
    },
    /// Build a sampler graph from a machine and write its dump.
    Build {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        tm: PathBuf,
        #[arg(long)]
        r: u32,
        /// Chain length every run is padded to.
        #[arg(long = "T")]
        t: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble the sampler as a Turing machine; also writes `<out>.meta`.
    BuildTm {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        tm: PathBuf,
        #[arg(long)]
        r: u32,
        #[arg(long = "T")]
        t: usize,
        /// Configuration limit when exploring the Monte Carlo sub-machine.
        #[arg(long, default_value_t = 1_000_000)]
        limit: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the reversible binary counter and report its cost.
    Counter {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        trace: bool,
    },
    /// Occupancy after independent walks, next to the exact distribution on small graphs.
    Simulate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        start: NodeId,
        #[arg(long)]
        duration: f64,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "occupancy.csv")]
        out: PathBuf,
    },
    /// Las Vegas observer on a graph dump.
    LvRun {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        samples: usize,
        /// Time between measurements; calibrated when omitted.
        #[arg(long)]
        wait: Option<f64>,
        /// Start node; the first node of layer 0 by default.
        #[arg(long)]
        start: Option<NodeId>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100_000_000)]
        max_measurements: u64,
        #[arg(long, default_value = "records.csv")]
        out: PathBuf,
    },
    /// Monte Carlo observer on a coupled graph dump.
    McRun {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        count: usize,
        /// Multiple of the calibrated wait.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Explicit wait; overrides `--c`.
        #[arg(long)]
        wait: Option<f64>,
        #[arg(long)]
        start: Option<NodeId>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "records.csv")]
        out: PathBuf,
    },
    /// Metrics of a records file.
    Stats {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_enum, default_value = "lv")]
        mode: Mode,
        /// Target distribution as `value=p,...`, e.g. `0=0.25,1=0.75`.
        #[arg(long)]
        target: Option<String>,
        /// Write the acceptance curve here.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Full experiment from a key=value config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a config entry, e.g. `--set samples=500`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn dispatch(cli: Cli) -> Result<bool> {
    let out = OutDir::new(cli.out_dir);
    match cli.cmd {
        Cmd::Verify { tm, r, t } => return cmd::verify(&tm, r, t),
        Cmd::Build {
            mode,
            tm,
            r,
            t,
            out: dest,
        } => cmd::build(&out, mode, &tm, r, t, &dest)?,
        Cmd::BuildTm {
            mode,
            tm,
            r,
            t,
            limit,
            out: dest,
        } => cmd::build_tm(&out, mode, &tm, r, t, limit, &dest)?,
        Cmd::Counter { k, trace } => cmd::counter(k, trace)?,
        Cmd::Simulate {
            graph,
            start,
            duration,
            trials,
            seed,
            out: dest,
        } => cmd::simulate(&out, &graph, start, duration, trials, seed, &dest)?,
        Cmd::LvRun {
            graph,
            samples,
            wait,
            start,
            seed,
            max_measurements,
            out: dest,
        } => {
            let o = cmd::Observe {
                graph: &graph,
                start,
                seed,
                dest: &dest,
            };
            cmd::lv_run(&out, &o, samples, wait, max_measurements)?
        }
        Cmd::McRun {
            graph,
            count,
            c,
            wait,
            start,
            seed,
            out: dest,
        } => {
            let o = cmd::Observe {
                graph: &graph,
                start,
                seed,
                dest: &dest,
            };
            cmd::mc_run(&out, &o, count, c, wait)?
        }
        Cmd::Stats {
            records,
            mode,
            target,
            curve,
        } => cmd::stats(&out, &records, mode, target.as_deref(), curve.as_deref())?,
        Cmd::Run {
            config,
            mut sets,
            seed,
        } => {
            let text = out::read(&config)?;
            let mut pairs = parse_pairs(&text, &config)?;
            if let Some(s) = seed {
                sets.push(format!("seed={s}"));
            }
            apply_overrides(&mut pairs, &sets)?;
            let base = config.parent().map(PathBuf::from).unwrap_or_default();
            let cfg = ExperimentConfig::from_pairs(&pairs, &base)?;
            for p in run::run(&out, &cfg)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
