//! `elivagar`: noise-aware circuit search from the command line.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, PipelineConfig};
use elivagar::model::{DeviceModel, SyntheticCalibration, Topology};
use error::{CliError, Result};

#[derive(Parser)]
#[command(name = "elivagar", version, about = "Noise-aware quantum circuit search")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, env = "ELIVAGAR_CONFIG")]
    config: Option<PathBuf>,
    /// Root seed; overrides the config file.
    #[arg(long, global = true, env = "ELIVAGAR_SEED")]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "ELIVAGAR_WORKERS")]
    workers: Option<usize>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true, env = "ELIVAGAR_OUT")]
    out: Option<PathBuf>,
    /// Device calibration file; overrides the config file.
    #[arg(long, global = true)]
    device: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate candidate circuits into candidates.json.
    Generate {
        /// Number of candidates (default: n_candidates from the config).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Clifford noise resilience of each circuit, plus early rejection.
    Cnr {
        /// Circuits file (default: <out>/candidates.json).
        #[arg(long)]
        circuits: Option<PathBuf>,
    },
    /// Representational capacity of each circuit.
    Repcap {
        #[arg(long)]
        circuits: Option<PathBuf>,
        /// Score only the circuits kept in this cnr.json.
        #[arg(long)]
        cnr: Option<PathBuf>,
    },
    /// Full pipeline: generate, reject, score, pick and train the winner.
    Search {
        /// Skip training the winner.
        #[arg(long)]
        no_train: bool,
    },
    /// Train one circuit and report its metrics.
    Train {
        /// Circuit file (default: <out>/winner.json).
        #[arg(long)]
        circuit: Option<PathBuf>,
    },
    /// Write a synthetic device calibration file to stdout.
    Device {
        /// line:N, ring:N, grid:RxC or heavyhex7.
        #[arg(long)]
        topology: String,
        /// Median readout error.
        #[arg(long, default_value_t = 2e-2)]
        readout_error: f64,
        /// Median 2-qubit gate error.
        #[arg(long, default_value_t = 1e-2)]
        err_2q: f64,
        /// Median 1-qubit gate error.
        #[arg(long, default_value_t = 2.5e-4)]
        err_1q: f64,
    },
    /// Execution budget of a finished search against a super-circuit baseline.
    Report {
        /// Report file (default: <out>/report.json).
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn load(cli: &Cli) -> Result<PipelineConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    PipelineConfig::load(
        path,
        &Overrides {
            seed: cli.seed,
            out: cli.out.clone(),
            device: cli.device.clone(),
        },
    )
}

fn parse_topology(s: &str) -> Result<Topology> {
    let bad = || CliError::Config(format!("unknown topology `{s}`"));
    let num = |v: &str| v.parse::<usize>().map_err(|_| bad());
    match s.split_once(':') {
        None if s == "heavyhex7" => Ok(Topology::HeavyHex7),
        Some(("line", n)) => Ok(Topology::Line(num(n)?)),
        Some(("ring", n)) => Ok(Topology::Ring(num(n)?)),
        Some(("grid", rc)) => {
            let (r, c) = rc.split_once('x').ok_or_else(bad)?;
            Ok(Topology::Grid { rows: num(r)?, cols: num(c)? })
        }
        _ => Err(bad()),
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("workers: {e}")))?;
    }
    match &cli.command {
        Command::Generate { n } => commands::generate(&load(&cli)?, *n),
        Command::Cnr { circuits } => commands::cnr(&load(&cli)?, circuits.clone()),
        Command::Repcap { circuits, cnr } => commands::repcap(&load(&cli)?, circuits.clone(), cnr.clone()),
        Command::Search { no_train } => commands::search(&load(&cli)?, !no_train),
        Command::Train { circuit } => commands::train_cmd(&load(&cli)?, circuit.clone()),
        Command::Device {
            topology,
            readout_error,
            err_2q,
            err_1q,
        } => {
            let cal = SyntheticCalibration {
                readout_error: *readout_error,
                err_2q: *err_2q,
                err_1q: *err_1q,
                ..SyntheticCalibration::default()
            };
            let dev = DeviceModel::synthetic(parse_topology(topology)?, &cal, cli.seed.unwrap_or(0));
            println!("{}", dev.to_json());
            Ok(())
        }
        Command::Report { report } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let path = report.clone().unwrap_or_else(|| out.join("report.json"));
            commands::report(&path, cli.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
