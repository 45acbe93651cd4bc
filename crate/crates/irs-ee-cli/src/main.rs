//! Command-line front end for the Monte-Carlo experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use irs_ee::bcd::OptimizerMode;
use irs_ee::channel::{generate_realization, sub_seed, write_fixture};
use irs_ee::experiments::{run_to_csv, ExperimentSpec, SweepSettings, SweepVar};
use irs_ee::{Error, Result};

#[derive(Parser)]
#[command(
    name = "irs-ee",
    version,
    about = "Monte-Carlo energy-efficiency experiments for an IRS-assisted multi-antenna uplink"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML spec file.
    Run {
        /// Path to the spec file (see the README for the schema).
        spec: PathBuf,
        /// Output CSV path; overrides `output` from the spec.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep over one variable with otherwise default parameters.
    Sweep {
        /// Sweep variable: pmax, n, or m.
        #[arg(long)]
        var: String,
        /// Sweep values (comma-separated); defaults depend on the variable.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Modes to run (comma-separated); defaults to all five.
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<String>>,
        /// Per-user minimum rate in bit/s/Hz.
        #[arg(long)]
        min_rate: Option<f64>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Export one seeded channel realization as a JSON fixture.
    Fixture {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long, default_value_t = 3)]
        users: usize,
        #[arg(long, default_value_t = 4)]
        bs_antennas: usize,
        #[arg(long, default_value_t = 4)]
        irs_elements: usize,
        /// Output JSON path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_sweep_var(s: &str) -> Result<SweepVar> {
    match s.trim().to_ascii_lowercase().as_str() {
        "pmax" | "pmax_dbm" => Ok(SweepVar::PmaxDbm),
        "n" | "irs" => Ok(SweepVar::IrsElements),
        "m" | "bs" => Ok(SweepVar::BsAntennas),
        other => Err(Error::Parse(format!(
            "unknown sweep variable `{other}` (expected pmax, n, or m)"
        ))),
    }
}

fn default_values(var: SweepVar) -> Vec<f64> {
    match var {
        SweepVar::PmaxDbm => vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
        SweepVar::IrsElements | SweepVar::BsAntennas => vec![2.0, 4.0, 6.0, 8.0],
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { spec, out } => {
            let spec_parsed = ExperimentSpec::from_path(&spec)?;
            let path = out
                .or_else(|| spec_parsed.output.clone().map(PathBuf::from))
                .ok_or_else(|| {
                    Error::InvalidConfig(
                        "no output path: set `output` in the spec or pass --out".into(),
                    )
                })?;
            let table = run_to_csv(&spec_parsed, &path)?;
            println!("wrote {} rows to {}", table.rows.len(), path.display());
        }
        Command::Sweep {
            var,
            values,
            trials,
            seed,
            modes,
            min_rate,
            out,
        } => {
            let var = parse_sweep_var(&var)?;
            let mut spec = ExperimentSpec {
                trials,
                seed,
                sweep: SweepSettings {
                    var,
                    values: values.unwrap_or_else(|| default_values(var)),
                },
                ..ExperimentSpec::default()
            };
            if let Some(names) = modes {
                spec.modes = names
                    .iter()
                    .map(|name| name.parse::<OptimizerMode>())
                    .collect::<Result<Vec<_>>>()?;
            }
            if let Some(rate) = min_rate {
                spec.system.min_rate_bps_hz = rate;
            }
            let table = run_to_csv(&spec, &out)?;
            println!("wrote {} rows to {}", table.rows.len(), out.display());
        }
        Command::Fixture {
            seed,
            trial,
            users,
            bs_antennas,
            irs_elements,
            out,
        } => {
            let spec = ExperimentSpec {
                seed,
                system: irs_ee::experiments::SystemSettings {
                    users,
                    bs_antennas,
                    irs_elements,
                    ..Default::default()
                },
                ..ExperimentSpec::default()
            };
            let config = spec.system_config(spec.system.pmax_dbm)?;
            let params = spec.channel_params();
            let mut rng = <rand_chacha::ChaCha8Rng as rand_chacha::rand_core::SeedableRng>::seed_from_u64(
                sub_seed(seed, trial),
            );
            let set = generate_realization(&config, &params, &mut rng)?;
            let file = std::fs::File::create(&out)?;
            write_fixture(&set, std::io::BufWriter::new(file))?;
            println!("wrote channel fixture to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
