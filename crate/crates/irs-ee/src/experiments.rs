//! Configuration-driven Monte-Carlo sweeps with CSV output.
//!
//! An [`ExperimentSpec`] (TOML on disk, all fields defaulted) fixes the
//! system, the channel statistics, a sweep variable (power budget in dBm,
//! surface elements, or BS antennas), the trial count, the optimizer modes
//! and a master seed. Trials are paired: trial `t` of every mode at every
//! sweep value draws its channel and its optimizer randomness from
//! sub-seeds of `(master seed, t)`, so modes and sweep points see identical
//! conditions wherever dimensions permit, and the whole table is a pure
//! function of the spec. Trials run on a rayon pool and are reduced in
//! index order, so parallelism never changes the output bytes.
//!
//! This harness is `f64`-only; the underlying solvers stay generic.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bcd::{optimize, BcdSettings, OptimizerMode};
use crate::channel::{generate_realization, sub_seed, ChannelParams, PathLossModel};
use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::phase::PhaseSolveOptions;
use crate::power::PowerSolveOptions;
use crate::scalar::dbm_to_watts;

const CHANNEL_STREAM: u64 = 0x43_48_41_4e;
const OPTIMIZER_STREAM: u64 = 0x4f_50_54_31;

/// Which axis the experiment sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVar {
    /// Per-user maximum transmit power, in dBm.
    #[serde(rename = "pmax")]
    PmaxDbm,
    /// Number of reflecting elements.
    #[serde(rename = "n")]
    IrsElements,
    /// Number of BS antennas.
    #[serde(rename = "m")]
    BsAntennas,
}

impl SweepVar {
    pub fn column_name(self) -> &'static str {
        match self {
            SweepVar::PmaxDbm => "pmax_dbm",
            SweepVar::IrsElements => "n",
            SweepVar::BsAntennas => "m",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSettings {
    pub users: usize,
    pub bs_antennas: usize,
    pub irs_elements: usize,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub circuit_power_mw: f64,
    pub amp_inefficiency: f64,
    pub pmax_dbm: f64,
    /// Per-user minimum rate in bit/s/Hz; the SINR floor is `2^rate - 1`.
    pub min_rate_bps_hz: f64,
}

impl Default for SystemSettings {
    fn default() -> Self {
        Self {
            users: 3,
            bs_antennas: 4,
            irs_elements: 4,
            bandwidth_hz: 1e6,
            noise_psd_dbm_hz: -174.0,
            circuit_power_mw: 50.0,
            amp_inefficiency: 0.35,
            pmax_dbm: 20.0,
            min_rate_bps_hz: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSettings {
    pub rician_k_factor: f64,
    pub pathloss_bs_irs: PathLossModel<f64>,
    pub pathloss_irs_user: PathLossModel<f64>,
    pub d_bs_irs_range: (f64, f64),
    pub d_irs_user_range: (f64, f64),
}

impl Default for ChannelSettings {
    fn default() -> Self {
        let p = ChannelParams::<f64>::default();
        Self {
            rician_k_factor: p.rician_k_factor,
            pathloss_bs_irs: p.pathloss_bs_irs,
            pathloss_irs_user: p.pathloss_irs_user,
            d_bs_irs_range: p.d_bs_irs_range,
            d_irs_user_range: p.d_irs_user_range,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub var: SweepVar,
    pub values: Vec<f64>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            var: SweepVar::PmaxDbm,
            values: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub max_outer_iters: usize,
    pub ee_rel_tol: f64,
    pub randomization_trials: usize,
    pub dinkelbach_tol: f64,
    pub dc_power_rel_tol: f64,
    pub dc_phase_rel_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let b = BcdSettings::<f64>::default();
        Self {
            max_outer_iters: b.max_outer_iters,
            ee_rel_tol: b.ee_rel_tol,
            randomization_trials: b.randomization_trials,
            dinkelbach_tol: b.power.dinkelbach_tol,
            dc_power_rel_tol: b.power.dc_rel_tol,
            dc_phase_rel_tol: b.phase.dc_rel_tol,
        }
    }
}

/// Full experiment description; see the crate README for the file schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub trials: usize,
    pub seed: u64,
    pub modes: Vec<OptimizerMode>,
    /// CSV destination; CLI flags may override it.
    pub output: Option<String>,
    pub system: SystemSettings,
    pub channel: ChannelSettings,
    pub sweep: SweepSettings,
    pub solver: SolverSettings,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: 1,
            modes: OptimizerMode::ALL.to_vec(),
            output: None,
            system: SystemSettings::default(),
            channel: ChannelSettings::default(),
            sweep: SweepSettings::default(),
            solver: SolverSettings::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.sweep.values.is_empty() {
            return Err(Error::InvalidConfig("sweep values must be non-empty".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidConfig("modes must be non-empty".into()));
        }
        if matches!(self.sweep.var, SweepVar::IrsElements | SweepVar::BsAntennas) {
            for &v in &self.sweep.values {
                if v.fract() != 0.0 || v < 1.0 {
                    return Err(Error::InvalidConfig(format!(
                        "size sweep values must be positive integers, got {v}"
                    )));
                }
            }
        }
        self.system_config(self.sweep.values[0])?.validate()?;
        self.channel_params().validate()
    }

    /// System configuration at one sweep value.
    pub fn system_config(&self, sweep_value: f64) -> Result<SystemConfig<f64>> {
        let s = &self.system;
        let (mut m, mut n, mut pmax_dbm) = (s.bs_antennas, s.irs_elements, s.pmax_dbm);
        match self.sweep.var {
            SweepVar::PmaxDbm => pmax_dbm = sweep_value,
            SweepVar::IrsElements => n = sweep_value as usize,
            SweepVar::BsAntennas => m = sweep_value as usize,
        }
        let config = SystemConfig::new(
            s.users,
            m,
            n,
            s.bandwidth_hz,
            dbm_to_watts(s.noise_psd_dbm_hz),
            s.circuit_power_mw * 1e-3,
            s.amp_inefficiency,
            dbm_to_watts(pmax_dbm),
            2f64.powf(s.min_rate_bps_hz) - 1.0,
        );
        config.validate()?;
        Ok(config)
    }

    pub fn channel_params(&self) -> ChannelParams<f64> {
        ChannelParams {
            rician_k_factor: self.channel.rician_k_factor,
            pathloss_bs_irs: self.channel.pathloss_bs_irs,
            pathloss_irs_user: self.channel.pathloss_irs_user,
            d_bs_irs_range: self.channel.d_bs_irs_range,
            d_irs_user_range: self.channel.d_irs_user_range,
            rng_seed: self.seed,
        }
    }

    pub fn bcd_settings(&self) -> BcdSettings<f64> {
        BcdSettings {
            max_outer_iters: self.solver.max_outer_iters,
            ee_rel_tol: self.solver.ee_rel_tol,
            randomization_trials: self.solver.randomization_trials,
            power: PowerSolveOptions {
                dinkelbach_tol: self.solver.dinkelbach_tol,
                dc_rel_tol: self.solver.dc_power_rel_tol,
                ..PowerSolveOptions::default()
            },
            phase: PhaseSolveOptions {
                dc_rel_tol: self.solver.dc_phase_rel_tol,
                ..PhaseSolveOptions::default()
            },
        }
    }
}

/// One (sweep value, mode) aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_var: SweepVar,
    pub sweep_value: f64,
    pub mode: OptimizerMode,
    /// Mean EE in bit/J over feasible trials (0 when none are feasible).
    pub mean_ee: f64,
    /// Sample standard deviation over feasible trials.
    pub std_ee: f64,
    pub n_feasible: usize,
    pub n_trials: usize,
    pub seed: u64,
}

/// Raw per-trial outcome, kept for paired statistical checks.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSample {
    pub sweep_index: usize,
    pub mode: OptimizerMode,
    pub trial: usize,
    pub ee: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub samples: Vec<TrialSample>,
}

impl ResultTable {
    /// EE samples of one cell in trial order.
    pub fn cell(&self, sweep_index: usize, mode: OptimizerMode) -> Vec<&TrialSample> {
        self.samples
            .iter()
            .filter(|s| s.sweep_index == sweep_index && s.mode == mode)
            .collect()
    }
}

/// Runs the full sweep. The result is a pure function of the spec.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let params = spec.channel_params();
    let settings = spec.bcd_settings();
    let n_values = spec.sweep.values.len();

    let jobs: Vec<(usize, usize)> = (0..n_values)
        .flat_map(|vi| (0..spec.trials).map(move |t| (vi, t)))
        .collect();

    let outcomes: Vec<Vec<(f64, bool)>> = jobs
        .par_iter()
        .map(|&(vi, trial)| -> Result<Vec<(f64, bool)>> {
            let config = spec.system_config(spec.sweep.values[vi])?;
            let channel_rng_seed = sub_seed(spec.seed ^ CHANNEL_STREAM, trial as u64);
            let channels = generate_realization(
                &config,
                &params,
                &mut ChaCha8Rng::seed_from_u64(channel_rng_seed),
            )?;
            let opt_seed = sub_seed(spec.seed ^ OPTIMIZER_STREAM, trial as u64);
            spec.modes
                .iter()
                .map(|&mode| {
                    let mut rng = ChaCha8Rng::seed_from_u64(opt_seed);
                    let state = optimize(&config, &channels, mode, &settings, &mut rng)?;
                    Ok((state.ee, state.feasible))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    // Deterministic reduction in (sweep value, mode, trial) order.
    let mut rows = Vec::with_capacity(n_values * spec.modes.len());
    let mut samples = Vec::with_capacity(jobs.len() * spec.modes.len());
    for vi in 0..n_values {
        for (mi, &mode) in spec.modes.iter().enumerate() {
            let mut feasible_ees = Vec::new();
            for trial in 0..spec.trials {
                let (ee, feasible) = outcomes[vi * spec.trials + trial][mi];
                samples.push(TrialSample {
                    sweep_index: vi,
                    mode,
                    trial,
                    ee,
                    feasible,
                });
                if feasible {
                    feasible_ees.push(ee);
                }
            }
            let n_feasible = feasible_ees.len();
            let mean = if n_feasible == 0 {
                0.0
            } else {
                feasible_ees.iter().sum::<f64>() / n_feasible as f64
            };
            let std = if n_feasible <= 1 {
                0.0
            } else {
                let var = feasible_ees
                    .iter()
                    .map(|e| (e - mean) * (e - mean))
                    .sum::<f64>()
                    / (n_feasible - 1) as f64;
                var.sqrt()
            };
            rows.push(ResultRow {
                sweep_var: spec.sweep.var,
                sweep_value: spec.sweep.values[vi],
                mode,
                mean_ee: mean,
                std_ee: std,
                n_feasible,
                n_trials: spec.trials,
                seed: spec.seed,
            });
        }
    }
    Ok(ResultTable { rows, samples })
}

/// Writes the table as CSV: fixed column order, six significant digits for
/// the EE statistics.
pub fn emit_csv<W: std::io::Write>(table: &ResultTable, mut out: W) -> Result<()> {
    writeln!(
        out,
        "sweep_var,sweep_value,mode,mean_ee,std_ee,n_feasible,n_trials,seed"
    )?;
    for row in &table.rows {
        writeln!(
            out,
            "{},{},{},{:.5e},{:.5e},{},{},{}",
            row.sweep_var.column_name(),
            row.sweep_value,
            row.mode,
            row.mean_ee,
            row.std_ee,
            row.n_feasible,
            row.n_trials,
            row.seed
        )?;
    }
    Ok(())
}

/// Runs the experiment and writes the CSV to `path`.
pub fn run_to_csv(spec: &ExperimentSpec, path: &std::path::Path) -> Result<ResultTable> {
    let table = run_experiment(spec)?;
    let file = std::fs::File::create(path)?;
    emit_csv(&table, std::io::BufWriter::new(file))?;
    Ok(table)
}
