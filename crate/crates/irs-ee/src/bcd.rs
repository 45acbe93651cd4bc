//! Block-coordinate descent over the three resource blocks: transmit
//! powers, receive beamformers, surface phases.
//!
//! One outer pass runs power control, then the MMSE update, then the phase
//! step (each skipped in the corresponding baseline mode), re-evaluating
//! the state and recording the energy efficiency after every step. Each
//! step adopts its candidate only when the EE does not regress, so the
//! trace is non-decreasing and the loop converges; it stops when a full
//! pass moves the EE by less than a relative tolerance.
//!
//! QoS infeasibility is never fatal: the affected step keeps the incumbent
//! block and the final state carries `feasible = false` when the floors
//! are unmet.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mmse::mmse_receiver;
use crate::model::{ChannelSet, PhaseVector, PowerAllocation, SolutionState, SystemConfig};
use crate::phase::{optimize_phases_with, PhaseSolveOptions};
use crate::power::{
    build_gain_table, dinkelbach_solve_with, qos_feasible_init, sinr_from_gains,
    PowerSolveOptions,
};
use crate::scalar::{conv, Real};

/// Which blocks the optimizer is allowed to move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerMode {
    /// Joint optimization of powers, beamformers and phases.
    Proposed,
    /// Phases frozen at the random initialization.
    FixIrs,
    /// Beamformers frozen at the initialization MMSE.
    FixBs,
    /// Powers frozen at the caps.
    FixPa,
    /// Everything frozen at the initialization.
    FixAll,
}

impl OptimizerMode {
    pub const ALL: [OptimizerMode; 5] = [
        OptimizerMode::Proposed,
        OptimizerMode::FixIrs,
        OptimizerMode::FixBs,
        OptimizerMode::FixPa,
        OptimizerMode::FixAll,
    ];

    pub fn runs_power(self) -> bool {
        !matches!(self, OptimizerMode::FixPa | OptimizerMode::FixAll)
    }

    pub fn runs_beams(self) -> bool {
        !matches!(self, OptimizerMode::FixBs | OptimizerMode::FixAll)
    }

    pub fn runs_phases(self) -> bool {
        !matches!(self, OptimizerMode::FixIrs | OptimizerMode::FixAll)
    }
}

impl std::fmt::Display for OptimizerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            OptimizerMode::Proposed => "proposed",
            OptimizerMode::FixIrs => "fix_irs",
            OptimizerMode::FixBs => "fix_bs",
            OptimizerMode::FixPa => "fix_pa",
            OptimizerMode::FixAll => "fix_all",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for OptimizerMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "proposed" | "prop" => Ok(OptimizerMode::Proposed),
            "fix_irs" | "fixirs" => Ok(OptimizerMode::FixIrs),
            "fix_bs" | "fixbs" => Ok(OptimizerMode::FixBs),
            "fix_pa" | "fixpa" => Ok(OptimizerMode::FixPa),
            "fix_all" | "fixall" => Ok(OptimizerMode::FixAll),
            other => Err(crate::Error::Parse(format!("unknown mode `{other}`"))),
        }
    }
}

/// Outer-loop controls plus the sub-solver options.
#[derive(Debug, Clone, Copy)]
pub struct BcdSettings<T: Real> {
    pub max_outer_iters: usize,
    /// Stop when a full pass changes the EE by less than this (relative).
    pub ee_rel_tol: T,
    /// Gaussian randomization candidates per phase step.
    pub randomization_trials: usize,
    pub power: PowerSolveOptions<T>,
    pub phase: PhaseSolveOptions<T>,
}

impl<T: Real> Default for BcdSettings<T> {
    fn default() -> Self {
        Self {
            max_outer_iters: 20,
            ee_rel_tol: conv(1e-4),
            randomization_trials: 50,
            power: PowerSolveOptions::default(),
            phase: PhaseSolveOptions::default(),
        }
    }
}

/// Builds the starting state for a mode: uniform random phases, MMSE
/// beamformers at full power, and the minimum-power QoS point (or the caps
/// when the mode freezes the powers or the floors are unreachable; the
/// latter leaves the state flagged infeasible).
pub fn initialize<T: Real, R: Rng>(
    config: &SystemConfig<T>,
    channels: &ChannelSet<T>,
    mode: OptimizerMode,
    rng: &mut R,
) -> Result<SolutionState<T>> {
    config.validate()?;
    channels.validate(config)?;
    let angles: Vec<T> = (0..config.num_irs_elements)
        .map(|_| conv(rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    let phases = PhaseVector::from_angles(&angles);
    let full_power = PowerAllocation::new(config.max_power.clone());
    let beams = mmse_receiver(config, channels, &phases, &full_power)?;

    let power = if mode == OptimizerMode::FixPa {
        full_power
    } else {
        let gains = build_gain_table(config, channels, &phases, &beams)?;
        match qos_feasible_init(&gains, config) {
            Ok(p) => p,
            Err(e) if e.is_infeasibility() => full_power,
            Err(e) => return Err(e),
        }
    };

    let mut state = SolutionState::evaluate(config, channels, power, beams, phases)?;
    state.trace.push(state.ee);
    Ok(state)
}

fn adopt<T: Real>(state: &mut SolutionState<T>, candidate: SolutionState<T>) {
    let trace = std::mem::take(&mut state.trace);
    *state = candidate;
    state.trace = trace;
}

/// Runs the BCD loop from a fresh initialization.
pub fn optimize<T: Real, R: Rng>(
    config: &SystemConfig<T>,
    channels: &ChannelSet<T>,
    mode: OptimizerMode,
    settings: &BcdSettings<T>,
    rng: &mut R,
) -> Result<SolutionState<T>> {
    let state = initialize(config, channels, mode, rng)?;
    optimize_from(config, channels, state, mode, settings, rng)
}

/// Runs the BCD loop from an existing state (its trace is extended).
pub fn optimize_from<T: Real, R: Rng>(
    config: &SystemConfig<T>,
    channels: &ChannelSet<T>,
    mut state: SolutionState<T>,
    mode: OptimizerMode,
    settings: &BcdSettings<T>,
    rng: &mut R,
) -> Result<SolutionState<T>> {
    if state.trace.is_empty() {
        state.trace.push(state.ee);
    }
    if mode == OptimizerMode::FixAll {
        return Ok(state);
    }

    for _ in 0..settings.max_outer_iters {
        let ee_start = state.ee;

        if mode.runs_power() {
            let gains = build_gain_table(config, channels, &state.phases, &state.beams)?;
            let attempt: Result<PowerAllocation<T>> = (|| {
                let slack = T::one() - conv::<T>(1e-9);
                let incumbent_ok = {
                    let s = sinr_from_gains(&state.power.p, &gains);
                    (0..config.num_users).all(|k| {
                        s[k] >= config.min_sinr[k] * slack
                            && state.power.p[k] >= T::zero()
                            && state.power.p[k] <= config.max_power[k]
                    })
                };
                let start = if incumbent_ok {
                    state.power.clone()
                } else {
                    qos_feasible_init(&gains, config)?
                };
                let (p, _, _) = dinkelbach_solve_with(&gains, config, &start, &settings.power)?;
                Ok(p)
            })();
            match attempt {
                Ok(p) => {
                    let candidate = SolutionState::evaluate(
                        config,
                        channels,
                        p,
                        state.beams.clone(),
                        state.phases.clone(),
                    )?;
                    if candidate.ee >= state.ee {
                        adopt(&mut state, candidate);
                    }
                }
                Err(e) if e.is_infeasibility() => {}
                Err(e) => return Err(e),
            }
            state.trace.push(state.ee);
        }

        if mode.runs_beams() {
            let beams = mmse_receiver(config, channels, &state.phases, &state.power)?;
            let candidate = SolutionState::evaluate(
                config,
                channels,
                state.power.clone(),
                beams,
                state.phases.clone(),
            )?;
            if candidate.ee >= state.ee {
                adopt(&mut state, candidate);
            }
            state.trace.push(state.ee);
        }

        if mode.runs_phases() {
            let phases = optimize_phases_with(
                config,
                channels,
                &state.beams,
                &state.power,
                &state.phases,
                settings.randomization_trials,
                rng,
                &settings.phase,
            )?;
            let candidate = SolutionState::evaluate(
                config,
                channels,
                state.power.clone(),
                state.beams.clone(),
                phases,
            )?;
            if candidate.ee >= state.ee {
                adopt(&mut state, candidate);
            }
            state.trace.push(state.ee);
        }

        let scale = ee_start.abs().max(conv(1e-30));
        if (state.ee - ee_start).abs() <= settings.ee_rel_tol * scale {
            break;
        }
    }
    Ok(state)
}
