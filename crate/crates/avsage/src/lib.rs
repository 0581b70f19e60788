//! Lifetime reliability simulator for AI accelerators: BTI/HCI transistor
//! aging under arbitrary supply-voltage histories, a closed-loop adaptive
//! voltage scaling (AVS) policy, and a resilience-driven policy optimizer
//! that defers voltage increases where the workload tolerates timing errors.
//!
//! The crate is organized along the pipeline:
//!
//! - [`aging`]: compact BTI/HCI laws and equivalent-time continuation;
//! - [`waveform`]: workload statistics, equivalent-waveform extrapolation,
//!   HCI gamma factor and time accumulation;
//! - [`delay`]: polynomial delay surrogate and the synthetic sweep generator;
//! - [`avs`]: the closed-loop lifetime simulation and scenario comparison;
//! - [`resilience`]: BER modeling and per-operator delay thresholds;
//! - [`power`]: effective voltage and lifetime power reporting;
//! - [`calibrate`]: derivation of the shipped fixture parameters;
//! - [`config`]/[`cli`]: run configuration and the command-line front end.

pub mod aging;
pub mod avs;
pub mod calibrate;
pub mod cli;
pub mod config;
pub mod delay;
pub mod error;
pub mod power;
pub mod resilience;
pub mod waveform;

pub use aging::{
    apply_stress_segment, bti_detrapping, bti_trapping, calibrated_models, equivalent_time,
    hci_law, AgingModels, AgingParams, DeviceAgingState, HciParams, StressMode, TrapSpecies,
};
pub use avs::{
    compare_scenarios, locate_violation, simulate, AvsConfig, AvsTrajectory, ScenarioReport,
};
pub use delay::{BasisKind, DelaySample, DelaySurrogate, SyntheticConfig};
pub use error::{Error, Result};
pub use power::{effective_voltage, lifetime_power, savings_report, PowerModel, SavingsReport};
pub use resilience::{
    ber_of_scale, build_policy, delay_max_for, tolerable_ber, Operator, PathPopulation,
    PolicyTable, ResilienceProfile,
};
pub use waveform::{
    accumulate_hci, base_waveform, extrapolate_bti, gamma_factor, lift_waveform, BtiTrajectory,
    EquivalentWaveform, TransitionWaveform, WorkloadStats,
};
