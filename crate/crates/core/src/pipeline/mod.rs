//! Scenario-driven synthetic experiments and their analysis chain.

mod report;
mod run;
mod scenario;
mod synth;
mod targets;
mod tuning_map;

pub use report::{Provenance, Record, Report};
pub use run::{run_scenario, RunOptions, RunOutput};
pub use scenario::{
    DecayConfig, EmitterConfig, Grid, InjectionBlock, OdmrConfig, QModeConfig, QSpectrumConfig, RabiConfig,
    RingConfig, Scenario, TuningConfig,
};
pub use synth::{add_gaussian_noise, odmr_dataset, q_mode_spectrum, rabi_dataset, ring_spectrum, Spectrum};
pub use targets::{Target, TargetSource, TargetTable, Tolerance};
pub use tuning_map::{blue_side_mode, generate_tuning_map, tuning_sensitivity, TuningMap};

/// The scenario shipped with the crate, mirroring the published measurements.
pub const PAPER_SCENARIO: &str = include_str!("../../data/paper.json");

pub fn paper_scenario() -> Scenario {
    Scenario::from_json(PAPER_SCENARIO).expect("shipped scenario is valid")
}
