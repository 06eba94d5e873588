//! Protocol sequencing, Monte Carlo runs, configuration and sweeps.

pub mod config;
pub mod protocol;
pub mod run;
pub mod stats;
pub mod sweep;

pub use config::{ExperimentConfig, RunSpec, StepSpec, SCHEMA_VERSION};
pub use protocol::{validate_protocol, CompiledProtocol, DeviceParams, ProtocolStep, ShotOutcome};
pub use run::{error_per_gate_budget, run_protocol, run_protocol_with, records_csv, RunOptions, RunResult};
pub use stats::Estimate;
pub use sweep::{run_sweep, sweep_csv, SweepPoint, SweepSpec};
