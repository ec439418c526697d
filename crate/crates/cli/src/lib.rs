//! Experiment harness for `lqproj-core`: JSON configurations, the worked
//! example reproducers, power-type probes and CSV/JSON output.

pub mod config;
pub mod error;
pub mod experiment;
pub mod probe;
pub mod reproduce;

pub use config::{Algorithm, ExperimentConfig, NamedSubspace, SpaceSpec, StopSpec};
pub use error::{CliError, CliResult};
pub use experiment::{run_experiment, run_regularity, RateSummary, RunOutcome, RunSummary};
pub use probe::{power_type_probe, power_type_probe_in, ProbeReport};
pub use reproduce::{run_example1, run_example2, Check, ExampleReport};
