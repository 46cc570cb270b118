//! Experiment configuration, sweeps and CSV output.

pub mod config;
pub mod csvio;
pub mod sweep;

pub use config::{ExperimentConfig, SchemeName};
pub use csvio::emit_csv;
pub use sweep::{run_sweep, simulate, trial_rng, SweepResult, SweepRow};
