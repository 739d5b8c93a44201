//! Batch front end for the operator-splitting stochastic fractional
//! conservation-law solver: JSON run configs, scenario presets, CSV
//! emission with provenance sidecars, and the command implementations
//! behind the `fractsplit` binary.

pub mod config;
pub mod descriptor;
pub mod output;
pub mod runner;

pub use config::{parse_config, ConfigError, RunConfig, ScenarioConfig};
pub use descriptor::FnDescriptor;
pub use output::{
    emit_convergence_csv, emit_field_csv, emit_stats_csv, sidecar_path, RunMetadata,
};
pub use runner::{
    cmd_check_bounds, cmd_convergence, cmd_preset, cmd_simulate, format_verdicts, prepare,
    CliError, PreparedRun, THREADS_ENV,
};
