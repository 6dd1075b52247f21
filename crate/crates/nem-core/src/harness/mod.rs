//! Experiment configs, parameter sweeps and their outputs.

mod config;
mod plot;
mod sweep;

pub use config::{Algorithm, ConfigError, ExperimentConfig, GammaPolicy, CONFIG_HEADER};
pub use plot::{emit_plot_script, PlotStyle};
pub use sweep::{
    gamma_for, run_seed, run_single, run_sweep, theory_u, PhaseDiagramRow, RunError, RunRecord, SweepResult,
    ThresholdSet, PHASE_SCHEMA, RUNS_SCHEMA,
};
