//! Declarative experiments over generated instances.
//!
//! An [`ExperimentConfig`] (TOML) expands into a grid of instances. Each
//! instance is solved first by the reference solver, whose final objective
//! becomes the target for the others. Traces, a summary table and
//! plot-ready series are written to the output directory.

mod config;
mod plot;
mod presets;
mod run;

pub use config::{
    turn_fraction, Budgets, ExperimentConfig, SolutionGenerator, SolverEntry, SpectrumFamily, DESK_SCALE_LIMIT,
};
pub use plot::{emit_plot_data, PlotSeries};
pub use presets::{preset, presets, DESK_N};
pub use run::{
    build_instance, instance_plans, reached, run_experiment, run_experiment_with, ExperimentOutput, InstancePlan,
    RunOptions, RunSummary, SummaryRow, TraceRecord,
};

use thiserror::Error;

use crate::format::FormatError;
use crate::instance::InstanceError;
use crate::operator::OperatorError;
use crate::solution::SolutionError;
use crate::solvers::SolverError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
