//! Experiment runner: mini-batch training loops with periodic evaluation,
//! hyperparameter sweeps, and update-cost scaling measurements.

mod config;
mod optimizer;
pub mod output;
mod run;
mod scaling;
mod sweep;

pub use config::{
    DataSpec, ExperimentConfig, OptimizerSpec, ProblemSpec, ScheduleKind, DEFAULT_BATCH_SIZE,
    DEFAULT_ETA_GRID, DEFAULT_RHO_GRID,
};
pub use optimizer::Optimizer;
pub use run::{
    run_experiment, run_experiment_on, MetricRow, RunRecord, RunSummary, DIVERGENCE_THRESHOLD,
};
pub use scaling::{scaling_probe, OptimizerId, ScalingRow};
pub use sweep::{compare_runs, sweep, SweepResult};
