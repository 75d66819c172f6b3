//! Seeded repeated experiments, aggregation, bound checks and artifact output.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{DatasetSource, ExperimentConfig, InitialPoint, SamplingChoice, StepRule};
pub use experiment::{
    estimate_r_rel, linear_phase_slope, resolve, run_experiment, run_resolved, run_sweep, BoundKind,
    ExperimentReport, ResolvedProblem, SweepParam, SweepPoint,
};
pub use output::{emit_outputs, emit_sweep_outputs};
