//! Dataset generation, seeded Monte Carlo sweeps, metrics and plot data.

pub mod config;
pub mod dataset;
pub mod plot;
pub mod runner;

pub use config::{ExperimentConfig, GridSource, Jitter, RetrainMode, TrainSnr};
pub use dataset::{
    generate_test_dataset, generate_train_dataset, generate_train_samples, simulate_record,
    TestSetSpec, TrajectoryRecord,
};
pub use plot::{emit_plot_data, plot_tables, Figure};
pub use runner::{
    load_grid, read_metrics, run_experiment, run_experiment_with_library, train_models,
    write_metrics, Failure, MetricsRow, RunReport,
};
