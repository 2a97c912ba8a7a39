//! Balance metrics and experiment reports.

mod metrics;
mod report;

pub use metrics::{cluster_balance, min_balance};
pub use report::{
    k_sweep, prepare, run_experiment, sweep_curves, ExperimentReport, ExperimentSpec, KSweepRow,
    Prepared,
};
