//! Fair clustering with cross-entropy fairness penalties, optimized by a
//! bound (majorize-minimize) scheme with closed-form simplex updates.
//!
//! ```
//! use fairclust::data::{kmeanspp_seed, make_synthetic, SyntheticKind, SYNTHETIC_DATA_SEED};
//! use fairclust::{solve, ClusteringProblem, SolverConfig};
//!
//! let data = make_synthetic(SyntheticKind::Equal, SYNTHETIC_DATA_SEED);
//! let demo = data.partition(None).unwrap();
//! let init = kmeanspp_seed(data.features(), 2, 3).unwrap();
//! let problem = ClusteringProblem::kmeans(data.features().clone(), 2).unwrap();
//! let result = solve(&problem, &demo, &init, &SolverConfig::default().with_lambda(10.0)).unwrap();
//! println!("balance {}", result.metrics.min_balance);
//! ```

pub mod data;
pub mod error;
pub mod eval;
pub mod fairness;
pub mod model;
pub mod objectives;
pub mod solver;

pub use error::{FairError, Result};
pub use model::{
    binarize, hard_labels, AffinityGraph, DemographicPartition, Matrix, Metrics, SoftAssignment,
    SolveResult, SolverConfig,
};
pub use objectives::{ClusteringProblem, Metric, ObjectiveKind};
pub use solver::{lambda_sweep, solve, EnergyBreakdown, SweepOutcome};
