//! Datasets: synthetic generation, CSV ingestion, preprocessing, kNN graphs
//! and K-means++ seeding.

mod affinity;
mod loader;
mod preprocess;
mod seeding;
mod synthetic;

pub use affinity::knn_affinity;
pub use loader::{
    export_csv, load_csv, load_profile, resolve_profile, CsvSource, DataSource, GroupSpec,
    Profile, PRESET_NAMES,
};
pub use preprocess::preprocess;
pub use seeding::kmeanspp_seed;
pub use synthetic::{
    make_synthetic, make_synthetic_with, SyntheticKind, SyntheticParams, SYNTHETIC_DATA_SEED,
};

use crate::error::{FairError, Result};
use crate::model::{check_probability_vector, DemographicPartition, Matrix};

/// Feature matrix plus the sensitive attribute of every row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    features: Matrix,
    group_of: Vec<usize>,
    n_groups: usize,
    group_names: Vec<String>,
    suggested_targets: Vec<f64>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Matrix,
        group_of: Vec<usize>,
        group_names: Vec<String>,
        suggested_targets: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        if group_of.len() != features.nrows() {
            return Err(FairError::DimensionMismatch {
                what: "group column",
                expected: features.nrows(),
                got: group_of.len(),
            });
        }
        let n_groups = group_names.len();
        if suggested_targets.len() != n_groups {
            return Err(FairError::DimensionMismatch {
                what: "suggested targets",
                expected: n_groups,
                got: suggested_targets.len(),
            });
        }
        check_probability_vector("suggested targets", &suggested_targets)?;
        if let Some((p, &g)) = group_of.iter().enumerate().find(|(_, &g)| g >= n_groups) {
            return Err(FairError::InvalidPartition(format!(
                "row {p} has group {g} but only {n_groups} groups are defined"
            )));
        }
        if !features.is_finite() {
            return Err(FairError::InvalidArgument(format!(
                "dataset `{name}` contains non-finite feature values"
            )));
        }
        Ok(Self {
            name,
            features,
            group_of,
            n_groups,
            group_names,
            suggested_targets,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn group_of(&self) -> &[usize] {
        &self.group_of
    }

    pub fn n_points(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn suggested_targets(&self) -> &[f64] {
        &self.suggested_targets
    }

    pub fn group_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_groups];
        self.group_of.iter().for_each(|&g| counts[g] += 1);
        counts
    }

    /// Demographic partition with the suggested targets, or `targets` when given.
    pub fn partition(&self, targets: Option<&[f64]>) -> Result<DemographicPartition> {
        let u = targets.unwrap_or(&self.suggested_targets).to_vec();
        DemographicPartition::new(self.group_of.clone(), self.n_groups, u)
    }

    pub fn with_features(mut self, features: Matrix) -> Result<Self> {
        if features.nrows() != self.n_points() {
            return Err(FairError::DimensionMismatch {
                what: "replacement features",
                expected: self.n_points(),
                got: features.nrows(),
            });
        }
        self.features = features;
        Ok(self)
    }

    /// Keeps the first `n` rows.
    pub fn truncate(mut self, n: usize) -> Self {
        if n < self.n_points() {
            let m = self.n_features();
            let mut data = self.features.into_vec();
            data.truncate(n * m);
            self.features = Matrix::new(n, m, data).expect("prefix of a valid matrix");
            self.group_of.truncate(n);
        }
        self
    }
}
