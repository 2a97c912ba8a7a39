//! Shared domain types: dense matrices, soft assignments, demographic
//! partitions, cluster marginals, sparse affinity graphs and solver settings.
//!
//! Labels are zero-based cluster indices throughout the crate.

use serde::{Deserialize, Serialize};

use crate::error::{FairError, Result};
use crate::solver::EnergyBreakdown;

/// Tolerance used to validate row sums of probability rows.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Smallest number of rows handed to one rayon task in per-point loops.
pub(crate) const MIN_ROWS_PER_TASK: usize = 512;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(FairError::DimensionMismatch {
                what: "matrix buffer",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(FairError::DimensionMismatch {
                    what: "matrix row",
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        let cols = self.cols.max(1);
        self.data.chunks_exact(cols).take(self.rows)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Column `j` copied out as a vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Column sums accumulated in row order.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.rows_iter() {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// N×K row-stochastic matrix of cluster membership probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment {
    probs: Matrix,
}

impl SoftAssignment {
    /// Validates the simplex invariant on every row.
    pub fn new(probs: Matrix) -> Result<Self> {
        for (p, row) in probs.rows_iter().enumerate() {
            check_simplex_row(row).map_err(|detail| FairError::NotOnSimplex {
                what: "soft assignment row",
                detail: format!("row {p}: {detail}"),
            })?;
        }
        Ok(SoftAssignment { probs })
    }

    pub(crate) fn from_matrix_unchecked(probs: Matrix) -> Self {
        debug_assert!(probs
            .rows_iter()
            .all(|r| (r.iter().sum::<f64>() - 1.0).abs() <= 1e-6));
        SoftAssignment { probs }
    }

    pub fn uniform(n_points: usize, n_clusters: usize) -> Self {
        SoftAssignment {
            probs: Matrix::filled(n_points, n_clusters, 1.0 / n_clusters as f64),
        }
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.probs.nrows()
    }

    #[inline]
    pub fn n_clusters(&self) -> usize {
        self.probs.ncols()
    }

    #[inline]
    pub fn row(&self, p: usize) -> &[f64] {
        self.probs.row(p)
    }

    #[inline]
    pub fn get(&self, p: usize, k: usize) -> f64 {
        self.probs.get(p, k)
    }

    pub fn probs(&self) -> &Matrix {
        &self.probs
    }

    pub fn into_matrix(self) -> Matrix {
        self.probs
    }

    /// Cluster masses `1^t S_k`.
    pub fn cluster_masses(&self) -> Vec<f64> {
        self.probs.column_sums()
    }

    /// Replaces every row at once from a buffer produced by a per-point map.
    pub fn replace_rows(&mut self, rows: Vec<f64>) -> Result<()> {
        let updated = SoftAssignment::new(Matrix::new(
            self.n_points(),
            self.n_clusters(),
            rows,
        )?)?;
        *self = updated;
        Ok(())
    }

    /// Largest deviation of a row sum from one.
    pub fn max_row_sum_error(&self) -> f64 {
        self.probs
            .rows_iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn check_simplex_row(row: &[f64]) -> std::result::Result<(), String> {
    if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(format!("entry {v} outside [0, 1]"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(format!("sums to {sum}"));
    }
    Ok(())
}

/// Checks that `v` is a probability vector within [`SIMPLEX_TOL`].
pub fn check_probability_vector(what: &'static str, v: &[f64]) -> Result<()> {
    check_simplex_row(v).map_err(|detail| FairError::NotOnSimplex { what, detail })
}

/// Per-point argmax; ties go to the lowest cluster index.
pub fn hard_labels(soft: &SoftAssignment) -> Vec<usize> {
    soft.probs.rows_iter().map(argmax_first).collect()
}

pub(crate) fn argmax_first(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// Places every point at the simplex vertex of its label.
pub fn binarize(labels: &[usize], n_clusters: usize) -> Result<SoftAssignment> {
    let mut probs = Matrix::zeros(labels.len(), n_clusters);
    for (p, &l) in labels.iter().enumerate() {
        if l >= n_clusters {
            return Err(FairError::LabelOutOfRange {
                index: p,
                label: l,
                k: n_clusters,
            });
        }
        probs.set(p, l, 1.0);
    }
    Ok(SoftAssignment { probs })
}

/// Disjoint demographic groups over the points together with target
/// proportions `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemographicPartition {
    group_of: Vec<usize>,
    n_groups: usize,
    targets: Vec<f64>,
    counts: Vec<usize>,
}

impl DemographicPartition {
    pub fn new(group_of: Vec<usize>, n_groups: usize, targets: Vec<f64>) -> Result<Self> {
        if n_groups == 0 {
            return Err(FairError::InvalidPartition("no groups".into()));
        }
        if targets.len() != n_groups {
            return Err(FairError::DimensionMismatch {
                what: "target proportions",
                expected: n_groups,
                got: targets.len(),
            });
        }
        if let Some(&mu) = targets.iter().find(|&&mu| !(mu > 0.0 && mu.is_finite())) {
            return Err(FairError::InvalidPartition(format!(
                "target proportion {mu} is not strictly positive"
            )));
        }
        let total: f64 = targets.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(FairError::InvalidPartition(format!(
                "target proportions sum to {total}"
            )));
        }
        let mut counts = vec![0usize; n_groups];
        for (p, &g) in group_of.iter().enumerate() {
            if g >= n_groups {
                return Err(FairError::InvalidPartition(format!(
                    "point {p} has group {g} but only {n_groups} groups exist"
                )));
            }
            counts[g] += 1;
        }
        Ok(DemographicPartition {
            group_of,
            n_groups,
            targets,
            counts,
        })
    }

    /// Builds the partition from J binary indicator vectors `V_j`.
    pub fn from_indicators(indicators: &[Vec<bool>], targets: Vec<f64>) -> Result<Self> {
        let n = indicators.first().map_or(0, Vec::len);
        let mut group_of = vec![usize::MAX; n];
        for (j, v) in indicators.iter().enumerate() {
            if v.len() != n {
                return Err(FairError::DimensionMismatch {
                    what: "group indicator",
                    expected: n,
                    got: v.len(),
                });
            }
            for (p, _) in v.iter().enumerate().filter(|(_, &b)| b) {
                if group_of[p] != usize::MAX {
                    return Err(FairError::InvalidPartition(format!(
                        "point {p} belongs to groups {} and {j}",
                        group_of[p]
                    )));
                }
                group_of[p] = j;
            }
        }
        if let Some(p) = group_of.iter().position(|&g| g == usize::MAX) {
            return Err(FairError::InvalidPartition(format!(
                "point {p} belongs to no group"
            )));
        }
        DemographicPartition::new(group_of, indicators.len(), targets)
    }

    /// Partition whose targets are the dataset-wide group proportions.
    pub fn with_empirical_targets(group_of: Vec<usize>, n_groups: usize) -> Result<Self> {
        let n = group_of.len().max(1) as f64;
        let mut counts = vec![0usize; n_groups];
        for &g in &group_of {
            if g < n_groups {
                counts[g] += 1;
            }
        }
        let targets = counts.iter().map(|&c| c as f64 / n).collect();
        DemographicPartition::new(group_of, n_groups, targets)
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.group_of.len()
    }

    #[inline]
    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    #[inline]
    pub fn group_of(&self, p: usize) -> usize {
        self.group_of[p]
    }

    pub fn groups(&self) -> &[usize] {
        &self.group_of
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Indicator vector `V_j`.
    pub fn indicator(&self, j: usize) -> Vec<bool> {
        self.group_of.iter().map(|&g| g == j).collect()
    }

    pub fn empirical_proportions(&self) -> Vec<f64> {
        let n = self.n_points().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub(crate) fn check_points(&self, n_points: usize) -> Result<()> {
        if self.n_points() != n_points {
            return Err(FairError::DimensionMismatch {
                what: "demographic partition",
                expected: n_points,
                got: self.n_points(),
            });
        }
        Ok(())
    }
}

/// K×J matrix of demographic proportions within each cluster, `P(j|k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMarginals {
    values: Matrix,
}

impl ClusterMarginals {
    pub(crate) fn new(values: Matrix) -> Self {
        ClusterMarginals { values }
    }

    pub fn n_clusters(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_groups(&self) -> usize {
        self.values.ncols()
    }

    /// `P_k` for cluster `k`.
    pub fn cluster(&self, k: usize) -> &[f64] {
        self.values.row(k)
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.values.get(k, j)
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }
}

/// Sparse symmetric nonnegative affinity matrix `W` (CSR) with its degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
}

impl AffinityGraph {
    /// Builds the graph from per-row adjacency lists. Each row is sorted by
    /// column internally; duplicates, self loops, negative or non-finite
    /// weights, asymmetry and isolated vertices are rejected.
    pub fn from_adjacency(mut rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut weights = Vec::new();
        row_ptr.push(0);
        for (p, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(q, _)| q);
            for (i, &(q, w)) in row.iter().enumerate() {
                if q >= n {
                    return Err(FairError::InvalidGraph(format!(
                        "edge ({p}, {q}) points outside {n} vertices"
                    )));
                }
                if q == p {
                    return Err(FairError::InvalidGraph(format!("self loop at vertex {p}")));
                }
                if !(w.is_finite() && w >= 0.0) {
                    return Err(FairError::InvalidGraph(format!(
                        "weight {w} on edge ({p}, {q})"
                    )));
                }
                if i > 0 && row[i - 1].0 == q {
                    return Err(FairError::InvalidGraph(format!(
                        "duplicate edge ({p}, {q})"
                    )));
                }
                col_idx.push(q);
                weights.push(w);
            }
            row_ptr.push(col_idx.len());
        }
        let mut graph = AffinityGraph {
            row_ptr,
            col_idx,
            weights,
            degrees: Vec::new(),
        };
        for p in 0..n {
            for (q, w) in graph.neighbors(p) {
                if graph.weight(q, p) != w {
                    return Err(FairError::InvalidGraph(format!(
                        "asymmetric weights between {p} and {q}"
                    )));
                }
            }
        }
        graph.degrees = (0..n).map(|p| graph.neighbors(p).map(|(_, w)| w).sum()).collect();
        if let Some(p) = graph.degrees.iter().position(|&d| d <= 0.0) {
            return Err(FairError::InvalidGraph(format!("vertex {p} is isolated")));
        }
        Ok(graph)
    }

    /// Builds the graph from a dense square matrix, keeping nonzero entries.
    pub fn from_dense(w: &Matrix) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(FairError::DimensionMismatch {
                what: "dense affinity",
                expected: w.nrows(),
                got: w.ncols(),
            });
        }
        let rows = w
            .rows_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(q, &v)| (q, v))
                    .collect()
            })
            .collect();
        AffinityGraph::from_adjacency(rows)
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.degrees.len()
    }

    pub fn n_stored(&self) -> usize {
        self.col_idx.len()
    }

    #[inline]
    pub fn degree(&self, p: usize) -> f64 {
        self.degrees[p]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn neighbors(&self, p: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[p]..self.row_ptr[p + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// `w(p, q)`, zero when the edge is absent.
    pub fn weight(&self, p: usize, q: usize) -> f64 {
        let range = self.row_ptr[p]..self.row_ptr[p + 1];
        match self.col_idx[range.clone()].binary_search(&q) {
            Ok(i) => self.weights[range.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.n_points();
        let mut m = Matrix::zeros(n, n);
        for p in 0..n {
            for (q, w) in self.neighbors(p) {
                m.set(p, q, w);
            }
        }
        m
    }
}

/// Solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Trade-off multiplier on the fairness penalty.
    pub lambda: f64,
    /// Lipschitz constant of the convex part of the fairness term.
    pub lipschitz_l: f64,
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub rng_seed: u64,
    /// Lower clamp on cluster and cluster-group masses.
    pub marginal_floor: f64,
    /// Restart each outer iteration from `softmax(-a_p)`. When false only the
    /// first outer iteration does; later ones continue from the inner state.
    pub reinit_each_outer: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: 0.0,
            lipschitz_l: 2.0,
            inner_tol: 1e-6,
            outer_tol: 1e-6,
            max_inner: 1000,
            max_outer: 100,
            rng_seed: 0,
            marginal_floor: 1e-10,
            reinit_each_outer: true,
        }
    }
}

impl SolverConfig {
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(FairError::InvalidConfig(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        if !(self.lipschitz_l > 0.0 && self.lipschitz_l.is_finite()) {
            return Err(FairError::InvalidConfig(format!(
                "lipschitz constant must be positive, got {}",
                self.lipschitz_l
            )));
        }
        for (name, tol) in [
            ("inner_tol", self.inner_tol),
            ("outer_tol", self.outer_tol),
            ("marginal_floor", self.marginal_floor),
        ] {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(FairError::InvalidConfig(format!(
                    "{name} must be positive, got {tol}"
                )));
            }
        }
        if self.max_inner == 0 || self.max_outer == 0 {
            return Err(FairError::InvalidConfig(
                "iteration limits must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the outer-iteration energy trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub outer: usize,
    pub energy: EnergyBreakdown,
}

/// Quality measures of the final hard clustering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub discrete_objective: f64,
    pub fairness_error: f64,
    pub min_balance: f64,
}

/// Outcome of one solver run.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub labels: Vec<usize>,
    pub soft: SoftAssignment,
    pub energy_trace: Vec<EnergyRecord>,
    pub metrics: Metrics,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Outer iterations whose energy rose by more than the relative slack.
    pub monotonicity_violations: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soft(rows: &[&[f64]]) -> SoftAssignment {
        SoftAssignment::new(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn hard_labels_picks_vertex_and_breaks_ties_low() {
        assert_eq!(hard_labels(&soft(&[&[1.0, 0.0]])), vec![0]);
        assert_eq!(hard_labels(&soft(&[&[0.5, 0.5]])), vec![0]);
        assert_eq!(hard_labels(&soft(&[&[0.2, 0.7, 0.1]])), vec![1]);
    }

    #[test]
    fn binarize_builds_vertices() {
        let s = binarize(&[0, 1], 2).unwrap();
        assert_eq!(s.probs().as_slice(), &[1.0, 0.0, 0.0, 1.0]);
        let s = binarize(&[0, 0, 0], 2).unwrap();
        assert_eq!(s.probs().column(0), vec![1.0; 3]);
        assert_eq!(s.probs().column(1), vec![0.0; 3]);
        assert!(matches!(
            binarize(&[0, 2], 2),
            Err(FairError::LabelOutOfRange { index: 1, label: 2, k: 2 })
        ));
    }

    #[test]
    fn soft_assignment_rejects_off_simplex_rows() {
        let bad = Matrix::from_rows(&[[0.6, 0.6]]).unwrap();
        assert!(SoftAssignment::new(bad).is_err());
        let neg = Matrix::from_rows(&[[1.5, -0.5]]).unwrap();
        assert!(SoftAssignment::new(neg).is_err());
    }

    #[test]
    fn partition_validation() {
        assert!(DemographicPartition::new(vec![0, 1, 1], 2, vec![0.5, 0.5]).is_ok());
        assert!(DemographicPartition::new(vec![0, 2], 2, vec![0.5, 0.5]).is_err());
        assert!(DemographicPartition::new(vec![0, 1], 2, vec![0.6, 0.5]).is_err());
        assert!(DemographicPartition::new(vec![0, 1], 2, vec![1.0, 0.0]).is_err());

        let ok = DemographicPartition::from_indicators(
            &[vec![true, false, true], vec![false, true, false]],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert_eq!(ok.groups(), &[0, 1, 0]);
        assert_eq!(ok.counts(), &[2, 1]);
        let overlap = DemographicPartition::from_indicators(
            &[vec![true, true], vec![false, true]],
            vec![0.5, 0.5],
        );
        assert!(overlap.is_err());
        let uncovered = DemographicPartition::from_indicators(
            &[vec![true, false], vec![false, false]],
            vec![0.5, 0.5],
        );
        assert!(uncovered.is_err());
    }

    #[test]
    fn graph_validation() {
        let w = Matrix::from_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 2.0], [0.0, 2.0, 0.0]]).unwrap();
        let g = AffinityGraph::from_dense(&w).unwrap();
        assert_eq!(g.degrees(), &[1.0, 3.0, 2.0]);
        assert_eq!(g.weight(2, 1), 2.0);
        assert_eq!(g.weight(0, 2), 0.0);
        assert_eq!(g.to_dense(), w);

        let asym = Matrix::from_rows(&[[0.0, 1.0], [2.0, 0.0]]).unwrap();
        assert!(AffinityGraph::from_dense(&asym).is_err());
        let diag = Matrix::from_rows(&[[1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(AffinityGraph::from_dense(&diag).is_err());
        let isolated =
            Matrix::from_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]).unwrap();
        assert!(AffinityGraph::from_dense(&isolated).is_err());
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = SolverConfig::default();
        assert_eq!(c.lipschitz_l, 2.0);
        assert_eq!(c.inner_tol, 1e-6);
        assert_eq!(c.max_inner, 1000);
        assert_eq!(c.max_outer, 100);
        assert_eq!(c.marginal_floor, 1e-10);
        assert!(c.validate().is_ok());
        let bad = SolverConfig {
            lipschitz_l: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(SolverConfig::default().with_lambda(-1.0).validate().is_err());
    }
}
