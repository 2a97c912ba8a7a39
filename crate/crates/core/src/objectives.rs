//! Clustering objectives and the unary potentials of their bounds.
//!
//! For K-means and K-median the potentials are distances to prototypes
//! refit to the current soft assignment (weighted means, weighted
//! medoids). For Normalized Cut they are the gradient of the concave
//! relaxed objective at the current assignment.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FairError, Result};
use crate::model::{AffinityGraph, Matrix, SoftAssignment, MIN_ROWS_PER_TASK};

/// N×K matrix of per-point, per-cluster linear coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct UnaryPotentials {
    values: Matrix,
}

impl UnaryPotentials {
    pub fn new(values: Matrix) -> Result<Self> {
        if let Some(i) = values.as_slice().iter().position(|v| !v.is_finite()) {
            let k = values.ncols().max(1);
            return Err(FairError::InvalidArgument(format!(
                "non-finite potential at point {}, cluster {}",
                i / k,
                i % k
            )));
        }
        Ok(UnaryPotentials { values })
    }

    pub fn zeros(n_points: usize, n_clusters: usize) -> Self {
        UnaryPotentials {
            values: Matrix::zeros(n_points, n_clusters),
        }
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn row(&self, p: usize) -> &[f64] {
        self.values.row(p)
    }

    pub fn into_matrix(self) -> Matrix {
        self.values
    }

    /// `Σ_p s_p^t a_p`.
    pub fn linear_value(&self, soft: &SoftAssignment) -> f64 {
        (0..soft.n_points())
            .map(|p| dot(soft.row(p), self.values.row(p)))
            .sum()
    }
}

/// Cluster prototypes: centers for K-means, medoid point indices for
/// K-median.
#[derive(Debug, Clone, PartialEq)]
pub enum Prototypes {
    Centers(Matrix),
    Medoids(Vec<usize>),
}

/// Point distance used by K-median.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
    Chebyshev,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Metric::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Metric::Manhattan => diffs.sum(),
            Metric::Chebyshev => diffs.fold(0.0, f64::max),
        }
    }
}

/// Which clustering objective a problem optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    KMeans,
    KMedian,
    Ncut,
}

impl std::fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ObjectiveKind::KMeans => "kmeans",
            ObjectiveKind::KMedian => "kmedian",
            ObjectiveKind::Ncut => "ncut",
        })
    }
}

impl std::str::FromStr for ObjectiveKind {
    type Err = FairError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kmeans" | "k-means" => Ok(ObjectiveKind::KMeans),
            "kmedian" | "k-median" | "kmedians" => Ok(ObjectiveKind::KMedian),
            "ncut" => Ok(ObjectiveKind::Ncut),
            other => Err(FairError::InvalidArgument(format!(
                "unknown objective `{other}`"
            ))),
        }
    }
}

/// Data backing a clustering objective.
#[derive(Debug, Clone)]
pub enum Objective {
    KMeans { features: Matrix },
    KMedian { features: Matrix, metric: Metric },
    Ncut { graph: AffinityGraph },
}

/// Objective, its data and the number of clusters.
#[derive(Debug, Clone)]
pub struct ClusteringProblem {
    objective: Objective,
    n_clusters: usize,
}

impl ClusteringProblem {
    pub fn new(objective: Objective, n_clusters: usize) -> Result<Self> {
        if n_clusters == 0 {
            return Err(FairError::InvalidArgument("K must be at least 1".into()));
        }
        let n = match &objective {
            Objective::KMeans { features } | Objective::KMedian { features, .. } => {
                if !features.is_finite() {
                    return Err(FairError::InvalidArgument(
                        "features contain non-finite values".into(),
                    ));
                }
                features.nrows()
            }
            Objective::Ncut { graph } => graph.n_points(),
        };
        if n_clusters > n {
            return Err(FairError::InvalidArgument(format!(
                "K = {n_clusters} exceeds the number of points {n}"
            )));
        }
        Ok(ClusteringProblem {
            objective,
            n_clusters,
        })
    }

    pub fn kmeans(features: Matrix, n_clusters: usize) -> Result<Self> {
        ClusteringProblem::new(Objective::KMeans { features }, n_clusters)
    }

    pub fn kmedian(features: Matrix, n_clusters: usize, metric: Metric) -> Result<Self> {
        ClusteringProblem::new(Objective::KMedian { features, metric }, n_clusters)
    }

    pub fn ncut(graph: AffinityGraph, n_clusters: usize) -> Result<Self> {
        ClusteringProblem::new(Objective::Ncut { graph }, n_clusters)
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn kind(&self) -> ObjectiveKind {
        match self.objective {
            Objective::KMeans { .. } => ObjectiveKind::KMeans,
            Objective::KMedian { .. } => ObjectiveKind::KMedian,
            Objective::Ncut { .. } => ObjectiveKind::Ncut,
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn n_points(&self) -> usize {
        match &self.objective {
            Objective::KMeans { features } | Objective::KMedian { features, .. } => {
                features.nrows()
            }
            Objective::Ncut { graph } => graph.n_points(),
        }
    }
}

/// Bound potentials at `soft` together with the relaxed objective value
/// `F(S)` at the same point.
#[derive(Debug, Clone)]
pub struct ClusteringEval {
    pub potentials: UnaryPotentials,
    pub prototypes: Option<Prototypes>,
    pub value: f64,
}

/// Potentials and relaxed objective for whichever objective `problem` holds.
pub fn evaluate(problem: &ClusteringProblem, soft: &SoftAssignment, floor: f64) -> Result<ClusteringEval> {
    check_shape(problem, soft)?;
    match problem.objective() {
        Objective::KMeans { features } => {
            let (potentials, prototypes) = kmeans_potentials(features, soft, floor)?;
            let value = potentials.linear_value(soft);
            Ok(ClusteringEval {
                potentials,
                prototypes: Some(prototypes),
                value,
            })
        }
        Objective::KMedian { features, metric } => {
            let (potentials, prototypes) = kmedian_potentials(features, soft, *metric, floor)?;
            let value = potentials.linear_value(soft);
            Ok(ClusteringEval {
                potentials,
                prototypes: Some(prototypes),
                value,
            })
        }
        Objective::Ncut { graph } => {
            let parts = ncut_parts(graph, soft, floor);
            let value = soft.n_clusters() as f64
                - parts
                    .assoc
                    .iter()
                    .zip(&parts.volume)
                    .map(|(a, v)| a / v)
                    .sum::<f64>();
            Ok(ClusteringEval {
                potentials: parts.into_potentials(graph, soft)?,
                prototypes: None,
                value,
            })
        }
    }
}

fn check_shape(problem: &ClusteringProblem, soft: &SoftAssignment) -> Result<()> {
    if soft.n_points() != problem.n_points() {
        return Err(FairError::DimensionMismatch {
            what: "soft assignment rows",
            expected: problem.n_points(),
            got: soft.n_points(),
        });
    }
    if soft.n_clusters() != problem.n_clusters() {
        return Err(FairError::DimensionMismatch {
            what: "soft assignment columns",
            expected: problem.n_clusters(),
            got: soft.n_clusters(),
        });
    }
    Ok(())
}

fn check_features(features: &Matrix, soft: &SoftAssignment) -> Result<()> {
    if features.nrows() != soft.n_points() {
        return Err(FairError::DimensionMismatch {
            what: "feature rows",
            expected: soft.n_points(),
            got: features.nrows(),
        });
    }
    Ok(())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Weighted means `X^t S_k / 1^t S_k`; clusters lighter than `floor` are
/// reseeded at the point farthest from its nearest live center.
pub fn weighted_centers(features: &Matrix, soft: &SoftAssignment, floor: f64) -> Result<Matrix> {
    check_features(features, soft)?;
    let k = soft.n_clusters();
    let m = features.ncols();
    let mut sums = Matrix::zeros(k, m);
    let mut mass = vec![0.0; k];
    for (p, x) in features.rows_iter().enumerate() {
        for (c, &s) in soft.row(p).iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            mass[c] += s;
            for (acc, xi) in sums.row_mut(c).iter_mut().zip(x) {
                *acc += s * xi;
            }
        }
    }
    let mut live = vec![true; k];
    for c in 0..k {
        if mass[c] < floor {
            live[c] = false;
        } else {
            let inv = 1.0 / mass[c];
            sums.row_mut(c).iter_mut().for_each(|v| *v *= inv);
        }
    }
    for c in 0..k {
        if live[c] {
            continue;
        }
        let far = farthest_point(features, |x| {
            (0..k)
                .filter(|&o| live[o])
                .map(|o| squared_distance(x, sums.row(o)))
                .fold(f64::INFINITY, f64::min)
        });
        warn!("cluster {c} is empty (mass {:.3e}); reseeding its center at point {far}", mass[c]);
        sums.row_mut(c).copy_from_slice(features.row(far));
        live[c] = true;
    }
    Ok(sums)
}

// Point maximizing `nearest(x)`; an infinite value (no live prototype yet)
// selects the first point.
fn farthest_point(features: &Matrix, nearest: impl Fn(&[f64]) -> f64 + Sync) -> usize {
    let dists: Vec<f64> = (0..features.nrows())
        .into_par_iter()
        .with_min_len(MIN_ROWS_PER_TASK)
        .map(|p| nearest(features.row(p)))
        .collect();
    let mut best = 0;
    for (p, &d) in dists.iter().enumerate() {
        if d > dists[best] {
            best = p;
        }
    }
    best
}

/// K-means potentials `a_{p,k} = ||x_p - c_k||^2` around weighted means.
pub fn kmeans_potentials(
    features: &Matrix,
    soft: &SoftAssignment,
    floor: f64,
) -> Result<(UnaryPotentials, Prototypes)> {
    let centers = weighted_centers(features, soft, floor)?;
    let k = centers.nrows();
    let mut values = vec![0.0; features.nrows() * k];
    values
        .par_chunks_mut(k)
        .enumerate()
        .with_min_len(MIN_ROWS_PER_TASK)
        .for_each(|(p, row)| {
            let x = features.row(p);
            for (c, v) in row.iter_mut().enumerate() {
                *v = squared_distance(x, centers.row(c));
            }
        });
    let pot = UnaryPotentials::new(Matrix::new(features.nrows(), k, values)?)?;
    Ok((pot, Prototypes::Centers(centers)))
}

/// For every candidate point `q` and cluster `k`, `Σ_p s_{p,k} d(x_p, x_q)`.
pub fn medoid_costs(features: &Matrix, soft: &SoftAssignment, metric: Metric) -> Result<Matrix> {
    check_features(features, soft)?;
    let n = features.nrows();
    let k = soft.n_clusters();
    let mut costs = vec![0.0; n * k];
    costs.par_chunks_mut(k).enumerate().for_each(|(q, row)| {
        let xq = features.row(q);
        for p in 0..n {
            let d = metric.distance(features.row(p), xq);
            for (acc, s) in row.iter_mut().zip(soft.row(p)) {
                *acc += s * d;
            }
        }
    });
    Matrix::new(n, k, costs)
}

/// Weighted medoids: per cluster the data point minimizing the
/// assignment-weighted distance sum. Ties go to the lowest point index.
pub fn weighted_medoids(
    features: &Matrix,
    soft: &SoftAssignment,
    metric: Metric,
    floor: f64,
) -> Result<Vec<usize>> {
    let costs = medoid_costs(features, soft, metric)?;
    let k = soft.n_clusters();
    let mass = soft.cluster_masses();
    let mut medoids: Vec<Option<usize>> = (0..k)
        .map(|c| {
            (mass[c] >= floor).then(|| {
                let mut best = 0;
                for q in 1..features.nrows() {
                    if costs.get(q, c) < costs.get(best, c) {
                        best = q;
                    }
                }
                best
            })
        })
        .collect();
    for c in 0..k {
        if medoids[c].is_some() {
            continue;
        }
        let live: Vec<usize> = medoids.iter().flatten().copied().collect();
        let far = farthest_point(features, |x| {
            live.iter()
                .map(|&m| metric.distance(x, features.row(m)))
                .fold(f64::INFINITY, f64::min)
        });
        warn!("cluster {c} is empty (mass {:.3e}); reseeding its medoid at point {far}", mass[c]);
        medoids[c] = Some(far);
    }
    Ok(medoids.into_iter().flatten().collect())
}

/// K-median potentials `a_{p,k} = d(x_p, c_k)` around weighted medoids.
pub fn kmedian_potentials(
    features: &Matrix,
    soft: &SoftAssignment,
    metric: Metric,
    floor: f64,
) -> Result<(UnaryPotentials, Prototypes)> {
    let medoids = weighted_medoids(features, soft, metric, floor)?;
    let k = medoids.len();
    let mut values = vec![0.0; features.nrows() * k];
    values
        .par_chunks_mut(k)
        .enumerate()
        .with_min_len(MIN_ROWS_PER_TASK)
        .for_each(|(p, row)| {
            let x = features.row(p);
            for (v, &m) in row.iter_mut().zip(&medoids) {
                *v = metric.distance(x, features.row(m));
            }
        });
    let pot = UnaryPotentials::new(Matrix::new(features.nrows(), k, values)?)?;
    Ok((pot, Prototypes::Medoids(medoids)))
}

struct NcutParts {
    /// `W S` (N×K)
    ws: Matrix,
    /// clamped `d^t S_k`
    volume: Vec<f64>,
    /// `S_k^t W S_k`
    assoc: Vec<f64>,
}

impl NcutParts {
    fn into_potentials(self, graph: &AffinityGraph, soft: &SoftAssignment) -> Result<UnaryPotentials> {
        let k = soft.n_clusters();
        let z: Vec<f64> = self
            .assoc
            .iter()
            .zip(&self.volume)
            .map(|(a, v)| a / (v * v))
            .collect();
        let mut values = vec![0.0; soft.n_points() * k];
        let ws = &self.ws;
        let volume = &self.volume;
        values
            .par_chunks_mut(k)
            .enumerate()
            .with_min_len(MIN_ROWS_PER_TASK)
            .for_each(|(p, row)| {
                let d = graph.degree(p);
                for (c, v) in row.iter_mut().enumerate() {
                    *v = d * z[c] - 2.0 * ws.get(p, c) / volume[c];
                }
            });
        UnaryPotentials::new(Matrix::new(soft.n_points(), k, values)?)
    }
}

fn ncut_parts(graph: &AffinityGraph, soft: &SoftAssignment, floor: f64) -> NcutParts {
    let n = graph.n_points();
    let k = soft.n_clusters();
    let mut ws = vec![0.0; n * k];
    ws.par_chunks_mut(k).enumerate().with_min_len(MIN_ROWS_PER_TASK).for_each(|(p, row)| {
        for (q, w) in graph.neighbors(p) {
            for (acc, s) in row.iter_mut().zip(soft.row(q)) {
                *acc += w * s;
            }
        }
    });
    let ws = Matrix::new(n, k, ws).expect("buffer sized n*k");
    let mut volume = vec![0.0; k];
    let mut assoc = vec![0.0; k];
    for p in 0..n {
        let d = graph.degree(p);
        for c in 0..k {
            let s = soft.get(p, c);
            volume[c] += d * s;
            assoc[c] += s * ws.get(p, c);
        }
    }
    for v in &mut volume {
        *v = v.max(floor);
    }
    NcutParts { ws, volume, assoc }
}

/// Normalized-cut potentials
/// `a_{p,k} = d_p z_k - 2 Σ_q w(p,q) s_{q,k} / d^t S_k`, with
/// `z_k = S_k^t W S_k / (d^t S_k)^2`.
pub fn ncut_potentials(
    graph: &AffinityGraph,
    soft: &SoftAssignment,
    floor: f64,
) -> Result<UnaryPotentials> {
    if graph.n_points() != soft.n_points() {
        return Err(FairError::DimensionMismatch {
            what: "graph vertices",
            expected: soft.n_points(),
            got: graph.n_points(),
        });
    }
    ncut_parts(graph, soft, floor).into_potentials(graph, soft)
}

/// Objective of a hard clustering.
///
/// Empty clusters contribute nothing to K-means and K-median and have a
/// zero association ratio in Ncut.
pub fn discrete_objective(problem: &ClusteringProblem, labels: &[usize]) -> Result<f64> {
    let k = problem.n_clusters();
    if labels.len() != problem.n_points() {
        return Err(FairError::DimensionMismatch {
            what: "labels",
            expected: problem.n_points(),
            got: labels.len(),
        });
    }
    if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
        return Err(FairError::LabelOutOfRange { index, label, k });
    }
    let members = |c: usize| labels.iter().enumerate().filter(move |(_, &l)| l == c).map(|(p, _)| p);
    Ok(match problem.objective() {
        Objective::KMeans { features } => (0..k)
            .map(|c| {
                let idx: Vec<usize> = members(c).collect();
                if idx.is_empty() {
                    return 0.0;
                }
                let mut center = vec![0.0; features.ncols()];
                for &p in &idx {
                    for (acc, x) in center.iter_mut().zip(features.row(p)) {
                        *acc += x;
                    }
                }
                center.iter_mut().for_each(|v| *v /= idx.len() as f64);
                idx.iter()
                    .map(|&p| squared_distance(features.row(p), &center))
                    .sum::<f64>()
            })
            .sum(),
        Objective::KMedian { features, metric } => {
            let soft = crate::model::binarize(labels, k)?;
            let costs = medoid_costs(features, &soft, *metric)?;
            (0..k)
                .map(|c| {
                    if members(c).next().is_none() {
                        return 0.0;
                    }
                    (0..features.nrows())
                        .map(|q| costs.get(q, c))
                        .fold(f64::INFINITY, f64::min)
                })
                .sum()
        }
        Objective::Ncut { graph } => {
            let ratio_sum: f64 = (0..k)
                .map(|c| {
                    let mut vol = 0.0;
                    let mut assoc = 0.0;
                    for p in members(c) {
                        vol += graph.degree(p);
                        assoc += graph
                            .neighbors(p)
                            .filter(|&(q, _)| labels[q] == c)
                            .map(|(_, w)| w)
                            .sum::<f64>();
                    }
                    if vol > 0.0 {
                        assoc / vol
                    } else {
                        0.0
                    }
                })
                .sum();
            k as f64 - ratio_sum
        }
    })
}
