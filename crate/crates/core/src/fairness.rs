//! KL fairness penalty: cluster marginals, the fairness error, its
//! cross-entropy form and the linear bound potentials driving the
//! per-point updates.
//!
//! Masses `1^t S_k` and `V_j^t S_k` are accumulated in point order by a
//! single sequential pass so that results do not depend on thread count.
//! A cluster whose mass falls below the floor is treated as carrying the
//! target mix `U`, so it contributes nothing to the fairness error.

use rayon::prelude::*;

use crate::error::{FairError, Result};
use crate::model::{
    check_probability_vector, ClusterMarginals, DemographicPartition, Matrix, SoftAssignment,
    SolverConfig, MIN_ROWS_PER_TASK,
};
use crate::objectives::UnaryPotentials;

/// Cluster masses `1^t S_k` and cluster-group masses `V_j^t S_k` (K×J).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMasses {
    pub cluster: Vec<f64>,
    pub group: Matrix,
}

pub fn group_masses(soft: &SoftAssignment, demo: &DemographicPartition) -> Result<GroupMasses> {
    demo.check_points(soft.n_points())?;
    let k = soft.n_clusters();
    let mut cluster = vec![0.0; k];
    let mut group = Matrix::zeros(k, demo.n_groups());
    for p in 0..soft.n_points() {
        let g = demo.group_of(p);
        for (c, &s) in soft.row(p).iter().enumerate() {
            cluster[c] += s;
            let cell = group.get(c, g) + s;
            group.set(c, g, cell);
        }
    }
    Ok(GroupMasses { cluster, group })
}

fn marginals_from_masses(masses: &GroupMasses, targets: &[f64], floor: f64) -> Matrix {
    let j = targets.len();
    let mut values = Matrix::zeros(masses.cluster.len(), j);
    for (k, &mass) in masses.cluster.iter().enumerate() {
        let row = values.row_mut(k);
        if mass < floor {
            row.copy_from_slice(targets);
            continue;
        }
        let clamped: Vec<f64> = masses.group.row(k).iter().map(|&n| n.max(floor)).collect();
        let total: f64 = clamped.iter().sum();
        for (dst, c) in row.iter_mut().zip(&clamped) {
            *dst = c / total;
        }
    }
    values
}

/// `P(j|k) = V_j^t S_k / 1^t S_k` with floor-clamped masses.
pub fn cluster_marginals(
    soft: &SoftAssignment,
    demo: &DemographicPartition,
    floor: f64,
) -> Result<ClusterMarginals> {
    let masses = group_masses(soft, demo)?;
    Ok(ClusterMarginals::new(marginals_from_masses(
        &masses,
        demo.targets(),
        floor,
    )))
}

/// `D_KL(u || p) = Σ_j u_j log(u_j / p_j)` in nats, with `0 log 0 = 0` and
/// `p_j` clamped below at `floor`.
pub fn kl_divergence(u: &[f64], p: &[f64], floor: f64) -> Result<f64> {
    if u.len() != p.len() {
        return Err(FairError::DimensionMismatch {
            what: "KL divergence operands",
            expected: u.len(),
            got: p.len(),
        });
    }
    check_probability_vector("KL left operand", u)?;
    check_probability_vector("KL right operand", p)?;
    Ok(kl_unchecked(u, p, floor))
}

fn kl_unchecked(u: &[f64], p: &[f64], floor: f64) -> f64 {
    u.iter()
        .zip(p)
        .filter(|(&uj, _)| uj > 0.0)
        .map(|(&uj, &pj)| uj * (uj / pj.max(floor)).ln())
        .sum()
}

fn cross_entropy(u: &[f64], p: &[f64], floor: f64) -> f64 {
    u.iter()
        .zip(p)
        .map(|(&uj, &pj)| -uj * pj.max(floor).ln())
        .sum()
}

/// Sum over clusters of `D_KL(U || P_k)`.
pub fn fairness_error(
    soft: &SoftAssignment,
    demo: &DemographicPartition,
    floor: f64,
) -> Result<f64> {
    let marg = cluster_marginals(soft, demo, floor)?;
    Ok((0..marg.n_clusters())
        .map(|k| kl_unchecked(demo.targets(), marg.cluster(k), floor))
        .sum())
}

/// Fairness error of a hard clustering.
pub fn fairness_error_of_labels(
    labels: &[usize],
    n_clusters: usize,
    demo: &DemographicPartition,
    floor: f64,
) -> Result<f64> {
    let soft = crate::model::binarize(labels, n_clusters)?;
    fairness_error(&soft, demo, floor)
}

/// Cross-entropy penalty `Σ_k Σ_j -μ_j log P(j|k)`.
pub fn fairness_penalty(
    soft: &SoftAssignment,
    demo: &DemographicPartition,
    floor: f64,
) -> Result<f64> {
    let marg = cluster_marginals(soft, demo, floor)?;
    Ok((0..marg.n_clusters())
        .map(|k| cross_entropy(demo.targets(), marg.cluster(k), floor))
        .sum())
}

/// Gradient of [`fairness_penalty`] with respect to every `s_{p,k}`:
/// `Σ_j μ_j / 1^t S_k - μ_{g(p)} / V_{g(p)}^t S_k`.
pub fn fairness_penalty_gradient(
    soft: &SoftAssignment,
    demo: &DemographicPartition,
    floor: f64,
) -> Result<Matrix> {
    let pot = bound_from_masses(soft, demo, floor, 1.0)?;
    Ok(pot.into_matrix())
}

/// Linear potentials `b_{p,k}` of the fairness bound at the current
/// assignment:
///
/// `b_{p,k} = (1/L) Σ_j (μ_j / 1^t S_k - μ_j v_{j,p} / V_j^t S_k)`
pub fn fairness_bound_potentials(
    soft: &SoftAssignment,
    demo: &DemographicPartition,
    config: &SolverConfig,
) -> Result<UnaryPotentials> {
    bound_from_masses(soft, demo, config.marginal_floor, config.lipschitz_l)
}

fn bound_from_masses(
    soft: &SoftAssignment,
    demo: &DemographicPartition,
    floor: f64,
    lipschitz: f64,
) -> Result<UnaryPotentials> {
    let masses = group_masses(soft, demo)?;
    let mu_total: f64 = demo.targets().iter().sum();
    let k = soft.n_clusters();
    let j = demo.n_groups();
    let inv_l = 1.0 / lipschitz;
    // Per (cluster, group) value; the point-level fill is a table lookup.
    let mut table = vec![0.0; k * j];
    for c in 0..k {
        let concave = mu_total / masses.cluster[c].max(floor);
        for (g, mu) in demo.targets().iter().enumerate() {
            table[c * j + g] = inv_l * (concave - mu / masses.group.get(c, g).max(floor));
        }
    }
    let mut values = vec![0.0; soft.n_points() * k];
    values
        .par_chunks_mut(k.max(1))
        .enumerate()
        .with_min_len(MIN_ROWS_PER_TASK)
        .for_each(|(p, row)| {
            let g = demo.group_of(p);
            for (c, v) in row.iter_mut().enumerate() {
                *v = table[c * j + g];
            }
        });
    UnaryPotentials::new(Matrix::new(soft.n_points(), k, values)?)
}
