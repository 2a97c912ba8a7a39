use log::warn;

use crate::error::{FairError, Result};
use crate::model::DemographicPartition;

fn cluster_counts(labels: &[usize], demo: &DemographicPartition, k: usize) -> Result<Vec<Vec<usize>>> {
    demo.check_points(labels.len())?;
    let mut counts = vec![vec![0usize; demo.n_groups()]; k];
    for (index, &label) in labels.iter().enumerate() {
        if label >= k {
            return Err(FairError::LabelOutOfRange { index, label, k });
        }
        counts[label][demo.group_of(index)] += 1;
    }
    Ok(counts)
}

fn balance_of_counts(counts: &[usize]) -> f64 {
    let max = counts.iter().copied().max().unwrap_or(0);
    let min = counts.iter().copied().min().unwrap_or(0);
    if max == 0 {
        0.0
    } else {
        min as f64 / max as f64
    }
}

/// Smallest ratio of group counts inside cluster `cluster`; 0 when a group
/// is absent or the cluster is empty.
pub fn cluster_balance(
    labels: &[usize],
    demo: &DemographicPartition,
    k: usize,
    cluster: usize,
) -> Result<f64> {
    if cluster >= k {
        return Err(FairError::InvalidArgument(format!(
            "cluster {cluster} out of range for {k} clusters"
        )));
    }
    let counts = cluster_counts(labels, demo, k)?;
    if counts[cluster].iter().all(|&c| c == 0) {
        warn!("cluster {cluster} is empty; its balance is 0");
    }
    Ok(balance_of_counts(&counts[cluster]))
}

/// Minimum of [`cluster_balance`] over all clusters.
pub fn min_balance(labels: &[usize], demo: &DemographicPartition, k: usize) -> Result<f64> {
    let counts = cluster_counts(labels, demo, k)?;
    Ok(counts
        .iter()
        .map(|c| balance_of_counts(c))
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo(groups: Vec<usize>) -> DemographicPartition {
        DemographicPartition::with_empirical_targets(groups, 2).unwrap()
    }

    #[test]
    fn balance_examples() {
        // cluster 0 holds counts (2, 4); cluster 1 (3, 3); cluster 2 (5, 0)
        let mut groups = vec![0, 0, 1, 1, 1, 1];
        let mut labels = vec![0; 6];
        groups.extend([0, 0, 0, 1, 1, 1]);
        labels.extend([1; 6]);
        groups.extend([0; 5]);
        labels.extend([2; 5]);
        let d = demo(groups);
        assert_eq!(cluster_balance(&labels, &d, 3, 0).unwrap(), 0.5);
        assert_eq!(cluster_balance(&labels, &d, 3, 1).unwrap(), 1.0);
        assert_eq!(cluster_balance(&labels, &d, 3, 2).unwrap(), 0.0);
        assert_eq!(min_balance(&labels, &d, 3).unwrap(), 0.0);
    }

    #[test]
    fn empty_cluster_has_zero_balance() {
        let d = demo(vec![0, 1]);
        assert_eq!(cluster_balance(&[0, 0], &d, 2, 1).unwrap(), 0.0);
        assert_eq!(min_balance(&[0, 0], &d, 2).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_labels() {
        let d = demo(vec![0, 1]);
        assert!(min_balance(&[0, 2], &d, 2).is_err());
        assert!(min_balance(&[0], &d, 2).is_err());
    }
}
