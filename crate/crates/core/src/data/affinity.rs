use rayon::prelude::*;

use crate::error::{FairError, Result};
use crate::model::{AffinityGraph, Matrix};
use crate::objectives::squared_distance;

/// Binary k-nearest-neighbor graph, symmetrized by logical OR.
///
/// Neighbors are ranked by Euclidean distance with ties broken by index.
pub fn knn_affinity(features: &Matrix, k: usize) -> Result<AffinityGraph> {
    let n = features.nrows();
    if k == 0 || k >= n {
        return Err(FairError::InvalidArgument(format!(
            "neighbor count must be in 1..{n}, got {k}"
        )));
    }
    let nearest: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|p| {
            let xp = features.row(p);
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&q| q != p)
                .map(|q| (squared_distance(xp, features.row(q)), q))
                .collect();
            let by_rank =
                |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, by_rank);
                cand.truncate(k);
            }
            cand.into_iter().map(|(_, q)| q).collect()
        })
        .collect();

    let mut adjacency: Vec<Vec<usize>> = vec![Vec::with_capacity(k); n];
    for (p, qs) in nearest.iter().enumerate() {
        for &q in qs {
            adjacency[p].push(q);
            adjacency[q].push(p);
        }
    }
    let rows = adjacency
        .into_iter()
        .map(|mut qs| {
            qs.sort_unstable();
            qs.dedup();
            qs.into_iter().map(|q| (q, 1.0)).collect()
        })
        .collect();
    AffinityGraph::from_adjacency(rows)
}
