use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FairError, Result};
use crate::model::{argmax_first, Matrix};
use crate::objectives::squared_distance;

/// K-means++ seeding: D²-weighted center sampling with a ChaCha8 stream,
/// then every point takes the label of its nearest center (lowest index on
/// ties).
pub fn kmeanspp_seed(features: &Matrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = features.nrows();
    if k == 0 || k > n {
        return Err(FairError::InvalidArgument(format!(
            "cluster count must be in 1..={n}, got {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = Vec::with_capacity(k);
    centers.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = (0..n)
        .map(|p| squared_distance(features.row(p), features.row(centers[0])))
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (p, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(p);
                    break;
                }
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("positive total"))
        } else {
            // every remaining point coincides with a center
            let free: Vec<usize> = (0..n).filter(|p| !centers.contains(p)).collect();
            free[rng.random_range(0..free.len())]
        };
        centers.push(next);
        for (p, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(features.row(p), features.row(next)));
        }
    }
    Ok((0..n)
        .map(|p| {
            let neg: Vec<f64> = centers
                .iter()
                .map(|&c| -squared_distance(features.row(p), features.row(c)))
                .collect();
            argmax_first(&neg)
        })
        .collect())
}
