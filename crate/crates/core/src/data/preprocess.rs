use super::Dataset;
use crate::error::{FairError, Result};
use crate::model::Matrix;

/// Per-feature standardization (population variance) followed by unit L2
/// row normalization. Constant features become zeros; zero rows stay zero.
pub fn preprocess(dataset: Dataset) -> Result<Dataset> {
    let x = dataset.features();
    let (n, m) = (x.nrows(), x.ncols());
    if n < 2 {
        return Err(FairError::InvalidArgument(format!(
            "preprocessing needs at least two rows, got {n}"
        )));
    }
    let mut mean = vec![0.0; m];
    for row in x.rows_iter() {
        mean.iter_mut().zip(row).for_each(|(a, v)| *a += v);
    }
    mean.iter_mut().for_each(|a| *a /= n as f64);
    let mut var = vec![0.0; m];
    for row in x.rows_iter() {
        for ((s, v), mu) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - mu) * (v - mu);
        }
    }
    let scale: Vec<f64> = var
        .iter()
        .map(|s| {
            let sd = (s / n as f64).sqrt();
            if sd > 0.0 {
                1.0 / sd
            } else {
                0.0
            }
        })
        .collect();

    let mut out = Matrix::zeros(n, m);
    for p in 0..n {
        let src = x.row(p);
        let dst = out.row_mut(p);
        for j in 0..m {
            dst[j] = (src[j] - mean[j]) * scale[j];
        }
        let norm = dst.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            dst.iter_mut().for_each(|v| *v /= norm);
        }
    }
    dataset.with_features(out)
}
