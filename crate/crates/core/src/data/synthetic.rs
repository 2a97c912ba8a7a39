use std::f64::consts::PI;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Dataset;
use crate::error::{FairError, Result};
use crate::model::Matrix;

/// Blob layout of the synthetic generator.
///
/// Each group has an upper and a lower blob on a circle: the first group on
/// the left at `180° ∓ half_spread_deg`, the second on the right at
/// `±half_spread_deg`. Coordinates are used as generated (no preprocessing).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticParams {
    pub radius: f64,
    pub half_spread_deg: f64,
    pub sigma: f64,
    /// Fraction of each group placed in its upper blob.
    pub upper_share: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            radius: 0.1,
            half_spread_deg: 40.0,
            sigma: 0.008,
            upper_share: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// 200 + 200 points, targets [0.5, 0.5].
    Equal,
    /// 300 + 100 points, targets [0.75, 0.25].
    Unequal,
}

impl FromStr for SyntheticKind {
    type Err = FairError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal" => Ok(Self::Equal),
            "unequal" => Ok(Self::Unequal),
            other => Err(FairError::InvalidArgument(format!(
                "unknown synthetic kind `{other}`"
            ))),
        }
    }
}

/// Generator seed of the shipped synthetic datasets.
pub const SYNTHETIC_DATA_SEED: u64 = 1;

/// Two demographic groups in 2-D, each made of two tight Gaussian blobs. The
/// blobs of a group sit next to each other, so an unconstrained 2-way
/// clustering separates the groups; the upper/lower split pairs one blob of
/// each group in the target proportions.
pub fn make_synthetic(kind: SyntheticKind, seed: u64) -> Dataset {
    make_synthetic_with(kind, seed, SyntheticParams::default())
}

pub fn make_synthetic_with(kind: SyntheticKind, seed: u64, params: SyntheticParams) -> Dataset {
    let per_group = match kind {
        SyntheticKind::Equal => [200, 200],
        SyntheticKind::Unequal => [300, 100],
    };
    let alpha = params.half_spread_deg;
    let blob_angles = [[180.0 - alpha, 180.0 + alpha], [alpha, -alpha]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, params.sigma).expect("positive sigma");
    let n: usize = per_group.iter().sum();
    let mut data = Vec::with_capacity(2 * n);
    let mut groups = Vec::with_capacity(n);
    for (g, (&count, angles)) in per_group.iter().zip(blob_angles).enumerate() {
        let upper = (count as f64 * params.upper_share).round() as usize;
        for (deg, size) in angles.into_iter().zip([upper, count - upper]) {
            let angle = deg * PI / 180.0;
            let (cx, cy) = (params.radius * angle.cos(), params.radius * angle.sin());
            for _ in 0..size {
                data.push(cx + noise.sample(&mut rng));
                data.push(cy + noise.sample(&mut rng));
                groups.push(g);
            }
        }
    }
    let (name, targets) = match kind {
        SyntheticKind::Equal => ("synthetic", vec![0.5, 0.5]),
        SyntheticKind::Unequal => ("synthetic-unequal", vec![0.75, 0.25]),
    };
    Dataset::new(
        name,
        Matrix::new(n, 2, data).expect("2-D buffer"),
        groups,
        vec!["group-1".into(), "group-2".into()],
        targets,
    )
    .expect("generator output is valid")
}
