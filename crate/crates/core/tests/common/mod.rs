//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use fairclust::{Matrix, SoftAssignment};

pub fn simplex(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

pub fn soft_from(raw: &[f64], k: usize) -> SoftAssignment {
    let rows: Vec<Vec<f64>> = raw.chunks(k).map(simplex).collect();
    SoftAssignment::new(Matrix::from_rows(&rows).unwrap()).unwrap()
}

/// Per-point auxiliary term `s^t (c + log s - log s0)` with `0 log 0 = 0`.
pub fn point_aux(s: &[f64], c: &[f64], s0: &[f64]) -> f64 {
    s.iter()
        .zip(c)
        .zip(s0)
        .filter(|((&x, _), _)| x > 0.0)
        .map(|((&x, &ci), &x0)| x * (ci + x.ln() - x0.ln()))
        .sum()
}

/// Minimizes the per-point auxiliary term by golden-section line searches
/// that move mass between pairs of coordinates, sweeping until nothing moves.
pub fn pairwise_search(c: &[f64], s0: &[f64]) -> f64 {
    let k = c.len();
    let mut s = vec![1.0 / k as f64; k];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let before = point_aux(&s, c, s0);
        for i in 0..k {
            for j in i + 1..k {
                let total = s[i] + s[j];
                let f = |t: f64| {
                    let mut trial = s.clone();
                    trial[i] = t;
                    trial[j] = total - t;
                    point_aux(&trial, c, s0)
                };
                let (mut lo, mut hi) = (0.0, total);
                for _ in 0..200 {
                    let m1 = hi - ratio * (hi - lo);
                    let m2 = lo + ratio * (hi - lo);
                    if f(m1) < f(m2) {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                let t = 0.5 * (lo + hi);
                s[i] = t;
                s[j] = total - t;
            }
        }
        if (before - point_aux(&s, c, s0)).abs() < 1e-15 {
            break;
        }
    }
    point_aux(&s, c, s0)
}

/// Within-cluster sum of squares from pairwise distances, no centers involved.
pub fn pairwise_sse(points: &[[f64; 2]], labels: &[usize], k: usize) -> f64 {
    (0..k)
        .map(|c| {
            let idx: Vec<usize> = (0..points.len()).filter(|&p| labels[p] == c).collect();
            if idx.is_empty() {
                return 0.0;
            }
            let mut total = 0.0;
            for &p in &idx {
                for &q in &idx {
                    total += (points[p][0] - points[q][0]).powi(2) + (points[p][1] - points[q][1]).powi(2);
                }
            }
            total / (2.0 * idx.len() as f64)
        })
        .sum()
}

pub fn all_labelings(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0..k.pow(n as u32))
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let l = code % k;
                    code /= k;
                    l
                })
                .collect()
        })
        .collect()
}

pub fn blobs(n_per: usize, centers: &[(f64, f64)], jitter: &[f64]) -> Matrix {
    let mut rows = Vec::new();
    for (c, &(cx, cy)) in centers.iter().enumerate() {
        for i in 0..n_per {
            let e = jitter[(c * n_per + i) % jitter.len()];
            rows.push(vec![cx + e, cy - 0.5 * e]);
        }
    }
    Matrix::from_rows(&rows).unwrap()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cluster means; `None` for empty clusters.
pub fn means(x: &Matrix, labels: &[usize], k: usize) -> Vec<Option<Vec<f64>>> {
    (0..k)
        .map(|c| {
            let members: Vec<&[f64]> = (0..x.nrows()).filter(|&p| labels[p] == c).map(|p| x.row(p)).collect();
            if members.is_empty() {
                return None;
            }
            let mut m = vec![0.0; x.ncols()];
            for row in &members {
                for (acc, v) in m.iter_mut().zip(*row) {
                    *acc += v;
                }
            }
            Some(m.into_iter().map(|v| v / members.len() as f64).collect())
        })
        .collect()
}

/// Plain Lloyd iterations from hard labels until the labels stop changing.
pub fn lloyd(x: &Matrix, mut labels: Vec<usize>, k: usize) -> Vec<usize> {
    loop {
        let centers = means(x, &labels, k);
        let next: Vec<usize> = (0..x.nrows())
            .map(|p| {
                let mut best = (f64::INFINITY, labels[p]);
                for (c, m) in centers.iter().enumerate() {
                    if let Some(m) = m {
                        let d = sq_dist(x.row(p), m);
                        if d < best.0 {
                            best = (d, c);
                        }
                    }
                }
                best.1
            })
            .collect();
        if next == labels {
            return labels;
        }
        labels = next;
    }
}

/// True when every point is at least as close to its own cluster mean as to
/// any other non-empty cluster's mean.
pub fn is_lloyd_fixed_point(x: &Matrix, labels: &[usize], k: usize) -> bool {
    let centers = means(x, labels, k);
    labels.iter().enumerate().all(|(p, &l)| {
        let Some(own) = centers[l].as_deref() else {
            return false;
        };
        let own = sq_dist(x.row(p), own);
        centers.iter().flatten().all(|c| own <= sq_dist(x.row(p), c) + 1e-12)
    })
}
