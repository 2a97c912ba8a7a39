//! Bound-optimization loop for fair clustering.
//!
//! Each outer iteration fixes the clustering potentials `a_p` at the current
//! assignment; the inner loop then repeatedly refreshes the fairness
//! potentials `b_p` and applies the closed-form per-point update
//!
//! `s_p <- s_p * exp(-(a_p + λ b_p)) / normalizer`
//!
//! until the auxiliary functional stops changing. Points are updated
//! Jacobi-style from a read-only snapshot, so the per-point map can run in
//! parallel while every reduction keeps a fixed order.

use log::{debug, warn};
use rayon::prelude::*;

use crate::error::{FairError, Result};
use crate::eval::min_balance;
use crate::fairness::{fairness_bound_potentials, fairness_error_of_labels, fairness_penalty};
use crate::model::{
    binarize, hard_labels, DemographicPartition, EnergyRecord, Matrix, Metrics, SoftAssignment,
    SolveResult, SolverConfig, MIN_ROWS_PER_TASK, SIMPLEX_TOL,
};
use crate::objectives::{discrete_objective, evaluate, ClusteringProblem, UnaryPotentials};

/// Rows whose probabilities all fall below this are reset to uniform.
const DEAD_ROW: f64 = 1e-300;
/// Absolute change under which a quantity near zero counts as converged.
const ABS_FALLBACK: f64 = 1e-12;
/// Relative slack before an energy increase is reported.
pub const MONOTONICITY_SLACK: f64 = 1e-9;

/// Energy `E(S) = F(S) + λ · penalty(S)` split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub total: f64,
    pub clustering: f64,
    /// `λ` times the cross-entropy fairness penalty.
    pub fairness: f64,
    /// Auxiliary functional at the end of the inner loop, when known.
    pub auxiliary: Option<f64>,
}

/// Closed-form minimizer of the per-point auxiliary problem.
///
/// The exponent is shifted by its row maximum before exponentiation.
pub fn softmax_update(
    soft: &SoftAssignment,
    a: &UnaryPotentials,
    b: &UnaryPotentials,
    lambda: f64,
) -> Result<SoftAssignment> {
    check_potentials(soft, a, "clustering potentials")?;
    check_potentials(soft, b, "fairness potentials")?;
    let k = soft.n_clusters();
    let mut out = vec![0.0; soft.n_points() * k];
    out.par_chunks_mut(k).enumerate().with_min_len(MIN_ROWS_PER_TASK).for_each(|(p, row)| {
        let s = soft.row(p);
        let (ap, bp) = (a.row(p), b.row(p));
        update_row(s, |c| ap[c] + lambda * bp[c], row, p);
    });
    Ok(SoftAssignment::from_matrix_unchecked(Matrix::new(
        soft.n_points(),
        k,
        out,
    )?))
}

/// Writes the updated row and returns `log Σ_c s_c exp(-exponent(c))`, or
/// `None` when the row had to be reset.
fn update_row(s: &[f64], exponent: impl Fn(usize) -> f64, out: &mut [f64], p: usize) -> Option<f64> {
    if s.iter().all(|&v| v < DEAD_ROW) {
        warn!("row {p} has no live probability mass; resetting to uniform");
        out.fill(1.0 / s.len() as f64);
        return None;
    }
    let mut max = f64::NEG_INFINITY;
    for (c, (o, &sc)) in out.iter_mut().zip(s).enumerate() {
        *o = if sc > 0.0 {
            sc.ln() - exponent(c)
        } else {
            f64::NEG_INFINITY
        };
        max = max.max(*o);
    }
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
    Some(max + total.ln())
}

/// [`softmax_update`] together with [`auxiliary_value`] of its output. At
/// the minimizer each point contributes `-log Σ_k s_k exp(-(a_k + λ b_k))`,
/// which the update already has at hand.
fn update_with_auxiliary(
    soft: &SoftAssignment,
    a: &UnaryPotentials,
    b: &UnaryPotentials,
    lambda: f64,
    floor: f64,
) -> Result<(SoftAssignment, f64)> {
    check_potentials(soft, a, "clustering potentials")?;
    check_potentials(soft, b, "fairness potentials")?;
    let k = soft.n_clusters();
    let mut out = vec![0.0; soft.n_points() * k];
    let mut per_point = vec![0.0; soft.n_points()];
    out.par_chunks_mut(k)
        .zip(per_point.par_iter_mut())
        .enumerate()
        .with_min_len(MIN_ROWS_PER_TASK)
        .for_each(|(p, (row, value))| {
            let (ap, bp) = (a.row(p), b.row(p));
            *value = update_row(soft.row(p), |c| ap[c] + lambda * bp[c], row, p).map_or(f64::NAN, |z| -z);
        });
    let next = SoftAssignment::from_matrix_unchecked(Matrix::new(soft.n_points(), k, out)?);
    if per_point.iter().any(|v| v.is_nan()) {
        let aux = auxiliary_value(&next, soft, a, b, lambda, floor)?;
        return Ok((next, aux));
    }
    Ok((next, per_point.iter().sum()))
}

/// `s_p = exp(-a_p) / 1^t exp(-a_p)`.
pub fn softmax_of_negated(a: &UnaryPotentials) -> Result<SoftAssignment> {
    let m = a.values();
    let k = m.ncols();
    let uniform = vec![1.0 / k as f64; k];
    let mut out = vec![0.0; m.nrows() * k];
    out.par_chunks_mut(k).enumerate().with_min_len(MIN_ROWS_PER_TASK).for_each(|(p, row)| {
        let ap = a.row(p);
        update_row(&uniform, |c| ap[c], row, p);
    });
    Ok(SoftAssignment::from_matrix_unchecked(Matrix::new(
        m.nrows(),
        k,
        out,
    )?))
}

fn check_potentials(soft: &SoftAssignment, pot: &UnaryPotentials, what: &'static str) -> Result<()> {
    let m = pot.values();
    if m.nrows() != soft.n_points() || m.ncols() != soft.n_clusters() {
        return Err(FairError::DimensionMismatch {
            what,
            expected: soft.n_points() * soft.n_clusters(),
            got: m.nrows() * m.ncols(),
        });
    }
    Ok(())
}

/// `Σ_p s_p^t (a_p + λ b_p + log s_p - log s_p^anchor)`, logs clamped at
/// `floor`.
pub fn auxiliary_value(
    soft: &SoftAssignment,
    anchor: &SoftAssignment,
    a: &UnaryPotentials,
    b: &UnaryPotentials,
    lambda: f64,
    floor: f64,
) -> Result<f64> {
    check_potentials(soft, a, "clustering potentials")?;
    check_potentials(soft, b, "fairness potentials")?;
    if anchor.n_points() != soft.n_points() || anchor.n_clusters() != soft.n_clusters() {
        return Err(FairError::DimensionMismatch {
            what: "anchor assignment",
            expected: soft.n_points() * soft.n_clusters(),
            got: anchor.n_points() * anchor.n_clusters(),
        });
    }
    let per_point: Vec<f64> = (0..soft.n_points())
        .into_par_iter()
        .with_min_len(MIN_ROWS_PER_TASK)
        .map(|p| {
            let (s, s0) = (soft.row(p), anchor.row(p));
            let (ap, bp) = (a.row(p), b.row(p));
            (0..s.len())
                .filter(|&c| s[c] > 0.0)
                .map(|c| {
                    s[c] * (ap[c] + lambda * bp[c] + s[c].max(floor).ln() - s0[c].max(floor).ln())
                })
                .sum::<f64>()
        })
        .collect();
    Ok(per_point.iter().sum())
}

/// Clustering term, weighted fairness term and their sum at `soft`.
pub fn total_energy(
    problem: &ClusteringProblem,
    soft: &SoftAssignment,
    demo: &DemographicPartition,
    lambda: f64,
    floor: f64,
) -> Result<EnergyBreakdown> {
    let clustering = evaluate(problem, soft, floor)?.value;
    let fairness = lambda * fairness_penalty(soft, demo, floor)?;
    Ok(EnergyBreakdown {
        total: clustering + fairness,
        clustering,
        fairness,
        auxiliary: None,
    })
}

fn converged(prev: f64, current: f64, tol: f64) -> bool {
    let delta = (current - prev).abs();
    delta <= tol * prev.abs() || delta <= ABS_FALLBACK
}

/// Runs the fair-clustering bound optimizer from `init_labels`.
pub fn solve(
    problem: &ClusteringProblem,
    demo: &DemographicPartition,
    init_labels: &[usize],
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    let k = problem.n_clusters();
    if k < 2 {
        return Err(FairError::InvalidArgument(format!(
            "at least two clusters are required, got {k}"
        )));
    }
    if init_labels.len() != problem.n_points() {
        return Err(FairError::DimensionMismatch {
            what: "initial labels",
            expected: problem.n_points(),
            got: init_labels.len(),
        });
    }
    demo.check_points(problem.n_points())?;
    let floor = config.marginal_floor;
    let lambda = config.lambda;

    let mut soft = binarize(init_labels, k)?;
    let mut eval = evaluate(problem, &soft, floor)?;
    let mut trace: Vec<EnergyRecord> = Vec::new();

    let mut inner_total = 0;
    let mut violations = 0;
    let mut outer_used = 0;
    for outer in 1..=config.max_outer {
        outer_used = outer;
        let a = eval.potentials;
        if config.reinit_each_outer || outer == 1 {
            soft = softmax_of_negated(&a)?;
        }
        let mut prev_aux: Option<f64> = None;
        let mut aux = f64::NAN;
        for _ in 0..config.max_inner {
            let b = fairness_bound_potentials(&soft, demo, config)?;
            let (next, value) = update_with_auxiliary(&soft, &a, &b, lambda, floor)?;
            let drift = next.max_row_sum_error();
            if drift > SIMPLEX_TOL {
                return Err(FairError::NotOnSimplex {
                    what: "updated assignment",
                    detail: format!("row sum off by {drift} at outer iteration {outer}"),
                });
            }
            aux = value;
            soft = next;
            inner_total += 1;
            if prev_aux.is_some_and(|prev| converged(prev, aux, config.inner_tol)) {
                break;
            }
            prev_aux = Some(aux);
        }

        eval = evaluate(problem, &soft, floor)?;
        let fairness = lambda * fairness_penalty(&soft, demo, floor)?;
        let energy = EnergyBreakdown {
            total: eval.value + fairness,
            clustering: eval.value,
            fairness,
            auxiliary: Some(aux),
        };
        check_energy(energy.total, outer)?;
        let prev = trace.last().map(|r| r.energy.total);
        if let Some(prev) = prev.filter(|&p| energy.total > p + MONOTONICITY_SLACK * p.abs()) {
            violations += 1;
            warn!(
                "energy increased at outer iteration {outer}: {prev} -> {} (lambda {lambda})",
                energy.total
            );
        }
        debug!(
            "outer {outer}: E = {} (F = {}, fair = {}, A = {aux})",
            energy.total, energy.clustering, energy.fairness
        );
        trace.push(EnergyRecord { outer, energy });
        if prev.is_some_and(|p| converged(p, energy.total, config.outer_tol)) {
            break;
        }
    }

    let labels = hard_labels(&soft);
    let metrics = Metrics {
        discrete_objective: discrete_objective(problem, &labels)?,
        fairness_error: fairness_error_of_labels(&labels, k, demo, floor)?,
        min_balance: min_balance(&labels, demo, k)?,
    };
    Ok(SolveResult {
        labels,
        soft,
        energy_trace: trace,
        metrics,
        outer_iterations: outer_used,
        inner_iterations: inner_total,
        monotonicity_violations: violations,
    })
}

fn check_energy(value: f64, outer: usize) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(FairError::NonFiniteEnergy { outer, value })
    }
}

/// One row of a λ sweep.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub lambda: f64,
    pub result: SolveResult,
}

/// Outcome of [`lambda_sweep`].
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub runs: Vec<SweepRun>,
    /// Index into `runs` of the selected λ.
    pub chosen: usize,
    /// Whether the selected run meets the fairness tolerance.
    pub satisfied: bool,
}

impl SweepOutcome {
    pub fn chosen_lambda(&self) -> f64 {
        self.runs[self.chosen].lambda
    }

    pub fn chosen_result(&self) -> &SolveResult {
        &self.runs[self.chosen].result
    }
}

/// Solves once per λ (independently) and selects the smallest λ whose
/// fairness error is at most `epsilon`. When none qualifies the largest λ
/// is returned with `satisfied = false`.
pub fn lambda_sweep(
    problem: &ClusteringProblem,
    demo: &DemographicPartition,
    init_labels: &[usize],
    lambdas: &[f64],
    epsilon: f64,
    config: &SolverConfig,
) -> Result<SweepOutcome> {
    if lambdas.is_empty() {
        return Err(FairError::InvalidArgument("no lambda values given".into()));
    }
    if let Some(bad) = lambdas.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(FairError::InvalidArgument(format!(
            "lambda values must be finite and nonnegative, got {bad}"
        )));
    }
    if lambdas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FairError::InvalidArgument(
            "lambda values must be strictly ascending".into(),
        ));
    }
    let runs = lambdas
        .par_iter()
        .map(|&lambda| {
            let cfg = config.clone().with_lambda(lambda);
            solve(problem, demo, init_labels, &cfg).map(|result| SweepRun { lambda, result })
        })
        .collect::<Result<Vec<_>>>()?;
    let hit = runs
        .iter()
        .position(|r| r.result.metrics.fairness_error <= epsilon);
    Ok(match hit {
        Some(chosen) => SweepOutcome {
            runs,
            chosen,
            satisfied: true,
        },
        None => SweepOutcome {
            chosen: runs.len() - 1,
            runs,
            satisfied: false,
        },
    })
}
