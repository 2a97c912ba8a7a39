use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::data::{kmeanspp_seed, knn_affinity, load_profile, preprocess, Dataset, Profile};
use crate::error::{FairError, Result};
use crate::model::{DemographicPartition, SolverConfig};
use crate::objectives::{ClusteringProblem, Metric, ObjectiveKind};
use crate::solver::{lambda_sweep, solve, SweepOutcome};

/// Everything needed to run one experiment from a profile.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub profile: Profile,
    pub objective: ObjectiveKind,
    pub n_clusters: usize,
    pub lambdas: Vec<f64>,
    pub epsilon: f64,
    pub knn: usize,
    pub metric: Metric,
    pub seed: u64,
    pub data_dir: PathBuf,
    pub max_rows: Option<usize>,
    pub targets: Option<Vec<f64>>,
    pub solver: SolverConfig,
}

impl ExperimentSpec {
    /// Profile defaults: its K and λ, Euclidean K-median, 20-NN graphs.
    pub fn new(profile: Profile, objective: ObjectiveKind) -> Self {
        Self {
            n_clusters: profile.n_clusters,
            lambdas: vec![profile.lambda],
            profile,
            objective,
            epsilon: f64::INFINITY,
            knn: 20,
            metric: Metric::Euclidean,
            seed: 0,
            data_dir: PathBuf::from("."),
            max_rows: None,
            targets: None,
            solver: SolverConfig::default(),
        }
    }
}

/// Loaded, preprocessed and seeded inputs of an experiment.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    pub problem: ClusteringProblem,
    pub demo: DemographicPartition,
    pub init_labels: Vec<usize>,
}

/// load → preprocess → seed → (kNN graph for Ncut).
pub fn prepare(spec: &ExperimentSpec, n_clusters: usize) -> Result<Prepared> {
    let raw = load_profile(&spec.profile, &spec.data_dir, spec.max_rows)?;
    let dataset = if spec.profile.preprocess { preprocess(raw)? } else { raw };
    let demo = dataset.partition(spec.targets.as_deref())?;
    let init_labels = kmeanspp_seed(dataset.features(), n_clusters, spec.seed)?;
    let features = dataset.features().clone();
    let problem = match spec.objective {
        ObjectiveKind::KMeans => ClusteringProblem::kmeans(features, n_clusters)?,
        ObjectiveKind::KMedian => ClusteringProblem::kmedian(features, n_clusters, spec.metric)?,
        ObjectiveKind::Ncut => ClusteringProblem::ncut(knn_affinity(&features, spec.knn)?, n_clusters)?,
    };
    Ok(Prepared {
        dataset,
        problem,
        demo,
        init_labels,
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub dataset: String,
    pub objective: ObjectiveKind,
    pub outcome: SweepOutcome,
    pub out_dir: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FairError + '_ {
    move |source| FairError::Io {
        path: path.into(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Runs the λ sweep and writes `summary.csv`, one `trace_lambda_<λ>.csv`
/// per λ, `labels.csv` for the selected λ and `table.txt`.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<ExperimentReport> {
    let prepared = prepare(spec, spec.n_clusters)?;
    let config = SolverConfig {
        rng_seed: spec.seed,
        ..spec.solver.clone()
    };
    let outcome = lambda_sweep(
        &prepared.problem,
        &prepared.demo,
        &prepared.init_labels,
        &spec.lambdas,
        spec.epsilon,
        &config,
    )?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let mut summary = String::from(
        "lambda,discrete_objective,fairness_error,min_balance,outer_iterations,inner_iterations,monotonicity_violations,chosen\n",
    );
    for (i, run) in outcome.runs.iter().enumerate() {
        let r = &run.result;
        writeln!(
            summary,
            "{},{},{},{},{},{},{},{}",
            run.lambda,
            r.metrics.discrete_objective,
            r.metrics.fairness_error,
            r.metrics.min_balance,
            r.outer_iterations,
            r.inner_iterations,
            r.monotonicity_violations,
            u8::from(i == outcome.chosen)
        )
        .expect("writing to a String");

        let mut trace = String::from("iter,total,clustering,fairness\n");
        for rec in &r.energy_trace {
            let e = rec.energy;
            writeln!(trace, "{},{},{},{}", rec.outer, e.total, e.clustering, e.fairness)
                .expect("writing to a String");
        }
        write_file(&out_dir.join(format!("trace_lambda_{}.csv", run.lambda)), &trace)?;
    }
    write_file(&out_dir.join("summary.csv"), &summary)?;

    let chosen = outcome.chosen_result();
    let mut labels = String::from("point,label\n");
    for (p, l) in chosen.labels.iter().enumerate() {
        writeln!(labels, "{p},{l}").expect("writing to a String");
    }
    write_file(&out_dir.join("labels.csv"), &labels)?;

    let table = format_table_row(&spec.profile.name, spec.objective, &outcome);
    write_file(&out_dir.join("table.txt"), &table)?;

    Ok(ExperimentReport {
        dataset: spec.profile.name.clone(),
        objective: spec.objective,
        outcome,
        out_dir: out_dir.into(),
    })
}

fn format_table_row(dataset: &str, objective: ObjectiveKind, outcome: &SweepOutcome) -> String {
    let m = &outcome.chosen_result().metrics;
    let mut s = String::new();
    writeln!(
        s,
        "{:<20} {:<8} {:>12} {:>18} {:>24}",
        "Dataset", "Method", "lambda", "Fair objective", "Fairness error / Balance"
    )
    .expect("writing to a String");
    writeln!(
        s,
        "{:<20} {:<8} {:>12} {:>18.2} {:>24}",
        dataset,
        objective.to_string(),
        outcome.chosen_lambda(),
        m.discrete_objective,
        format!("{:.3} / {:.2}", m.fairness_error, m.min_balance)
    )
    .expect("writing to a String");
    if !outcome.satisfied {
        s.push_str("(fairness tolerance not met; largest lambda shown)\n");
    }
    s
}

/// Reads a report directory's `summary.csv` and writes `curves.csv` with
/// columns `lambda,clustering_objective,fairness_error,balance`, sorted by λ.
pub fn sweep_curves(report_dir: &Path) -> Result<PathBuf> {
    let summary = report_dir.join("summary.csv");
    let bad = |detail: String| FairError::Report {
        path: summary.clone(),
        detail,
    };
    let mut reader = csv::Reader::from_path(&summary).map_err(|source| FairError::Csv {
        path: summary.clone(),
        source,
    })?;
    let headers = reader
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column `{name}`")))
    };
    let idx = [
        col("lambda")?,
        col("discrete_objective")?,
        col("fairness_error")?,
        col("min_balance")?,
    ];
    let mut rows: Vec<(f64, Vec<String>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let cells: Vec<String> = idx.iter().map(|&i| record.get(i).unwrap_or("").to_string()).collect();
        let lambda: f64 = cells[0]
            .parse()
            .map_err(|_| bad(format!("bad lambda `{}`", cells[0])))?;
        rows.push((lambda, cells));
    }
    if rows.len() < 2 {
        return Err(bad(format!("need at least two lambda rows, found {}", rows.len())));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = String::from("lambda,clustering_objective,fairness_error,balance\n");
    for (_, cells) in rows {
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let path = report_dir.join("curves.csv");
    write_file(&path, &out)?;
    Ok(path)
}

/// Fair and unconstrained discrete objectives for one cluster count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KSweepRow {
    pub k: usize,
    pub fair: f64,
    pub vanilla: f64,
}

/// For each K: one run at `lambda` and one at λ = 0 from the same seeding.
/// Writes `k_sweep.csv` when `out_dir` is given.
pub fn k_sweep(
    spec: &ExperimentSpec,
    ks: &[usize],
    lambda: f64,
    out_dir: Option<&Path>,
) -> Result<Vec<KSweepRow>> {
    let config = SolverConfig {
        rng_seed: spec.seed,
        ..spec.solver.clone()
    };
    let rows = ks
        .par_iter()
        .map(|&k| {
            let prepared = prepare(spec, k)?;
            let run = |l: f64| {
                solve(
                    &prepared.problem,
                    &prepared.demo,
                    &prepared.init_labels,
                    &config.clone().with_lambda(l),
                )
            };
            Ok(KSweepRow {
                k,
                fair: run(lambda)?.metrics.discrete_objective,
                vanilla: run(0.0)?.metrics.discrete_objective,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut out = String::from("k,fair_objective,vanilla_objective\n");
        for r in &rows {
            writeln!(out, "{},{},{}", r.k, r.fair, r.vanilla).expect("writing to a String");
        }
        write_file(&dir.join("k_sweep.csv"), &out)?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_need_two_rows_and_sort() {
        let dir = tempfile::tempdir().unwrap();
        let header = "lambda,discrete_objective,fairness_error,min_balance,outer_iterations,inner_iterations,monotonicity_violations,chosen\n";
        fs::write(dir.path().join("summary.csv"), format!("{header}10,1,0.1,0.5,1,1,0,1\n")).unwrap();
        assert!(sweep_curves(dir.path()).is_err());
        fs::write(
            dir.path().join("summary.csv"),
            format!("{header}10,2,0.1,0.5,1,1,0,1\n1,1,0.5,0.2,1,1,0,0\n"),
        )
        .unwrap();
        let path = sweep_curves(dir.path()).unwrap();
        assert_eq!(
            fs::read_to_string(path).unwrap(),
            "lambda,clustering_objective,fairness_error,balance\n1,1,0.5,0.2\n10,2,0.1,0.5\n"
        );
    }
}
