use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use fairclust::data::{export_csv, load_profile, preprocess, resolve_profile};
use fairclust::eval::{k_sweep, run_experiment, sweep_curves, ExperimentSpec};
use fairclust::{Metric, ObjectiveKind, SolverConfig};

#[derive(Parser)]
#[command(name = "fairclust", version, about = "Variational fair clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a lambda sweep and write a report directory.
    Run(RunArgs),
    /// Turn a report's summary.csv into curves.csv.
    Curves {
        /// Report directory written by `run`.
        dir: PathBuf,
    },
    /// Fair vs unconstrained objective for a range of cluster counts.
    KSweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Cluster counts, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        ks: Vec<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a profile's (optionally preprocessed) features and groups as CSV.
    Export {
        #[arg(long)]
        profile: String,
        #[arg(long, env = "FAIRCLUST_DATA_DIR", default_value = ".")]
        data_dir: PathBuf,
        #[arg(long)]
        max_rows: Option<usize>,
        /// Skip standardization and normalization.
        #[arg(long)]
        raw: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Kmeans,
    Kmedian,
    Ncut,
}

impl From<ObjectiveArg> for ObjectiveKind {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Kmeans => ObjectiveKind::KMeans,
            ObjectiveArg::Kmedian => ObjectiveKind::KMedian,
            ObjectiveArg::Ncut => ObjectiveKind::Ncut,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Euclidean,
    Manhattan,
    Chebyshev,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Manhattan => Metric::Manhattan,
            MetricArg::Chebyshev => Metric::Chebyshev,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Preset name or path to a JSON profile.
    #[arg(long)]
    profile: String,
    #[arg(long, value_enum)]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 20)]
    knn: usize,
    #[arg(long, value_enum, default_value = "euclidean")]
    metric: MetricArg,
    #[arg(long, default_value_t = 2.0)]
    lipschitz: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "FAIRCLUST_DATA_DIR", default_value = ".")]
    data_dir: PathBuf,
    #[arg(long)]
    max_rows: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    target_proportions: Option<Vec<f64>>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    k: Option<usize>,
    /// Trade-off weights, comma separated; defaults to the profile's lambda.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// Pick the smallest lambda with fairness error at or below this.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn spec_from(common: &CommonArgs) -> fairclust::Result<ExperimentSpec> {
    let profile = resolve_profile(&common.profile)?;
    let mut spec = ExperimentSpec::new(profile, common.objective.into());
    spec.knn = common.knn;
    spec.metric = common.metric.into();
    spec.seed = common.seed;
    spec.data_dir = common.data_dir.clone();
    spec.max_rows = common.max_rows;
    spec.targets = common.target_proportions.clone();
    spec.solver = SolverConfig {
        lipschitz_l: common.lipschitz,
        ..SolverConfig::default()
    };
    Ok(spec)
}

fn configure_threads() {
    let Ok(raw) = std::env::var("FAIRCLUST_THREADS") else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring FAIRCLUST_THREADS={raw}"),
    }
}

fn run(args: RunArgs) -> fairclust::Result<ExitCode> {
    let mut spec = spec_from(&args.common)?;
    if let Some(k) = args.k {
        spec.n_clusters = k;
    }
    if let Some(lambdas) = args.lambda {
        spec.lambdas = lambdas;
    }
    if let Some(eps) = args.epsilon {
        spec.epsilon = eps;
    }
    let report = run_experiment(&spec, &args.out)?;
    let chosen = report.outcome.chosen_result();
    println!(
        "{} {} lambda={} objective={:.4} fairness_error={:.4} balance={:.3}",
        report.dataset,
        report.objective,
        report.outcome.chosen_lambda(),
        chosen.metrics.discrete_objective,
        chosen.metrics.fairness_error,
        chosen.metrics.min_balance
    );
    info!("report written to {}", report.out_dir.display());
    if report.outcome.satisfied {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("fairness tolerance {} not met by any lambda", spec.epsilon);
        Ok(ExitCode::from(2))
    }
}

fn export(profile: &str, data_dir: &Path, max_rows: Option<usize>, raw: bool, out: &Path) -> fairclust::Result<()> {
    let profile = resolve_profile(profile)?;
    let data = load_profile(&profile, data_dir, max_rows)?;
    let data = if raw || !profile.preprocess { data } else { preprocess(data)? };
    export_csv(&data, out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Curves { dir } => sweep_curves(&dir).map(|path| {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }),
        Command::KSweep { common, ks, lambda, out } => spec_from(&common).and_then(|spec| {
            let lambda = lambda.unwrap_or(spec.profile.lambda);
            for row in k_sweep(&spec, &ks, lambda, Some(&out))? {
                println!("k={} fair={:.4} vanilla={:.4}", row.k, row.fair, row.vanilla);
            }
            Ok(ExitCode::SUCCESS)
        }),
        Command::Export { profile, data_dir, max_rows, raw, out } => {
            export(&profile, &data_dir, max_rows, raw, &out).map(|()| ExitCode::SUCCESS)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
