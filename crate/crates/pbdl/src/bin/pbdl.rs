use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use pbdl::bounds::{bounds, BoundInputs};
use pbdl::data::{load_csv, sample_triplets, DivergenceKind, LabeledDataset};
use pbdl::experiment::{
    run_regression_protocol, run_relative_protocol, RegressionConfig, RelativeConfig,
};
use pbdl::learn::{
    cross_validate, default_lambda_grid, train_pbdl, train_pbdl_partitioned, CvConfig,
    QuadrupletSet, TrainConfig,
};
use pbdl::approx::{covering_radius, grid_approximator, SmoothConvexSpec};
use pbdl::partition::farthest_point_partition;
use pbdl::tasks::{bregman_kmeans, purity, rand_index, rank_all, QuerySide};
use pbdl::MaxAffineModel;

/// Learn Bregman divergences from relative comparisons and apply them to
/// clustering, ranking, and classification.
#[derive(Parser)]
#[command(name = "pbdl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a divergence from class-consistent triplets sampled from a CSV
    /// dataset and write the model as JSON.
    Train(TrainArgs),
    /// Score a saved model on a dataset, or run the full repeated
    /// train/evaluate protocol.
    Eval(EvalArgs),
    /// Regression experiment on a synthetic divergence family against a
    /// Mahalanobis baseline.
    Synth(SynthArgs),
    /// Evaluate the approximation and generalization bound formulas.
    Bounds(BoundsArgs),
    /// Farthest-point partition of a dataset.
    Partition(PartitionArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the label column.
    #[arg(long, default_value = "class")]
    label: String,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Number of triplets to sample.
    #[arg(long, default_value_t = 2000)]
    triplets: usize,
    #[arg(long, default_value_t = 1.0)]
    margin: f64,
    /// Regularization weight, or "auto" for cross-validation.
    #[arg(long, default_value = "auto")]
    lambda: String,
    /// Share hyperplanes over this many farthest-point cells instead of one
    /// per training point.
    #[arg(long)]
    partition_k: Option<usize>,
    /// Rescale features to [-1, 1] before training.
    #[arg(long)]
    feature_scale: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the model JSON (stdout if omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Saved model to score. Required unless --repeats is given.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Run the repeated train/evaluate protocol with this many repeats
    /// instead of scoring a saved model.
    #[arg(long)]
    repeats: Option<usize>,
    /// Triplets per repeat in protocol mode.
    #[arg(long, default_value_t = 2000)]
    triplets: usize,
    #[arg(long)]
    partition_k: Option<usize>,
    /// Fixed lambda for protocol mode; "auto" cross-validates per repeat.
    #[arg(long, default_value = "auto")]
    lambda: String,
    #[arg(long)]
    feature_scale: bool,
    #[arg(long, default_value_t = 5)]
    knn_k: usize,
    #[arg(long, default_value_t = 5)]
    kmeans_restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// One of: kl_dirichlet, logdet_wishart, itakura_saito, mahalanobis,
    /// squared_euclidean.
    #[arg(long)]
    kind: String,
    /// Comma-separated training pair counts.
    #[arg(long, default_value = "20,80,320")]
    schedule: String,
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 4.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 16)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    lipschitz: f64,
    #[arg(long, default_value_t = 2000)]
    m: usize,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    /// Also build the grid approximator of the squared norm and verify the
    /// value bound empirically.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PartitionArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Partition(args) => cmd_partition(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Resolve relative output paths against PBDL_OUTPUT_DIR when it is set.
fn resolve_output(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var("PBDL_OUTPUT_DIR") {
            if !dir.is_empty() {
                return PathBuf::from(dir).join(path);
            }
        }
    }
    path.to_path_buf()
}

fn emit(output: &Option<PathBuf>, payload: &str) -> pbdl::Result<()> {
    match output {
        Some(p) => {
            let p = resolve_output(p);
            fs::write(&p, payload)?;
            eprintln!("wrote {}", p.display());
        }
        None => println!("{payload}"),
    }
    Ok(())
}

fn emit_json<T: Serialize>(output: &Option<PathBuf>, value: &T) -> pbdl::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(output, &text)
}

fn parse_lambda(s: &str) -> pbdl::Result<Option<f64>> {
    if s == "auto" {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| pbdl::Error::InvalidArgument(format!("bad lambda {s:?} (number or \"auto\")")))
}

fn load(data: &DataArgs) -> pbdl::Result<LabeledDataset> {
    load_csv(&data.data, &data.label)
}

fn cmd_train(args: TrainArgs) -> pbdl::Result<()> {
    let dataset = load(&args.data)?;
    let triplets = sample_triplets(&dataset.labels, args.triplets, args.seed)?;
    let quads = QuadrupletSet::from_triplets(&triplets, args.margin)?;
    let partition = match args.partition_k {
        Some(k) => Some(farthest_point_partition(&dataset.features, k, args.seed)?),
        None => None,
    };
    let mut cfg = TrainConfig { feature_scale: args.feature_scale, ..TrainConfig::default() };
    match parse_lambda(&args.lambda)? {
        Some(l) => cfg.lambda = l,
        None => {
            let cv = CvConfig { lambda_grid: default_lambda_grid(), folds: 3, seed: args.seed };
            let res = cross_validate(&dataset.features, &quads, partition.as_ref(), &cfg, &cv)?;
            eprintln!("cross-validation selected lambda = {}", res.best_lambda);
            cfg.lambda = res.best_lambda;
        }
    }
    let outcome = match &partition {
        Some(p) => train_pbdl_partitioned(&dataset.features, p, &quads, &cfg)?,
        None => train_pbdl(&dataset.features, &quads, &cfg)?,
    };
    eprintln!(
        "trained K = {}, L = {:.4}, mean hinge = {:.4}",
        outcome.model.k, outcome.model.lipschitz, outcome.mean_hinge
    );
    emit(&args.output, &(outcome.model.to_json()? + "\n"))
}

fn cmd_eval(args: EvalArgs) -> pbdl::Result<()> {
    let dataset = load(&args.data)?;
    if let Some(repeats) = args.repeats {
        let cfg = RelativeConfig {
            repeats,
            triplets: args.triplets,
            partition_k: args.partition_k,
            kmeans_restarts: args.kmeans_restarts,
            knn_k: args.knn_k,
            train: TrainConfig { feature_scale: args.feature_scale, ..TrainConfig::default() },
            cv: match parse_lambda(&args.lambda)? {
                Some(_) => None,
                None => Some(CvConfig::default()),
            },
            seed: args.seed,
            ..RelativeConfig::default()
        };
        let mut cfg = cfg;
        if let Some(l) = parse_lambda(&args.lambda)? {
            cfg.train.lambda = l;
        }
        let summary = run_relative_protocol(&dataset, &cfg)?;
        let report = json!({
            "generated_at": now_secs(),
            "dataset": args.data.data.display().to_string(),
            "repeats": repeats,
            "summary": summary,
        });
        return emit_json(&args.output, &report);
    }

    let model_path = args.model.ok_or_else(|| {
        pbdl::Error::InvalidArgument("either --model or --repeats is required".into())
    })?;
    let model = MaxAffineModel::from_json(&fs::read_to_string(&model_path)?)?;
    let mut classes = dataset.labels.clone();
    classes.sort_unstable();
    classes.dedup();
    let clustering = bregman_kmeans(
        &model,
        &dataset.features,
        classes.len(),
        args.kmeans_restarts,
        args.seed,
    )?;
    let ranking = rank_all(&model, &dataset.features, &dataset.labels, QuerySide::First)?;
    let report = json!({
        "generated_at": now_secs(),
        "dataset": args.data.data.display().to_string(),
        "model": model_path.display().to_string(),
        "metrics": {
            "rand_index": rand_index(&clustering.assignment, &dataset.labels)?,
            "purity": purity(&clustering.assignment, &dataset.labels)?,
            "auc": ranking.auc,
            "average_precision": ranking.average_precision,
        },
    });
    emit_json(&args.output, &report)
}

fn cmd_synth(args: SynthArgs) -> pbdl::Result<()> {
    let kind = DivergenceKind::parse(&args.kind)?;
    let schedule: Vec<usize> = args
        .schedule
        .split(',')
        .map(|s| {
            s.trim().parse().map_err(|_| {
                pbdl::Error::InvalidArgument(format!("bad schedule entry {s:?}"))
            })
        })
        .collect::<pbdl::Result<_>>()?;
    let cfg = RegressionConfig {
        kind,
        schedule,
        seeds: args.seeds,
        sigma: args.sigma,
        base_seed: args.seed,
        ..RegressionConfig::default()
    };
    let curve = run_regression_protocol(&cfg)?;
    let report = json!({
        "generated_at": now_secs(),
        "curve": curve,
    });
    emit_json(&args.output, &report)
}

fn cmd_bounds(args: BoundsArgs) -> pbdl::Result<()> {
    let report = bounds(BoundInputs {
        beta: args.beta,
        radius: args.radius,
        k: args.k,
        dim: args.dim,
        lipschitz: args.lipschitz,
        m: args.m,
        delta: args.delta,
        sigma: args.sigma,
    })?;
    let check = if args.check {
        let spec = SmoothConvexSpec::squared_norm(args.dim, args.radius);
        let model = grid_approximator(&spec, args.k)?;
        // Probe the sup gap on a fine grid of the domain.
        let steps = 40usize;
        let mut worst = 0.0f64;
        let mut idx = vec![0usize; args.dim];
        loop {
            let x: Vec<f64> = idx
                .iter()
                .map(|&i| -args.radius + 2.0 * args.radius * i as f64 / steps as f64)
                .collect();
            let gap = spec.phi(&x) - model.evaluate(&x)?.0;
            worst = worst.max(gap);
            let mut at = 0;
            loop {
                if at == args.dim {
                    break;
                }
                idx[at] += 1;
                if idx[at] <= steps {
                    break;
                }
                idx[at] = 0;
                at += 1;
            }
            if at == args.dim {
                break;
            }
        }
        Some(json!({
            "empirical_value_gap": worst,
            "value_bound": report.value_bound,
            "covering_radius": covering_radius(args.radius, args.dim, args.k),
            "holds": worst <= report.value_bound,
        }))
    } else {
        None
    };
    let payload = json!({
        "generated_at": now_secs(),
        "bounds": report,
        "check": check,
    });
    emit_json(&args.output, &payload)
}

fn cmd_partition(args: PartitionArgs) -> pbdl::Result<()> {
    let dataset = load(&args.data)?;
    let part = farthest_point_partition(&dataset.features, args.k, args.seed)?;
    let report = json!({
        "generated_at": now_secs(),
        "k": args.k,
        "assignment": part.assignment,
        "center_indices": part.center_indices,
        "max_radius": part.max_radius,
    });
    emit_json(&args.output, &report)
}
