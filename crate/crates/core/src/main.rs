//! Command-line interface for the incomplete multi-view clustering toolkit.
//!
//! Every flag can also be set in a TOML config file passed with `--config`;
//! flags take precedence over file values. On failure the process exits
//! nonzero after printing a single machine-readable JSON line to stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use imcgrmf::clustering::{kmeans, KMeansParams};
use imcgrmf::dataset::{
    load_labels, load_views, make_incomplete_split, save_labels, save_views, MultiViewDataset,
    RoundingRule, SplitSpec,
};
use imcgrmf::harness::{
    default_lambda1_grid, default_lambda2_grid, grid_search_on, run_experiment_on, write_grid,
    write_report, ExperimentConfig, Method,
};
use imcgrmf::metrics;
use imcgrmf::solver::{
    assemble_representation, build_graphs, fit, load_model, save_model, ModelParams, NeighborSpec,
};
use imcgrmf::{Error, Result};

#[derive(Parser)]
#[command(
    name = "imcgrmf",
    version,
    about = "Incomplete multi-view clustering via graph-regularized matrix factorization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an incomplete-view split of a complete dataset directory.
    Split(SplitArgs),
    /// Fit the factorization model and save it as a model directory.
    Fit(FitArgs),
    /// Cluster the representation of a fitted model with k-means.
    Cluster(ClusterArgs),
    /// Score predicted labels against ground truth.
    Evaluate(EvaluateArgs),
    /// Run repeated split/fit/cluster/score trials over paired ratios.
    Experiment(ExperimentArgs),
    /// Grid search over the two penalty weights.
    Grid(GridArgs),
}

/// Values accepted in a `--config` TOML file; keys mirror the long flags.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    model: Option<PathBuf>,
    pred: Option<PathBuf>,
    truth: Option<PathBuf>,
    method: Option<Method>,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    latent_dim: Option<usize>,
    neighbors: Option<NeighborSpec>,
    paired_ratio: Option<f64>,
    paired_ratios: Option<Vec<f64>>,
    trials: Option<usize>,
    seed: Option<u64>,
    max_iter: Option<usize>,
    tol: Option<f64>,
    clusters: Option<usize>,
    restarts: Option<usize>,
    kmeans_iter: Option<usize>,
    kmeans_seed: Option<u64>,
    rounding: Option<RoundingRule>,
    scale: Option<bool>,
    lambda1_grid: Option<Vec<f64>>,
    lambda2_grid: Option<Vec<f64>>,
}

impl FileConfig {
    fn load(path: &Option<PathBuf>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig {
            reason: format!("{}: {e}", path.display()),
        })
    }
}

/// Newtype so clap can parse the rounding rule via FromStr.
#[derive(Debug, Clone, Copy)]
struct RoundingRuleArg(RoundingRule);

impl std::str::FromStr for RoundingRuleArg {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.parse().map(RoundingRuleArg)
    }
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidConfig {
        reason: format!("--{flag} is required (flag or config file)"),
    })
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset directory (view_k.csv, mask.csv, optional labels.csv).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory for the split dataset.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Fraction of samples keeping all views, in (0, 1].
    #[arg(long)]
    paired_ratio: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// How to round ratio*n: nearest, floor, or ceil.
    #[arg(long)]
    rounding: Option<RoundingRuleArg>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output model directory.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    /// Latent dimension K; defaults to the number of label classes.
    #[arg(long)]
    latent_dim: Option<usize>,
    /// Neighbor count for the kNN graphs, or "auto".
    #[arg(long)]
    neighbors: Option<NeighborSpec>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Min-max scale each feature before fitting.
    #[arg(long)]
    scale: bool,
    /// Also write per-view graph edge lists into the model directory.
    #[arg(long)]
    dump_graphs: bool,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset directory the model was fitted on.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Fitted model directory.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Output labels CSV (one id per row, original sample order).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Cluster count; defaults to the number of label classes.
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    kmeans_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Predicted labels CSV.
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Ground-truth labels CSV.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Optional JSON output file.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory for results.csv / results.json / traces.
    #[arg(long)]
    output: Option<PathBuf>,
    /// imcgrmf, bsv, or concat.
    #[arg(long)]
    method: Option<Method>,
    /// Comma-separated paired ratios.
    #[arg(long, value_delimiter = ',')]
    paired_ratios: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    neighbors: Option<NeighborSpec>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    kmeans_iter: Option<usize>,
    #[arg(long)]
    kmeans_seed: Option<u64>,
    #[arg(long)]
    rounding: Option<RoundingRuleArg>,
    #[arg(long)]
    scale: bool,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Comma-separated λ1 grid; defaults to 10^0 .. 10^2 in half decades.
    #[arg(long, value_delimiter = ',')]
    lambda1_grid: Option<Vec<f64>>,
    /// Comma-separated λ2 grid; defaults to 10^-5 .. 10^-1 in decades.
    #[arg(long, value_delimiter = ',')]
    lambda2_grid: Option<Vec<f64>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Split(args) => cmd_split(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Grid(args) => cmd_grid(args),
    }
}

fn cmd_split(args: SplitArgs) -> Result<()> {
    let file = FileConfig::load(&args.config)?;
    let input = required(args.input.or(file.input), "input")?;
    let output = required(args.output.or(file.output), "output")?;
    let ratio = required(args.paired_ratio.or(file.paired_ratio), "paired-ratio")?;
    let spec = SplitSpec {
        paired_ratio: ratio,
        seed: args.seed.or(file.seed).unwrap_or(0),
        rounding: args
            .rounding
            .map(|r| r.0)
            .or(file.rounding)
            .unwrap_or_default(),
    };
    let dataset = load_views(&input)?;
    let split = make_incomplete_split(&dataset, &spec)?;
    save_views(&split, &output, Some(&spec))?;
    println!(
        "split: n={} paired={} unpaired={:?} -> {}",
        split.n_samples(),
        split.paired_count(),
        split.unpaired_counts(),
        output.display()
    );
    if spec.paired_ratio < 1.0 && split.is_complete() {
        println!("note: ratio {ratio} rounded to a fully paired split");
    }
    Ok(())
}

fn resolve_latent_dim(
    flag: Option<usize>,
    file: Option<usize>,
    dataset: &MultiViewDataset,
) -> Result<usize> {
    flag.or(file)
        .or_else(|| dataset.class_count())
        .ok_or_else(|| Error::InvalidConfig {
            reason: "--latent-dim is required when the dataset has no labels".into(),
        })
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let file = FileConfig::load(&args.config)?;
    let input = required(args.input.or(file.input), "input")?;
    let output = required(args.output.or(file.output), "output")?;
    let mut dataset = load_views(&input)?;
    if args.scale || file.scale.unwrap_or(false) {
        dataset = dataset.min_max_scaled();
    }
    let latent_dim = resolve_latent_dim(args.latent_dim, file.latent_dim, &dataset)?;
    let defaults = ModelParams::new(latent_dim);
    let params = ModelParams {
        lambda1: args.lambda1.or(file.lambda1).unwrap_or(defaults.lambda1),
        lambda2: args.lambda2.or(file.lambda2).unwrap_or(defaults.lambda2),
        latent_dim,
        neighbors: args
            .neighbors
            .or(file.neighbors)
            .unwrap_or(defaults.neighbors),
        max_iter: args.max_iter.or(file.max_iter).unwrap_or(defaults.max_iter),
        tol: args.tol.or(file.tol).unwrap_or(defaults.tol),
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
    };
    let state = fit(&dataset, &params)?;
    save_model(&state, &params, &output)?;
    if args.dump_graphs {
        for (k, graph) in build_graphs(&dataset, &params)?.iter().enumerate() {
            graph.write_edge_list(&output.join(format!("graph_{}.csv", k + 1)))?;
        }
    }
    println!(
        "fit: iterations={} final_objective={} model -> {}",
        state.iterations(),
        state.final_objective().unwrap_or(f64::NAN),
        output.display()
    );
    Ok(())
}

fn cmd_cluster(args: ClusterArgs) -> Result<()> {
    let file = FileConfig::load(&args.config)?;
    let input = required(args.input.or(file.input), "input")?;
    let model_dir = required(args.model.or(file.model), "model")?;
    let output = required(args.output.or(file.output), "output")?;
    let dataset = load_views(&input)?;
    let (_params, state) = load_model(&model_dir)?;
    let representation = assemble_representation(&state, &dataset)?;

    let clusters = args
        .clusters
        .or(file.clusters)
        .or_else(|| dataset.class_count())
        .ok_or_else(|| Error::InvalidConfig {
            reason: "--clusters is required when the dataset has no labels".into(),
        })?;
    let defaults = KMeansParams::new(clusters);
    let km = KMeansParams {
        clusters,
        restarts: args.restarts.or(file.restarts).unwrap_or(defaults.restarts),
        max_iter: args
            .kmeans_iter
            .or(file.kmeans_iter)
            .unwrap_or(defaults.max_iter),
        seed: args.seed.or(file.kmeans_seed).or(file.seed).unwrap_or(0),
    };
    let result = kmeans(representation.view(), &km)?;

    // emit labels in original sample order
    let mut original = vec![0usize; dataset.n_samples()];
    for (pos, &orig) in dataset.sample_ids().iter().enumerate() {
        original[orig] = result.labels[pos];
    }
    save_labels(&output, &original)?;
    print!(
        "cluster: clusters={} wcss={} -> {}",
        clusters,
        result.wcss,
        output.display()
    );
    if let Some(truth) = dataset.labels() {
        print!(
            " acc={:.4} nmi={:.4} purity={:.4}",
            metrics::accuracy(&result.labels, truth)?,
            metrics::nmi(&result.labels, truth)?,
            metrics::purity(&result.labels, truth)?
        );
    }
    println!();
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let file = FileConfig::load(&args.config)?;
    let pred_path = required(args.pred.or(file.pred), "pred")?;
    let truth_path = required(args.truth.or(file.truth), "truth")?;
    let pred = load_labels(&pred_path)?;
    let truth = load_labels(&truth_path)?;
    let acc = metrics::accuracy(&pred, &truth)?;
    let nmi = metrics::nmi(&pred, &truth)?;
    let purity = metrics::purity(&pred, &truth)?;
    println!("acc={acc} nmi={nmi} purity={purity}");
    if let Some(out) = args.output.or(file.output) {
        let text = serde_json::to_string_pretty(
            &serde_json::json!({ "acc": acc, "nmi": nmi, "purity": purity }),
        )
        .expect("metrics serialize");
        std::fs::write(&out, text).map_err(|source| Error::Io { path: out, source })?;
    }
    Ok(())
}

struct ResolvedExperiment {
    config: ExperimentConfig,
    dataset: MultiViewDataset,
    output: PathBuf,
}

fn resolve_experiment(args: &ExperimentArgs, file: &FileConfig) -> Result<ResolvedExperiment> {
    let input = required(args.input.clone().or(file.input.clone()), "input")?;
    let output = required(args.output.clone().or(file.output.clone()), "output")?;
    let mut dataset = load_views(&input)?;
    let scale = args.scale || file.scale.unwrap_or(false);
    if scale {
        dataset = dataset.min_max_scaled();
    }
    let latent_dim = resolve_latent_dim(args.latent_dim, file.latent_dim, &dataset)?;
    let defaults = ModelParams::new(latent_dim);
    let seed = args.seed.or(file.seed).unwrap_or(defaults.seed);
    let params = ModelParams {
        lambda1: args.lambda1.or(file.lambda1).unwrap_or(defaults.lambda1),
        lambda2: args.lambda2.or(file.lambda2).unwrap_or(defaults.lambda2),
        latent_dim,
        neighbors: args
            .neighbors
            .or(file.neighbors)
            .unwrap_or(defaults.neighbors),
        max_iter: args.max_iter.or(file.max_iter).unwrap_or(defaults.max_iter),
        tol: args.tol.or(file.tol).unwrap_or(defaults.tol),
        seed,
    };
    let clusters = args
        .clusters
        .or(file.clusters)
        .or_else(|| dataset.class_count())
        .ok_or(Error::MissingLabels)?;
    let km_defaults = KMeansParams::new(clusters);
    let kmeans_params = KMeansParams {
        clusters,
        restarts: args
            .restarts
            .or(file.restarts)
            .unwrap_or(km_defaults.restarts),
        max_iter: args
            .kmeans_iter
            .or(file.kmeans_iter)
            .unwrap_or(km_defaults.max_iter),
        seed: args.kmeans_seed.or(file.kmeans_seed).unwrap_or(seed),
    };
    let config = ExperimentConfig {
        dataset_dir: input,
        method: args.method.or(file.method).unwrap_or(Method::ImcGrmf),
        paired_ratios: args
            .paired_ratios
            .clone()
            .or_else(|| file.paired_ratios.clone())
            .unwrap_or_else(|| vec![0.1, 0.3, 0.5, 0.7, 0.9]),
        trials: args.trials.or(file.trials).unwrap_or(5),
        params,
        kmeans: kmeans_params,
        rounding: args
            .rounding
            .map(|r| r.0)
            .or(file.rounding)
            .unwrap_or_default(),
        scale,
    };
    Ok(ResolvedExperiment {
        config,
        dataset,
        output,
    })
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let file = FileConfig::load(&args.config)?;
    let resolved = resolve_experiment(&args, &file)?;
    let report = run_experiment_on(&resolved.dataset, &resolved.config)?;
    write_report(&report, &resolved.output)?;
    for cell in &report.cells {
        if cell.invalid {
            println!(
                "ratio {}: invalid (all {} trials failed)",
                cell.ratio, report.trials
            );
        } else {
            println!(
                "ratio {}: acc={:.4} nmi={:.4} purity={:.4} ({}/{} trials)",
                cell.ratio,
                cell.mean_acc.unwrap_or(f64::NAN),
                cell.mean_nmi.unwrap_or(f64::NAN),
                cell.mean_purity.unwrap_or(f64::NAN),
                cell.trials_ok,
                report.trials
            );
        }
    }
    for flag in &report.flags {
        println!("note: {flag}");
    }
    println!("report -> {}", resolved.output.display());
    Ok(())
}

fn cmd_grid(args: GridArgs) -> Result<()> {
    let file = FileConfig::load(&args.experiment.config)?;
    let lambda1_grid = args
        .lambda1_grid
        .clone()
        .or_else(|| file.lambda1_grid.clone())
        .unwrap_or_else(default_lambda1_grid);
    let lambda2_grid = args
        .lambda2_grid
        .clone()
        .or_else(|| file.lambda2_grid.clone())
        .unwrap_or_else(default_lambda2_grid);
    let resolved = resolve_experiment(&args.experiment, &file)?;
    let outcome = grid_search_on(
        &resolved.dataset,
        &resolved.config,
        &lambda1_grid,
        &lambda2_grid,
    )?;
    write_grid(&outcome, &resolved.output)?;
    println!(
        "grid: best lambda1={} lambda2={} acc={:.4} ({} cells) -> {}",
        outcome.best_lambda1,
        outcome.best_lambda2,
        outcome.best_acc,
        outcome.table.len(),
        resolved.output.display()
    );
    Ok(())
}
