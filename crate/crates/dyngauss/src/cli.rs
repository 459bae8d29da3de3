//! Command-line pipeline: dataset generation, training, link-prediction
//! evaluation, uncertainty reporting and embedding export.
//!
//! Every command resolves its settings as flags over config file over
//! defaults, seeds all randomness explicitly, and writes a `manifest.json`
//! listing the produced files at the end of a successful run. Failures leave
//! a `.failed` marker beside whatever partial artifacts exist. Exit codes:
//! 0 success, 2 usage, 1 runtime failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{self, ColumnLayout, DatasetFormat, TemporalGraph};
use crate::kv;
use crate::linkpred::{
    build_lp_dataset, evaluate_lp, train_lp, EmbeddingLag, FeatureMode, LpOptions, LpTrainConfig,
    TimestampMetrics,
};
use crate::sbm::{generate_sbm, SbmConfig};
use crate::trainer::{load_run_dir, train_to_dir, RunDir, TrainConfig};
use crate::uncertainty::{
    average_curves, curve_csv, estimate_du, select_embedding_size, uncertainty_curve, DuEstimate,
    UncertaintyCurve,
};

#[derive(Parser)]
#[command(
    name = "dyngauss",
    version,
    about = "Stochastic temporal graph embedding pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dynamic stochastic-block-model dataset
    GenerateSbm(GenerateSbmArgs),
    /// Train Gaussian embeddings for every (embedding size, seed) pair
    Train(TrainArgs),
    /// Temporal link prediction evaluation (MAP / MRR) over trained runs
    EvalLp(EvalLpArgs),
    /// Uncertainty curves, effective dimensionality and size recommendation
    UqReport(UqReportArgs),
    /// Re-encode one timestamp's embeddings from its checkpoint to CSV
    ExportEmb(ExportEmbArgs),
}

#[derive(Args)]
struct GenerateSbmArgs {
    /// Total node count (must be divisible by --communities)
    #[arg(long)]
    nodes: usize,
    #[arg(long)]
    communities: usize,
    /// Within-community edge probability
    #[arg(long = "p-in")]
    p_in: f64,
    /// Cross-community edge probability
    #[arg(long = "p-out")]
    p_out: f64,
    /// Nodes moved per step, as `min:max`
    #[arg(long = "move", default_value = "10:20")]
    move_range: String,
    #[arg(long)]
    timestamps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset directory to create
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory (with descriptor) or raw edge-list file
    #[arg(long)]
    data: PathBuf,
    /// Column layout for raw files: `src-tgt-ts` or `src-tgt-w-ts`
    #[arg(long)]
    format: Option<String>,
    /// Treat raw-file edges as directed
    #[arg(long)]
    directed: bool,
    /// Embedding sizes to train, comma separated (e.g. `16,32,64`)
    #[arg(long = "L")]
    embed_sizes: Option<String>,
    /// Number of seeds to train per size
    #[arg(long)]
    seeds: Option<usize>,
    /// First seed of the range
    #[arg(long = "seed-base")]
    seed_base: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Hidden layer width
    #[arg(long)]
    hidden: Option<usize>,
    /// Neighborhood depth for triplet sampling
    #[arg(long = "k")]
    max_hop: Option<usize>,
    #[arg(long = "per-anchor")]
    per_anchor: Option<usize>,
    /// Re-initialize every timestamp instead of transferring parameters
    #[arg(long = "no-transfer")]
    no_transfer: bool,
    /// Bias triplet draws by incident edge weight
    #[arg(long = "weighted-sampling")]
    weighted_sampling: bool,
    /// Use the literal replication-scaled widening rule
    #[arg(long = "strict-widen")]
    strict_widen: bool,
    /// Continue runs already present in the output directory
    #[arg(long)]
    resume: bool,
    /// Key-value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parent directory for the per-(size, seed) run directories
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalLpArgs {
    /// Dataset the runs were trained on
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    directed: bool,
    /// Run directories, or parents holding run directories; comma separated
    /// or repeated
    #[arg(long, required = true, value_delimiter = ',')]
    runs: Vec<PathBuf>,
    /// Negatives sampled per positive link
    #[arg(long = "neg-ratio")]
    neg_ratio: Option<f64>,
    /// Link features: `mu` (2L) or `mu+sigma` (4L)
    #[arg(long)]
    features: Option<String>,
    /// Score links at t with embeddings from t instead of t-1
    #[arg(long = "same-timestamp")]
    same_timestamp: bool,
    #[arg(long = "lp-lr")]
    lp_lr: Option<f64>,
    #[arg(long = "lp-epochs")]
    lp_epochs: Option<usize>,
    #[arg(long = "lp-patience")]
    lp_patience: Option<usize>,
    #[arg(long = "lp-batch")]
    lp_batch: Option<usize>,
    /// Train/val/test timestamp ratios
    #[arg(long)]
    ratios: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct UqReportArgs {
    /// Run directories, or parents holding run directories
    #[arg(long, required = true, value_delimiter = ',')]
    runs: Vec<PathBuf>,
    /// Embedding sizes that must be present, comma separated
    #[arg(long = "L")]
    embed_sizes: Option<String>,
    /// Relative convergence tolerance between adjacent sizes
    #[arg(long, default_value_t = 0.05)]
    tolerance: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportEmbArgs {
    /// Run directory holding the checkpoint
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    timestamp: usize,
    /// CSV file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parse and execute, returning the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let (outcome, out_dir) = match cli.command {
        Command::GenerateSbm(args) => {
            let dir = args.out.clone();
            (cmd_generate_sbm(args), Some(dir))
        }
        Command::Train(args) => {
            let dir = args.out.clone();
            (cmd_train(args), Some(dir))
        }
        Command::EvalLp(args) => {
            let dir = args.out.clone();
            (cmd_eval_lp(args), Some(dir))
        }
        Command::UqReport(args) => {
            let dir = args.out.clone();
            (cmd_uq_report(args), Some(dir))
        }
        Command::ExportEmb(args) => {
            let marker = args.out.with_extension("failed");
            let result = cmd_export_emb(args);
            match result {
                Ok(()) => (Ok(()), None),
                Err(e) => {
                    if matches!(e, CliError::Runtime(_)) {
                        let _ = fs::write(&marker, "export failed\n");
                    }
                    (Err(e), None)
                }
            }
        }
    };
    match outcome {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            2
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            if let Some(dir) = out_dir {
                if dir.exists() {
                    let _ = fs::write(dir.join(".failed"), format!("{e}\n"));
                }
            }
            1
        }
    }
}

/// Entry point for the binary.
pub fn main_entry() -> i32 {
    run_from(std::env::args_os())
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

/// Record of one command invocation: resolved config, seeds, and every file
/// the command produced. Written atomically once the run has finished.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<String>,
    pub tool_version: String,
    pub wall_seconds: f64,
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let path = dir.join("manifest.json");
    let tmp = dir.join("manifest.json.tmp");
    fs::write(&tmp, serde_json::to_vec_pretty(manifest)?)?;
    fs::rename(&tmp, &path)?;
    let failed = dir.join(".failed");
    if failed.exists() {
        let _ = fs::remove_file(failed);
    }
    Ok(())
}

/// Relative paths of all regular files under `dir` (one level of run
/// subdirectories deep), sorted.
fn list_artifacts(dir: &Path) -> Result<Vec<String>> {
    let mut paths = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        for entry in fs::read_dir(&current)? {
            let entry = entry?;
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n != "manifest.json") {
                let rel = path
                    .strip_prefix(dir)
                    .unwrap_or(&path)
                    .to_string_lossy()
                    .into_owned();
                paths.push(rel);
            }
        }
    }
    paths.sort();
    Ok(paths)
}

// ---------------------------------------------------------------------------
// Shared flag parsing
// ---------------------------------------------------------------------------

fn parse_usize_list(text: &str, flag: &str) -> CliResult<Vec<usize>> {
    let values: std::result::Result<Vec<usize>, _> =
        text.split(',').map(|s| s.trim().parse()).collect();
    match values {
        Ok(v) if !v.is_empty() && v.iter().all(|&x| x > 0) => Ok(v),
        _ => Err(usage(format!(
            "{flag} expects a comma-separated list of positive integers, got {text:?}"
        ))),
    }
}

fn parse_move_range(text: &str) -> CliResult<(usize, usize)> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| usage(format!("--move expects `min:max`, got {text:?}")))?;
    let lo = lo
        .parse()
        .map_err(|_| usage(format!("--move lower bound {lo:?} is not an integer")))?;
    let hi = hi
        .parse()
        .map_err(|_| usage(format!("--move upper bound {hi:?} is not an integer")))?;
    Ok((lo, hi))
}

fn parse_ratios(text: &str) -> CliResult<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(usage(format!(
            "--ratios expects three values, got {text:?}"
        )));
    }
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("ratio {s:?} is not a number")))
    };
    Ok((parse(parts[0])?, parse(parts[1])?, parse(parts[2])?))
}

fn parse_format(format: Option<&str>, directed: bool) -> CliResult<DatasetFormat> {
    let columns = match format.unwrap_or("src-tgt-ts") {
        "src-tgt-ts" => ColumnLayout::SourceTargetTimestamp,
        "src-tgt-w-ts" => ColumnLayout::SourceTargetWeightTimestamp,
        other => {
            return Err(usage(format!(
                "--format must be `src-tgt-ts` or `src-tgt-w-ts`, got {other:?}"
            )))
        }
    };
    Ok(DatasetFormat { columns, directed })
}

fn load_data(path: &Path, format: Option<&str>, directed: bool) -> CliResult<TemporalGraph> {
    if !path.exists() {
        return Err(usage(format!("dataset {} does not exist", path.display())));
    }
    if path.is_dir() {
        graph::load_dataset(path).map_err(CliError::Runtime)
    } else {
        let fmt = parse_format(format, directed)?;
        graph::load_temporal_graph(path, fmt).map_err(CliError::Runtime)
    }
}

fn read_config_file(path: Option<&Path>) -> CliResult<BTreeMap<String, String>> {
    match path {
        None => Ok(BTreeMap::new()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| usage(format!("cannot read config file {}: {e}", p.display())))?;
            kv::parse(&text).map_err(|e| usage(format!("config file {}: {e}", p.display())))
        }
    }
}

/// Resolve one setting: explicit flag wins, then the config file, then the
/// default.
fn resolve<T: std::str::FromStr>(
    flag: Option<T>,
    file: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> CliResult<T> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match file.get(key) {
        Some(text) => text
            .parse()
            .map_err(|_| usage(format!("config key {key:?} has invalid value {text:?}"))),
        None => Ok(default),
    }
}

/// Expand each path into run directories: a path with a `config` file is a
/// run itself, otherwise its immediate subdirectories with `config` files
/// are taken, sorted.
fn expand_run_dirs(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut runs = Vec::new();
    for path in paths {
        if !path.exists() {
            return Err(usage(format!("run path {} does not exist", path.display())));
        }
        if path.join("config").exists() {
            runs.push(path.clone());
            continue;
        }
        let mut found = Vec::new();
        for entry in fs::read_dir(path).map_err(Error::Io)? {
            let entry = entry.map_err(Error::Io)?;
            let sub = entry.path();
            if sub.is_dir() && sub.join("config").exists() {
                found.push(sub);
            }
        }
        if found.is_empty() {
            return Err(usage(format!(
                "{} is neither a run directory nor a parent of run directories",
                path.display()
            )));
        }
        found.sort();
        runs.extend(found);
    }
    Ok(runs)
}

// ---------------------------------------------------------------------------
// generate-sbm
// ---------------------------------------------------------------------------

fn cmd_generate_sbm(args: GenerateSbmArgs) -> CliResult<()> {
    let started = Instant::now();
    let (move_min, move_max) = parse_move_range(&args.move_range)?;
    let config = SbmConfig {
        n_nodes: args.nodes,
        n_communities: args.communities,
        p_in: args.p_in,
        p_out: args.p_out,
        move_min,
        move_max,
        n_timestamps: args.timestamps,
        seed: args.seed,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;

    let graph = generate_sbm(&config)?;
    fs::create_dir_all(&args.out).map_err(Error::Io)?;
    graph::write_dataset(&graph, &args.out)?;

    let mut manifest_config = BTreeMap::new();
    manifest_config.insert("nodes".into(), config.n_nodes.to_string());
    manifest_config.insert("communities".into(), config.n_communities.to_string());
    manifest_config.insert("p_in".into(), config.p_in.to_string());
    manifest_config.insert("p_out".into(), config.p_out.to_string());
    manifest_config.insert("move_min".into(), config.move_min.to_string());
    manifest_config.insert("move_max".into(), config.move_max.to_string());
    manifest_config.insert("timestamps".into(), config.n_timestamps.to_string());
    manifest_config.insert("seed".into(), config.seed.to_string());
    let manifest = RunManifest {
        command: "generate-sbm".into(),
        config: manifest_config,
        seeds: vec![config.seed],
        artifacts: list_artifacts(&args.out)?,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    write_manifest(&args.out, &manifest)?;
    println!(
        "wrote {} snapshots, {} nodes to {}",
        graph.len(),
        graph.global_node_count,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

fn cmd_train(args: TrainArgs) -> CliResult<()> {
    let started = Instant::now();
    let file = read_config_file(args.config.as_deref())?;

    let sizes = match (&args.embed_sizes, file.get("L")) {
        (Some(text), _) => parse_usize_list(text, "--L")?,
        (None, Some(text)) => parse_usize_list(text, "config key L")?,
        (None, None) => vec![64],
    };
    let n_seeds = resolve(args.seeds, &file, "seeds", 1usize)?;
    if n_seeds == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    let seed_base = resolve(args.seed_base, &file, "seed_base", 0u64)?;
    let defaults = TrainConfig::default();
    let base = TrainConfig {
        embed_size: 0, // per-run below
        hidden_size: resolve(args.hidden, &file, "hidden_size", defaults.hidden_size)?,
        epochs: resolve(args.epochs, &file, "epochs", defaults.epochs)?,
        patience: resolve(args.patience, &file, "patience", defaults.patience)?,
        lr: resolve(args.lr, &file, "lr", defaults.lr)?,
        max_hop: resolve(args.max_hop, &file, "max_hop", defaults.max_hop)?,
        per_anchor: resolve(args.per_anchor, &file, "per_anchor", defaults.per_anchor)?,
        seed: 0, // per-run below
        timestamps: None,
        transfer: if args.no_transfer {
            false
        } else {
            resolve(None, &file, "transfer", defaults.transfer)?
        },
        weighted_sampling: args.weighted_sampling
            || resolve(None, &file, "weighted_sampling", defaults.weighted_sampling)?,
        strict_widen_scaling: args.strict_widen
            || resolve(
                None,
                &file,
                "strict_widen_scaling",
                defaults.strict_widen_scaling,
            )?,
    };

    let graph = load_data(&args.data, args.format.as_deref(), args.directed)?;
    fs::create_dir_all(&args.out).map_err(Error::Io)?;

    let seeds: Vec<u64> = (0..n_seeds as u64).map(|i| seed_base + i).collect();
    for &size in &sizes {
        for &seed in &seeds {
            let config = TrainConfig {
                embed_size: size,
                seed,
                ..base.clone()
            };
            config.validate().map_err(|e| usage(e.to_string()))?;
            let run_dir = args.out.join(format!("L{size}_s{seed}"));
            let store = train_to_dir(&graph, &config, &run_dir, args.resume)?;
            let trained = store.records.len();
            println!(
                "L={size} seed={seed}: {trained} timestamps -> {}",
                run_dir.display()
            );
        }
    }

    let mut manifest_config = base.to_kv();
    manifest_config.remove("embed_size");
    manifest_config.remove("seed");
    manifest_config.insert(
        "L".into(),
        sizes
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    manifest_config.insert("seed_base".into(), seed_base.to_string());
    manifest_config.insert("seeds".into(), n_seeds.to_string());
    manifest_config.insert("data".into(), args.data.display().to_string());
    let manifest = RunManifest {
        command: "train".into(),
        config: manifest_config,
        seeds,
        artifacts: list_artifacts(&args.out)?,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    write_manifest(&args.out, &manifest)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// eval-lp
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct RunEval {
    run: String,
    embed_size: usize,
    seed: u64,
    map: f64,
    mrr: f64,
    per_timestamp: Vec<TimestampMetrics>,
}

#[derive(Debug, Serialize)]
struct SizeStats {
    embed_size: usize,
    runs: usize,
    map_mean: f64,
    map_std: f64,
    mrr_mean: f64,
    mrr_std: f64,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    feature_mode: String,
    lag: String,
    neg_ratio: f64,
    ratios: (f64, f64, f64),
    test_timestamps: (usize, usize),
    runs: Vec<RunEval>,
    per_size: Vec<SizeStats>,
    best: SizeStats,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn cmd_eval_lp(args: EvalLpArgs) -> CliResult<()> {
    let started = Instant::now();
    let file = read_config_file(args.config.as_deref())?;
    let neg_ratio = resolve(args.neg_ratio, &file, "neg_ratio", 5.0f64)?;
    let feature_mode = match args
        .features
        .as_deref()
        .or_else(|| file.get("features").map(String::as_str))
        .unwrap_or("mu")
    {
        "mu" => FeatureMode::Mu,
        "mu+sigma" | "mu-sigma" => FeatureMode::MuSigma,
        other => {
            return Err(usage(format!(
                "--features must be `mu` or `mu+sigma`, got {other:?}"
            )))
        }
    };
    let lag = if args.same_timestamp {
        EmbeddingLag::Same
    } else {
        EmbeddingLag::Previous
    };
    let ratios = match &args.ratios {
        Some(text) => parse_ratios(text)?,
        None => (0.7, 0.1, 0.2),
    };
    let lp_config_base = LpTrainConfig {
        lr: resolve(args.lp_lr, &file, "lp_lr", 1e-4)?,
        epochs: resolve(args.lp_epochs, &file, "lp_epochs", 300)?,
        patience: resolve(args.lp_patience, &file, "lp_patience", 30)?,
        batch_size: resolve(args.lp_batch, &file, "lp_batch", 256)?,
        hidden_size: 0,
        seed: args.seed,
    };

    let graph = load_data(&args.data, args.format.as_deref(), args.directed)?;
    let split = crate::graph::split_timestamps(&graph, ratios)?;
    let run_dirs = expand_run_dirs(&args.runs)?;
    fs::create_dir_all(&args.out).map_err(Error::Io)?;

    let mut evals: Vec<RunEval> = Vec::new();
    for run_dir in &run_dirs {
        let (config, store) = load_run_dir(run_dir)?;
        let options = LpOptions {
            neg_ratio,
            feature_mode,
            lag,
            seed: args.seed,
        };
        let train_ds = build_lp_dataset(&graph, &store, split.train.clone(), options)?;
        if train_ds.examples.is_empty() {
            return Err(CliError::Runtime(Error::Validation(format!(
                "train split {:?} yields no link examples (timestamp 0 is excluded when \
                 scoring with previous-timestamp embeddings); use more timestamps or \
                 --same-timestamp",
                split.train
            ))));
        }
        let val_ds = build_lp_dataset(&graph, &store, split.val.clone(), options)?;
        let test_ds = build_lp_dataset(&graph, &store, split.test.clone(), options)?;
        let lp_config = LpTrainConfig {
            // hidden layer sized like the node embedding
            hidden_size: store.embed_size,
            ..lp_config_base
        };
        let model = train_lp(&train_ds, &val_ds, &lp_config)?;
        let report = evaluate_lp(&model, &test_ds)?;
        // the report names runs by directory name so it stays byte-stable
        // across machines; the manifest records the full paths
        let run_name = run_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| run_dir.display().to_string());
        evals.push(RunEval {
            run: run_name,
            embed_size: config.embed_size,
            seed: config.seed,
            map: report.map,
            mrr: report.mrr,
            per_timestamp: report.per_timestamp,
        });
    }

    // aggregate per embedding size, mean and std over seeds
    let mut by_size: BTreeMap<usize, Vec<&RunEval>> = BTreeMap::new();
    for eval in &evals {
        by_size.entry(eval.embed_size).or_default().push(eval);
    }
    let per_size: Vec<SizeStats> = by_size
        .iter()
        .map(|(&embed_size, group)| {
            let maps: Vec<f64> = group.iter().map(|e| e.map).collect();
            let mrrs: Vec<f64> = group.iter().map(|e| e.mrr).collect();
            let (map_mean, map_std) = mean_std(&maps);
            let (mrr_mean, mrr_std) = mean_std(&mrrs);
            SizeStats {
                embed_size,
                runs: group.len(),
                map_mean,
                map_std,
                mrr_mean,
                mrr_std,
            }
        })
        .collect();
    let best = per_size
        .iter()
        .max_by(|a, b| {
            a.map_mean
                .total_cmp(&b.map_mean)
                .then_with(|| b.embed_size.cmp(&a.embed_size))
        })
        .map(|s| SizeStats { ..*s })
        .expect("at least one run evaluated");

    let mut csv = String::from("run,embed_size,seed,timestamp,map,mrr\n");
    for eval in &evals {
        for tm in &eval.per_timestamp {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                eval.run, eval.embed_size, eval.seed, tm.timestamp_index, tm.map, tm.mrr
            ));
        }
    }
    fs::write(args.out.join("per_timestamp.csv"), csv).map_err(Error::Io)?;

    let report = EvalReport {
        feature_mode: match feature_mode {
            FeatureMode::Mu => "mu".into(),
            FeatureMode::MuSigma => "mu+sigma".into(),
        },
        lag: match lag {
            EmbeddingLag::Previous => "previous".into(),
            EmbeddingLag::Same => "same".into(),
        },
        neg_ratio,
        ratios,
        test_timestamps: (split.test.start, split.test.end),
        runs: evals,
        per_size,
        best,
    };
    fs::write(
        args.out.join("report.json"),
        serde_json::to_vec_pretty(&report).map_err(Error::Json)?,
    )
    .map_err(Error::Io)?;

    let mut manifest_config = BTreeMap::new();
    manifest_config.insert("data".into(), args.data.display().to_string());
    manifest_config.insert("neg_ratio".into(), neg_ratio.to_string());
    manifest_config.insert("features".into(), report.feature_mode.clone());
    manifest_config.insert("lag".into(), report.lag.clone());
    manifest_config.insert(
        "ratios".into(),
        format!("{},{},{}", ratios.0, ratios.1, ratios.2),
    );
    manifest_config.insert("lp_lr".into(), lp_config_base.lr.to_string());
    manifest_config.insert("lp_epochs".into(), lp_config_base.epochs.to_string());
    manifest_config.insert("lp_patience".into(), lp_config_base.patience.to_string());
    manifest_config.insert("lp_batch".into(), lp_config_base.batch_size.to_string());
    manifest_config.insert(
        "runs".into(),
        run_dirs
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    let manifest = RunManifest {
        command: "eval-lp".into(),
        config: manifest_config,
        seeds: vec![args.seed],
        artifacts: list_artifacts(&args.out)?,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    write_manifest(&args.out, &manifest)?;
    println!(
        "MAP {:.4} MRR {:.4} (best L = {})",
        report.best.map_mean, report.best.mrr_mean, report.best.embed_size
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// uq-report
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct UqReport {
    tolerance: f64,
    estimate: DuEstimate,
    recommended_size: usize,
}

fn cmd_uq_report(args: UqReportArgs) -> CliResult<()> {
    let started = Instant::now();
    let run_dirs = expand_run_dirs(&args.runs)?;
    fs::create_dir_all(&args.out).map_err(Error::Io)?;

    // one curve per run, then averaged per embedding size
    let mut by_size: BTreeMap<usize, Vec<UncertaintyCurve>> = BTreeMap::new();
    for run_dir in &run_dirs {
        let (config, store) = load_run_dir(run_dir)?;
        let curve = uncertainty_curve(&store, config.seed)?;
        let csv_name = format!("curve_L{}_s{}.csv", config.embed_size, config.seed);
        fs::write(args.out.join(csv_name), curve_csv(&curve)).map_err(Error::Io)?;
        by_size.entry(config.embed_size).or_default().push(curve);
    }

    if let Some(requested) = &args.embed_sizes {
        let wanted = parse_usize_list(requested, "--L")?;
        let missing: Vec<String> = wanted
            .iter()
            .filter(|size| !by_size.contains_key(size))
            .map(|size| size.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(usage(format!(
                "no runs found for requested embedding sizes: {}",
                missing.join(", ")
            )));
        }
        by_size.retain(|size, _| wanted.contains(size));
    }
    if by_size.len() < 2 {
        return Err(usage(format!(
            "effective dimensionality needs runs for at least 2 embedding sizes, found {}",
            by_size.len()
        )));
    }

    let averaged: Vec<UncertaintyCurve> = by_size
        .values()
        .map(|curves| average_curves(curves))
        .collect::<Result<_>>()?;
    let estimate = estimate_du(&averaged, args.tolerance)?;
    let recommended = select_embedding_size(&estimate);
    let report = UqReport {
        tolerance: args.tolerance,
        estimate,
        recommended_size: recommended,
    };
    fs::write(
        args.out.join("du.json"),
        serde_json::to_vec_pretty(&report).map_err(Error::Json)?,
    )
    .map_err(Error::Io)?;

    let mut manifest_config = BTreeMap::new();
    manifest_config.insert("tolerance".into(), args.tolerance.to_string());
    manifest_config.insert(
        "runs".into(),
        run_dirs
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    let manifest = RunManifest {
        command: "uq-report".into(),
        config: manifest_config,
        seeds: Vec::new(),
        artifacts: list_artifacts(&args.out)?,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    write_manifest(&args.out, &manifest)?;
    println!(
        "effective uncertainty dimensionality {} (recommended embedding size {recommended})",
        report.estimate.d_u
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// export-emb
// ---------------------------------------------------------------------------

fn cmd_export_emb(args: ExportEmbArgs) -> CliResult<()> {
    let run = RunDir::new(&args.run);
    let ckpt = run.checkpoint_path(args.timestamp);
    if !ckpt.exists() {
        return Err(usage(format!(
            "no checkpoint for timestamp {} in {}",
            args.timestamp,
            args.run.display()
        )));
    }
    let (params, _) = crate::checkpoint::load_checkpoint(&ckpt)?;
    let node_count = params.input_dim();
    let features = crate::graph::NodeFeatures::one_hot(node_count);
    let embeddings: Result<Vec<_>> = (0..node_count)
        .map(|node| crate::encoder::encode_node(&params, &features, node))
        .collect();
    let embeddings = embeddings?;

    // same CSV layout the trainer writes
    let staging = RunDir::new(
        args.out
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    );
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(Error::Io)?;
        }
    }
    staging.write_embeddings(args.timestamp, &embeddings)?;
    let staged = staging.embeddings_path(args.timestamp);
    if staged != args.out {
        fs::rename(&staged, &args.out).map_err(Error::Io)?;
    }
    println!(
        "exported {} embeddings of size {} to {}",
        node_count,
        params.embed_size(),
        args.out.display()
    );
    Ok(())
}
