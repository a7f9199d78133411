//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data or I/O errors.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use chrono::{DateTime, Duration, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{correlation_summary, pairwise_distances, WeekEmbedding};
use crate::baselines::{KnnScorer, PopularityScorer};
use crate::coverage_metrics::{coverage_profile, coverage_report, lorenz_points, GiniUniverse};
use crate::eval::{auc, AucReport};
use crate::ingest::{
    build_dataset, parse_mentions, read_dataset, read_split, split_leave_one_out, write_dataset, write_split,
    FormatDescriptor, InteractionDataset, ParseMode, SkipCounts, Window,
};
use crate::model::{read_model, write_model, ModelBundle, DEFAULT_INIT_SCALE};
use crate::selection::{mmr_select, relevance_scores, SelectionConfig, DEFAULT_EPSILON};
use crate::synth::{planted_blocks, skewed_landscape, write_simple, PlantedConfig, SkewedConfig};
use crate::training::{train_with, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "newsfactor", version, about = "News-source preference embeddings and diverse source selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse mention tables and build a filtered interaction dataset
    Ingest(IngestArgs),
    /// Hold out one final-day interaction per source for evaluation
    Split(SplitArgs),
    /// Fit source and event embeddings with pairwise-ranking SGD
    Train(TrainArgs),
    /// Leave-one-out AUC of a model and baselines
    Eval(EvalArgs),
    /// Select a diverse subset of sources
    Select(SelectArgs),
    /// Coverage statistics of a given source selection
    Metrics(MetricsArgs),
    /// Pairwise embedding distances of the most active sources
    Distances(DistancesArgs),
    /// Stability of embedding distances across weeks
    Correlate(CorrelateArgs),
    /// Generate a synthetic mention table with planted structure
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InputFormat {
    Gdelt,
    Simple,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Mention files; repeat for several
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "gdelt")]
    format: InputFormat,
    /// Window start (RFC 3339); defaults to the earliest mention
    #[arg(long)]
    start: Option<DateTime<Utc>>,
    /// Window end, exclusive (RFC 3339); defaults to one second past the latest mention
    #[arg(long)]
    end: Option<DateTime<Utc>>,
    #[arg(long, default_value_t = 5)]
    min_events: usize,
    #[arg(long, default_value_t = 5)]
    min_sources: usize,
    /// Abort on the first malformed line instead of skipping it
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Holdout start; defaults to the final 24 hours of the dataset window
    #[arg(long, requires = "holdout_end")]
    holdout_start: Option<DateTime<Utc>>,
    #[arg(long, requires = "holdout_start")]
    holdout_end: Option<DateTime<Utc>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Dataset directory, or a split directory (its train/ part is used)
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_INIT_SCALE)]
    init_scale: f64,
    /// Per-epoch JSON lines; written to stderr when omitted
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    split: PathBuf,
    /// Comma-separated baselines: popularity, knn
    #[arg(long, value_delimiter = ',', default_value = "popularity,knn")]
    baselines: Vec<String>,
    #[arg(long, default_value_t = 10)]
    knn_k: usize,
    /// Also write the report here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[arg(long)]
    model: PathBuf,
    /// Dataset directory (or split directory) the model was trained on
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value = "subset")]
    gini_universe: GiniUniverse,
    /// Output directory for selection.tsv, metrics.json and lorenz.csv
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Selection TSV (rank, source_name, mmr_score) or one source name per line
    #[arg(long)]
    selection: PathBuf,
    #[arg(long, default_value = "subset")]
    gini_universe: GiniUniverse,
    #[arg(long)]
    lorenz_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DistancesArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Number of most active sources to include
    #[arg(long, default_value_t = 1000)]
    top: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CorrelateArgs {
    /// Model directories, one per week, in week order
    #[arg(long = "model", required = true, num_args = 1)]
    models: Vec<PathBuf>,
    /// Dataset directories matching --model one to one
    #[arg(long = "dataset", required = true, num_args = 1)]
    datasets: Vec<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    top: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SynthKind {
    Planted,
    Skewed,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "planted")]
    kind: SynthKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    sources: usize,
    #[arg(long, default_value_t = 2000)]
    events: usize,
    #[arg(long, default_value_t = 4)]
    source_blocks: usize,
    #[arg(long, default_value_t = 4)]
    event_blocks: usize,
    #[arg(long, default_value_t = 0.3)]
    p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    p_out: f64,
    #[arg(long, default_value = "2016-10-01T00:00:00Z")]
    start: DateTime<Utc>,
    #[arg(long, default_value_t = 7)]
    days: u32,
    /// Output file in the simple three-column layout
    #[arg(long)]
    out: PathBuf,
}

/// Raised for argument combinations clap cannot check.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {}", render_chain(&err));
            if err.is::<UsageError>() {
                EXIT_USAGE
            } else {
                EXIT_DATA
            }
        }
    }
}

/// Joins the error chain, dropping causes already quoted by their parent.
fn render_chain(err: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut prev = String::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if !prev.ends_with(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
        prev = msg;
    }
    out
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Ingest(a) => ingest(a),
        Command::Split(a) => split(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Select(a) => select(a),
        Command::Metrics(a) => metrics(a),
        Command::Distances(a) => distances(a),
        Command::Correlate(a) => correlate(a),
        Command::Synth(a) => synth(a),
    }
}

/// Reads a dataset directory, or the `train/` part of a split directory.
fn load_dataset(path: &Path) -> anyhow::Result<InteractionDataset> {
    let dir = if path.join("train").join("meta.json").exists() {
        path.join("train")
    } else {
        path.to_path_buf()
    };
    read_dataset(&dir).with_context(|| format!("reading dataset {}", dir.display()))
}

fn load_model(path: &Path) -> anyhow::Result<ModelBundle> {
    read_model(path).with_context(|| format!("reading model {}", path.display()))
}

fn check_model_matches(bundle: &ModelBundle, ds: &InteractionDataset) -> anyhow::Result<()> {
    if bundle.sources != ds.sources() || bundle.events != ds.events() {
        bail!("model index tables do not match the dataset");
    }
    Ok(())
}

fn write_json_line<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut line = serde_json::to_string(value)?;
    line.push('\n');
    fs::write(path, line).with_context(|| format!("writing {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn ingest(a: IngestArgs) -> anyhow::Result<()> {
    let fmt = match a.format {
        InputFormat::Gdelt => FormatDescriptor::gdelt(),
        InputFormat::Simple => FormatDescriptor::simple(),
    };
    let mode = if a.strict { ParseMode::Strict } else { ParseMode::Lenient };
    if a.min_events == 0 || a.min_sources == 0 {
        return Err(usage("--min-events and --min-sources must be at least 1"));
    }
    let parsed = a
        .inputs
        .par_iter()
        .map(|path| {
            let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            parse_mentions(BufReader::new(file), &fmt, mode).with_context(|| format!("parsing {}", path.display()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let mut skipped = SkipCounts::default();
    let mut records = Vec::new();
    for outcome in parsed {
        skipped.merge(&outcome.skipped);
        records.extend(outcome.records);
    }
    if skipped.total() > 0 {
        log::warn!("skipped {} line(s): {skipped:?}", skipped.total());
    }
    let start = match a.start {
        Some(t) => t,
        None => records
            .iter()
            .map(|r| r.mention_time)
            .min()
            .ok_or_else(|| anyhow!("no mention records in input"))?,
    };
    let end = match a.end {
        Some(t) => t,
        None => records
            .iter()
            .map(|r| r.mention_time)
            .max()
            .ok_or_else(|| anyhow!("no mention records in input"))?
            + Duration::seconds(1),
    };
    let window = Window::new(start, end).map_err(|e| usage(e.to_string()))?;
    let mut ds = build_dataset(&records, window, a.min_events, a.min_sources)?;
    ds.meta.skipped = skipped;
    write_dataset(&a.out, &ds)?;
    print_json(&serde_json::json!({
        "sources": ds.num_sources(),
        "events": ds.num_events(),
        "interactions": ds.num_interactions(),
        "skipped": skipped,
    }))
}

fn split(a: SplitArgs) -> anyhow::Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let holdout = match (a.holdout_start, a.holdout_end) {
        (Some(s), Some(e)) => Window::new(s, e).map_err(|e| usage(e.to_string()))?,
        _ => ds.window().final_day(),
    };
    let pair = split_leave_one_out(&ds, holdout, a.seed)?;
    write_split(&a.out, &pair)?;
    print_json(&pair.report)
}

fn train(a: TrainArgs) -> anyhow::Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let config = TrainConfig {
        alpha: a.alpha,
        lambda: a.lambda,
        k: a.k,
        epochs: a.epochs,
        seed: a.seed,
        init_scale: a.init_scale,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;

    let mut log_sink: Box<dyn Write> = match &a.log {
        Some(path) => Box::new(BufWriter::new(
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(std::io::stderr()),
    };
    let mut log_err = None;
    let outcome = train_with(&ds, &config, |stats| {
        if log_err.is_none() {
            let res = serde_json::to_string(stats)
                .map_err(std::io::Error::other)
                .and_then(|line| writeln!(log_sink, "{line}"));
            log_err = res.err();
        }
    })?;
    if let Some(err) = log_err {
        return Err(anyhow!(err).context("writing training log"));
    }
    log_sink.flush()?;

    let bundle = ModelBundle::new(
        outcome.model,
        config.seed,
        Some(config),
        ds.sources().to_vec(),
        ds.events().to_vec(),
    )?;
    write_model(&a.out, &bundle)?;
    Ok(())
}

#[derive(Serialize)]
struct NamedAuc {
    name: String,
    #[serde(flatten)]
    report: AucReport,
}

#[derive(Serialize)]
struct EvalReport {
    eval_size: usize,
    scorers: Vec<NamedAuc>,
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let pair = read_split(&a.split).with_context(|| format!("reading split {}", a.split.display()))?;
    let bundle = load_model(&a.model)?;
    check_model_matches(&bundle, &pair.train)?;

    let mut scorers = vec![NamedAuc {
        name: "mf".into(),
        report: auc(&bundle.model, &pair.eval_set)?,
    }];
    for name in &a.baselines {
        let report = match name.trim() {
            "popularity" => auc(&PopularityScorer::new(&pair.train)?, &pair.eval_set)?,
            "knn" => auc(
                &KnnScorer::new(&pair.train, a.knn_k).map_err(|e| usage(e.to_string()))?,
                &pair.eval_set,
            )?,
            "" => continue,
            other => return Err(usage(format!("unknown baseline {other:?} (expected popularity or knn)"))),
        };
        scorers.push(NamedAuc {
            name: name.trim().to_owned(),
            report,
        });
    }
    let report = EvalReport {
        eval_size: pair.eval_set.triplets.len(),
        scorers,
    };
    if let Some(out) = &a.out {
        write_json_line(out, &report)?;
    }
    print_json(&report)
}

fn write_lorenz(path: &Path, counts: &[f64]) -> anyhow::Result<()> {
    let mut w = String::from("population_share,coverage_share\n");
    for (x, y) in lorenz_points(counts)? {
        w.push_str(&format!("{x},{y}\n"));
    }
    fs::write(path, w).with_context(|| format!("writing {}", path.display()))
}

fn select(a: SelectArgs) -> anyhow::Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let bundle = load_model(&a.model)?;
    check_model_matches(&bundle, &ds)?;
    let relevance = relevance_scores(&ds)?;
    let config = SelectionConfig {
        n: a.n,
        beta: a.beta,
        epsilon: a.epsilon,
    };
    let result = mmr_select(&bundle.model, &relevance, &config).map_err(|e| usage(e.to_string()))?;

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut tsv = String::from("rank\tsource_name\tmmr_score\n");
    for (rank, pick) in result.picks.iter().enumerate() {
        tsv.push_str(&format!("{}\t{}\t{}\n", rank + 1, ds.source_name(pick.source), pick.score));
    }
    let sel_path = a.out.join("selection.tsv");
    fs::write(&sel_path, tsv).with_context(|| format!("writing {}", sel_path.display()))?;

    let selected = result.sources();
    let report = coverage_report(&ds, &selected, a.gini_universe)?;
    write_json_line(&a.out.join("metrics.json"), &report)?;
    let profile = coverage_profile(&ds, &selected)?;
    write_lorenz(&a.out.join("lorenz.csv"), &profile.counts_for(a.gini_universe))?;
    print_json(&report)
}

/// Source names from a selection TSV (with header) or a plain name list.
fn read_selection(path: &Path, ds: &InteractionDataset) -> anyhow::Result<Vec<usize>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split('\t').collect();
        let name = if fields.len() >= 2 { fields[1] } else { fields[0] };
        if name == "source_name" {
            continue;
        }
        let idx = ds
            .source_index(name.trim())
            .ok_or_else(|| anyhow!("{}: unknown source {name:?}", path.display()))?;
        out.push(idx);
    }
    Ok(out)
}

fn metrics(a: MetricsArgs) -> anyhow::Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let selected = read_selection(&a.selection, &ds)?;
    let report = coverage_report(&ds, &selected, a.gini_universe)?;
    if let Some(path) = &a.lorenz_out {
        let profile = coverage_profile(&ds, &selected)?;
        write_lorenz(path, &profile.counts_for(a.gini_universe))?;
    }
    if let Some(out) = &a.out {
        write_json_line(out, &report)?;
    }
    print_json(&report)
}

/// Indices of the `top` most active sources, ties broken by index.
fn most_active(ds: &InteractionDataset, top: usize) -> Vec<usize> {
    let activity = ds.source_activity();
    let mut order: Vec<usize> = (0..ds.num_sources()).collect();
    order.sort_by_key(|&s| (std::cmp::Reverse(activity[s]), s));
    order.truncate(top);
    order
}

fn distances(a: DistancesArgs) -> anyhow::Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let bundle = load_model(&a.model)?;
    check_model_matches(&bundle, &ds)?;
    let subset = most_active(&ds, a.top);
    let dists = pairwise_distances(&bundle.model, &subset).map_err(|e| usage(e.to_string()))?;
    let mut csv = String::from("source_a,source_b,distance\n");
    let mut k = 0;
    for (i, &s) in subset.iter().enumerate() {
        for &t in &subset[i + 1..] {
            csv.push_str(&format!("{},{},{}\n", ds.source_name(s), ds.source_name(t), dists[k]));
            k += 1;
        }
    }
    fs::write(&a.out, csv).with_context(|| format!("writing {}", a.out.display()))
}

fn correlate(a: CorrelateArgs) -> anyhow::Result<()> {
    if a.models.len() != a.datasets.len() {
        return Err(usage("--model and --dataset must be given the same number of times"));
    }
    if a.models.len() < 2 {
        return Err(usage("need at least two weeks"));
    }
    let mut loaded = Vec::new();
    for (m, d) in a.models.iter().zip(&a.datasets) {
        let ds = load_dataset(d)?;
        let bundle = load_model(m)?;
        check_model_matches(&bundle, &ds)?;
        loaded.push((bundle, ds.source_activity()));
    }
    let weeks = loaded
        .iter()
        .map(|(b, act)| WeekEmbedding::new(&b.model, &b.sources, act))
        .collect::<crate::Result<Vec<_>>>()?;
    let summary = correlation_summary(&weeks, a.top)?;
    if let Some(out) = &a.out {
        write_json_line(out, &summary)?;
    }
    print_json(&summary)
}

fn synth(a: SynthArgs) -> anyhow::Result<()> {
    let records = match a.kind {
        SynthKind::Planted => planted_blocks(&PlantedConfig {
            sources: a.sources,
            events: a.events,
            source_blocks: a.source_blocks,
            event_blocks: a.event_blocks,
            p_in: a.p_in,
            p_out: a.p_out,
            seed: a.seed,
            start: a.start,
            days: a.days,
        }),
        SynthKind::Skewed => skewed_landscape(&SkewedConfig {
            seed: a.seed,
            start: a.start,
            days: a.days,
            ..SkewedConfig::default()
        }),
    }
    .map_err(|e| usage(e.to_string()))?;
    let file = fs::File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_simple(BufWriter::new(file), &records).with_context(|| format!("writing {}", a.out.display()))?;
    print_json(&serde_json::json!({ "records": records.len() }))
}
