//! The `surprisal-detect` command line.
//!
//! Each stage is its own subcommand and stages talk through files:
//!
//! ```text
//! fetch-logprobs  dataset.jsonl -> logprob cache
//! extract         logprob cache (+ dataset) -> feature file
//! train           feature file -> model.json
//! predict         feature file + model.json -> predictions
//! eval            predictions + labels -> report
//! boost           dataset + cache + detector scores -> model, predictions, report
//! importance      model.json -> per-feature and per-block gain shares
//! diagnose        feature file -> per-class mu_s / var_s summaries
//! ```
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 network or backend error.

use std::collections::{HashMap, HashSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::eval::classification_report;
use crate::features::{ExtractorConfig, FeatureError, FEATURE_COUNT, FEATURE_NAMES};
use crate::gbdt::{self, GbdtError, GbdtModel, GbdtParams, ScalePosWeight};
use crate::pipeline::{
    self, diagnose, read_feature_file, read_predictions, write_feature_file, write_predictions, BlockImportance,
    Dataset, FeatureRecord, FeatureTable, LabeledExample, PipelineError, Prediction, RunManifest,
};
use crate::provider::{self, CacheError, FetchError, ProviderProfile, DEFAULT_MAX_TOKENS};

pub const DEFAULT_API_KEY_ENV: &str = "SURPRISAL_API_KEY";

const AFTER_HELP: &str = "\
Environment:
  SURPRISAL_API_KEY  Bearer token for the scoring endpoint. Another variable
                     can be named with --api-key-env or provider.api_key_env.
                     Keys are never accepted on the command line.
  RUST_LOG           Log filter for diagnostics on stderr (default: info).

Exit codes: 0 ok, 1 usage error, 2 data error, 3 network/backend error.";

#[derive(Debug, Parser)]
#[command(name = "surprisal-detect", version, about = "Detect machine-generated text from surprisal diversity", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score texts of a dataset with a completions endpoint and append
    /// their token logprobs to a cache.
    FetchLogprobs(FetchArgs),
    /// Turn cached logprobs into a feature file.
    Extract(ExtractArgs),
    /// Fit a model on a feature file.
    Train(TrainArgs),
    /// Score a feature file with a trained model.
    Predict(PredictArgs),
    /// Compare predictions with labels.
    Eval(EvalArgs),
    /// Train and evaluate on diversity features fused with detector scores.
    Boost(BoostArgs),
    /// Print per-feature and per-block gain shares of a model.
    Importance(ImportanceArgs),
    /// Summarize mu_s and var_s per class.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
struct ManifestArg {
    /// TOML run manifest supplying defaults; explicit flags win
    #[arg(long, value_name = "PATH")]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TokenArgs {
    /// Maximum scored tokens per text [default: 1024]
    #[arg(long, value_name = "N")]
    max_tokens: Option<usize>,
}

#[derive(Debug, Args)]
struct ExtractorArgs {
    /// Histogram bins for the second-difference entropy [default: 20]
    #[arg(long, value_name = "N")]
    entropy_bins: Option<usize>,
    /// Shortest surprisal sequence kept [default: 4]
    #[arg(long, value_name = "N")]
    min_length: Option<usize>,
}

#[derive(Debug, Args)]
struct GbdtArgs {
    /// Boosting rounds [default: 200]
    #[arg(long, value_name = "N")]
    n_estimators: Option<usize>,
    /// Maximum tree depth [default: 12]
    #[arg(long, value_name = "N")]
    max_depth: Option<usize>,
    /// Shrinkage applied to leaf weights [default: 0.3]
    #[arg(long, value_name = "X")]
    learning_rate: Option<f64>,
    /// Row fraction sampled per round [default: 0.7]
    #[arg(long, value_name = "X")]
    subsample: Option<f64>,
    /// Column fraction sampled per round [default: 0.8]
    #[arg(long, value_name = "X")]
    colsample_bytree: Option<f64>,
    /// Minimum hessian sum in each child [default: 5]
    #[arg(long, value_name = "X")]
    min_child_weight: Option<f64>,
    /// Minimum split gain [default: 1]
    #[arg(long, value_name = "X")]
    gamma: Option<f64>,
    /// L2 penalty on leaf weights [default: 1]
    #[arg(long, value_name = "X", alias = "reg-lambda")]
    lambda_reg: Option<f64>,
    /// Positive-class weight, a number or "auto" for #neg/#pos [default: auto]
    #[arg(long, value_name = "X|auto")]
    scale_pos_weight: Option<ScalePosWeight>,
    /// Seed for row and column sampling [default: 42]
    #[arg(long, value_name = "N", alias = "random-state")]
    seed: Option<u64>,
}

impl GbdtArgs {
    fn apply(&self, p: &mut GbdtParams) {
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { p.$field = v; })*
            };
        }
        set!(n_estimators => n_estimators, max_depth => max_depth, learning_rate => learning_rate,
             subsample => subsample, colsample_bytree => colsample_bytree,
             min_child_weight => min_child_weight, gamma => gamma, lambda_reg => lambda_reg,
             scale_pos_weight => scale_pos_weight, seed => random_state);
    }
}

#[derive(Debug, Args)]
struct ProviderArgs {
    /// Completions endpoint URL
    #[arg(long, value_name = "URL")]
    endpoint: Option<String>,
    /// Model name sent with each request [default: gpt2]
    #[arg(long, value_name = "NAME")]
    model_name: Option<String>,
    /// Environment variable holding the API key [default: SURPRISAL_API_KEY]
    #[arg(long, value_name = "VAR")]
    api_key_env: Option<String>,
    /// Response shape: echo-completions or prompt-logprobs [default: echo-completions]
    #[arg(long, value_name = "PROFILE", value_parser = parse_profile)]
    profile: Option<ProviderProfile>,
    /// Requests in flight at once [default: 8]
    #[arg(long, value_name = "N")]
    max_concurrency: Option<usize>,
    /// Attempts per text, including the first [default: 4]
    #[arg(long, value_name = "N")]
    max_attempts: Option<u32>,
    /// Per-request timeout in milliseconds [default: 60000]
    #[arg(long, value_name = "MS")]
    timeout_ms: Option<u64>,
    /// Text prepended before scoring; its tokens are dropped [default: none]
    #[arg(long, value_name = "TEXT")]
    bos_prefix: Option<String>,
}

fn parse_profile(s: &str) -> Result<ProviderProfile, String> {
    match s {
        "echo-completions" => Ok(ProviderProfile::EchoCompletions),
        "prompt-logprobs" => Ok(ProviderProfile::PromptLogprobs),
        _ => Err(format!("unknown profile {s:?}")),
    }
}

#[derive(Debug, Args)]
struct FetchArgs {
    /// Dataset whose texts are scored [default: manifest data.train and data.test]
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Logprob cache to append to [default: manifest data.logprob_cache]
    #[arg(long, value_name = "PATH")]
    cache: Option<PathBuf>,
    /// Rescore ids already in the cache and replace their records
    #[arg(long)]
    overwrite: bool,
    #[command(flatten)]
    provider: ProviderArgs,
    #[command(flatten)]
    tokens: TokenArgs,
    #[command(flatten)]
    manifest: ManifestArg,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Logprob cache [default: manifest data.logprob_cache]
    #[arg(long, value_name = "PATH")]
    cache: Option<PathBuf>,
    /// Dataset supplying labels, precomputed features and detector scores;
    /// without it every cache record becomes an unlabeled row
    #[arg(long, value_name = "PATH")]
    dataset: Option<PathBuf>,
    /// Feature file to write
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Detector scores appended after the nine features, comma separated
    /// [default: manifest booster.scores when --dataset is given, else none]
    #[arg(long, value_name = "NAMES", value_delimiter = ',')]
    scores: Option<Vec<String>>,
    #[command(flatten)]
    extractor: ExtractorArgs,
    #[command(flatten)]
    tokens: TokenArgs,
    #[command(flatten)]
    manifest: ManifestArg,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Feature file with labels
    #[arg(long, value_name = "PATH")]
    features: PathBuf,
    /// Where to write the model
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Names for the extra score columns, comma separated [default: score_0, score_1, ...]
    #[arg(long, value_name = "NAMES", value_delimiter = ',')]
    scores: Option<Vec<String>>,
    #[command(flatten)]
    gbdt: GbdtArgs,
    #[command(flatten)]
    manifest: ManifestArg,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Feature file to score
    #[arg(long, value_name = "PATH")]
    features: PathBuf,
    /// Trained model
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Predictions file to write
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Predictions file
    #[arg(long, value_name = "PATH")]
    predictions: PathBuf,
    /// Any JSONL file with "id" and "label" per line (dataset or feature file)
    #[arg(long, value_name = "PATH")]
    labels: PathBuf,
    /// Scores at or above this are called machine [default: 0.5]
    #[arg(long, value_name = "X", default_value_t = 0.5)]
    threshold: f64,
    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoostArgs {
    /// Training dataset [default: manifest data.train]
    #[arg(long, value_name = "PATH")]
    train: Option<PathBuf>,
    /// Test dataset [default: manifest data.test]
    #[arg(long, value_name = "PATH")]
    test: Option<PathBuf>,
    /// Logprob cache [default: manifest data.logprob_cache]
    #[arg(long, value_name = "PATH")]
    cache: Option<PathBuf>,
    /// Detector score names, comma separated [default: manifest booster.scores]
    #[arg(long, value_name = "NAMES", value_delimiter = ',')]
    scores: Option<Vec<String>>,
    /// Model output [default: manifest output.model]
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,
    /// Predictions output [default: manifest output.predictions]
    #[arg(long, value_name = "PATH")]
    predictions: Option<PathBuf>,
    /// Report output; the report also goes to stdout [default: manifest output.report]
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    #[command(flatten)]
    extractor: ExtractorArgs,
    #[command(flatten)]
    gbdt: GbdtArgs,
    #[command(flatten)]
    tokens: TokenArgs,
    #[command(flatten)]
    manifest: ManifestArg,
}

#[derive(Debug, Args)]
struct ImportanceArgs {
    /// Trained model
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Write JSON here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    /// Feature file with labels
    #[arg(long, value_name = "PATH")]
    features: PathBuf,
    /// Histogram bins [default: 20]
    #[arg(long, value_name = "N", default_value_t = pipeline::DEFAULT_HISTOGRAM_BINS)]
    bins: usize,
    /// Write JSON here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// A failed invocation and the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Backend(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Backend(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Data(m) | Self::Backend(m) => m,
        }
    }
}

impl From<FetchError> for CliError {
    fn from(e: FetchError) -> Self {
        match e {
            FetchError::InvalidConfig(_) => Self::Usage(e.to_string()),
            e if e.is_backend() => Self::Backend(e.to_string()),
            e => Self::Data(e.to_string()),
        }
    }
}

impl From<GbdtError> for CliError {
    fn from(e: GbdtError) -> Self {
        match e {
            GbdtError::InvalidParams(_) => Self::Usage(e.to_string()),
            e => Self::Data(e.to_string()),
        }
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::InvalidConfig(_) => Self::Usage(e.to_string()),
            e => Self::Data(e.to_string()),
        }
    }
}

impl From<CacheError> for CliError {
    fn from(e: CacheError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Fetch(e) => e.into(),
            PipelineError::Gbdt(e) => e.into(),
            PipelineError::Feature(e) => e.into(),
            PipelineError::Manifest(m) => Self::Usage(m),
            e => Self::Data(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// One-line reason for a clap failure.
fn clap_reason(err: &clap::Error) -> String {
    if err.kind() == ErrorKind::MissingRequiredArgument {
        if let Some(ContextValue::Strings(args)) = err.get(ContextKind::InvalidArg) {
            return format!("missing required flag {}", args.join(", "));
        }
    }
    let rendered = err.to_string();
    rendered
        .lines()
        .next()
        .unwrap_or("invalid arguments")
        .trim_start_matches("error: ")
        .to_owned()
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to stderr.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = err.print();
                return 0;
            }
            eprintln!("error: {}", clap_reason(&err));
            eprintln!("try 'surprisal-detect --help' for usage");
            return 1;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.exit_code()
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::FetchLogprobs(a) => fetch(a),
        Command::Extract(a) => extract(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Boost(a) => boost(a),
        Command::Importance(a) => importance(a),
        Command::Diagnose(a) => diagnose_cmd(a),
    }
}

fn load_manifest(arg: &ManifestArg) -> CliResult<RunManifest> {
    match &arg.manifest {
        Some(path) => Ok(RunManifest::load(path)?),
        None => Ok(RunManifest::default()),
    }
}

fn extractor_config(manifest: &RunManifest, args: &ExtractorArgs) -> CliResult<ExtractorConfig> {
    let config = ExtractorConfig {
        entropy_bins: args.entropy_bins.unwrap_or(manifest.extractor.entropy_bins),
        min_length: args.min_length.unwrap_or(manifest.extractor.min_length),
    };
    config.validate()?;
    Ok(config)
}

fn gbdt_params(manifest: &RunManifest, args: &GbdtArgs) -> CliResult<GbdtParams> {
    let mut params = manifest.gbdt.clone();
    args.apply(&mut params);
    params.validate()?;
    Ok(params)
}

fn emit_json(value: &impl Serialize, out: Option<&Path>) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::from)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn fetch(args: FetchArgs) -> CliResult {
    let manifest = load_manifest(&args.manifest)?;
    let max_tokens = args.tokens.max_tokens.unwrap_or(manifest.max_tokens);
    let p = &args.provider;
    let mut config = manifest.provider.clone().unwrap_or_default();
    match (&p.endpoint, &manifest.provider) {
        (Some(url), _) => config.endpoint_url = url.clone(),
        (None, Some(_)) => {}
        (None, None) => return Err(usage("missing required flag --endpoint <URL>")),
    }
    if let Some(v) = &p.model_name {
        config.model_name = v.clone();
    }
    config.api_key_env = p
        .api_key_env
        .clone()
        .or(config.api_key_env)
        .or_else(|| Some(DEFAULT_API_KEY_ENV.to_owned()));
    if let Some(v) = p.profile {
        config.profile = v;
    }
    if let Some(v) = p.max_concurrency {
        config.max_concurrency = v;
    }
    if let Some(v) = p.max_attempts {
        config.retry.max_attempts = v;
    }
    if let Some(v) = p.timeout_ms {
        config.timeout_ms = v;
    }
    if let Some(v) = &p.bos_prefix {
        config.bos_prefix = Some(v.clone());
    }
    config.max_tokens_scored = max_tokens;
    config.validate()?;

    let cache = args
        .cache
        .or(manifest.data.logprob_cache.clone())
        .ok_or_else(|| usage("missing required flag --cache <PATH>"))?;
    let inputs: Vec<PathBuf> = match args.input {
        Some(p) => vec![p],
        None => [manifest.data.train.clone(), manifest.data.test.clone()]
            .into_iter()
            .flatten()
            .collect(),
    };
    if inputs.is_empty() {
        return Err(usage("missing required flag --input <PATH>"));
    }
    let cached: HashSet<String> = if cache.exists() && !args.overwrite {
        provider::cache_read(&cache, None)?.into_iter().map(|r| r.id).collect()
    } else {
        HashSet::new()
    };
    let mut texts = Vec::new();
    let mut seen = HashSet::new();
    for path in &inputs {
        for example in pipeline::ingest(path)?.examples {
            if let Some(text) = example.text {
                if !cached.contains(&example.id) && seen.insert(example.id.clone()) {
                    texts.push((example.id, text));
                }
            }
        }
    }
    if texts.is_empty() {
        log::info!("nothing to fetch: every text is already cached");
        return Ok(());
    }
    log::info!("scoring {} texts against {}", texts.len(), config.endpoint_url);
    let outcome = provider::fetch_logprobs_blocking(&texts, &config)?;
    for f in &outcome.failures {
        eprintln!("failed {}: {} (after {} attempts)", f.id, f.cause, f.attempts);
    }
    let written = provider::cache_write(&outcome.records, &cache, args.overwrite)?;
    log::info!(
        "wrote {written} records to {}, {} texts failed",
        cache.display(),
        outcome.failures.len()
    );
    Ok(())
}

fn extract(args: ExtractArgs) -> CliResult {
    let manifest = load_manifest(&args.manifest)?;
    let extractor = extractor_config(&manifest, &args.extractor)?;
    let max_tokens = args.tokens.max_tokens.unwrap_or(manifest.max_tokens);
    let cache = args.cache.or(manifest.data.logprob_cache.clone());
    if cache.is_none() && args.dataset.is_none() {
        return Err(usage("missing required flag --cache <PATH> (or --dataset <PATH>)"));
    }
    let records = match &cache {
        Some(path) => provider::cache_read(path, None)?,
        None => Vec::new(),
    };
    let (dataset, scores) = match &args.dataset {
        Some(path) => (
            pipeline::ingest(path)?,
            args.scores.unwrap_or(manifest.booster.scores.clone()),
        ),
        None => {
            let examples = records
                .iter()
                .map(|r| LabeledExample {
                    id: r.id.clone(),
                    text: None,
                    label: None,
                    detector_scores: Vec::new(),
                    features: None,
                })
                .collect();
            (Dataset::new(examples)?, args.scores.unwrap_or_default())
        }
    };
    let by_id: HashMap<_, _> = records.into_iter().map(|r| (r.id.clone(), r)).collect();
    let table = FeatureTable::build(&dataset, &by_id, &extractor, max_tokens, &scores)?;
    write_feature_file(&args.out, &FeatureRecord::from_table(&table))?;
    log::info!(
        "wrote {} feature rows to {}, skipped {}",
        table.len(),
        args.out.display(),
        table.skipped.len()
    );
    Ok(())
}

/// Rows of a feature file: the nine features then any extra scores. Every
/// row must have the same width.
fn feature_rows(records: &[FeatureRecord]) -> CliResult<(Vec<Vec<f64>>, usize)> {
    let mut width = None;
    let mut rows = Vec::with_capacity(records.len());
    for r in records {
        let mut row = r.features.clone();
        row.extend(r.extra_scores.iter().flatten());
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(CliError::Data(format!(
                    "{}: {} columns, expected {w} like the rows before it",
                    r.id,
                    row.len()
                )))
            }
            Some(_) => {}
        }
        rows.push(row);
    }
    Ok((rows, width.unwrap_or(FEATURE_COUNT) - FEATURE_COUNT))
}

fn train(args: TrainArgs) -> CliResult {
    let manifest = load_manifest(&args.manifest)?;
    let params = gbdt_params(&manifest, &args.gbdt)?;
    let records = read_feature_file(&args.features)?;
    let (rows, extra) = feature_rows(&records)?;
    let score_names = match args.scores {
        Some(names) if names.len() != extra => {
            return Err(CliError::Data(format!(
                "--scores names {} columns but the feature file has {extra} extra scores",
                names.len()
            )))
        }
        Some(names) => names,
        None => (0..extra).map(|i| format!("score_{i}")).collect(),
    };
    let names: Vec<String> = FEATURE_NAMES
        .iter()
        .map(|s| s.to_string())
        .chain(score_names)
        .collect();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (row, r) in rows.iter().zip(&records) {
        match r.label {
            Some(l) => {
                x.push(row.as_slice());
                y.push(l);
            }
            None => log::warn!("skipping {}: unlabeled training example", r.id),
        }
    }
    if x.is_empty() {
        return Err(CliError::Data("no labeled rows to train on".into()));
    }
    let model = gbdt::train(&x, &y, &names, &params)?;
    gbdt::save(&model, &args.model)?;
    log::info!(
        "trained {} trees on {} rows, wrote {}",
        model.trees.len(),
        x.len(),
        args.model.display()
    );
    Ok(())
}

fn predict(args: PredictArgs) -> CliResult {
    let model = gbdt::load(&args.model)?;
    let records = read_feature_file(&args.features)?;
    let (rows, _) = feature_rows(&records)?;
    let probs = gbdt::predict_proba(&model, &rows)?;
    let predictions: Vec<Prediction> = records
        .iter()
        .zip(probs)
        .map(|(r, prob_ai)| Prediction {
            id: r.id.clone(),
            prob_ai,
        })
        .collect();
    write_predictions(&args.out, &predictions)?;
    log::info!("wrote {} predictions to {}", predictions.len(), args.out.display());
    Ok(())
}

fn read_labels(path: &Path) -> CliResult<HashMap<String, u8>> {
    #[derive(serde::Deserialize)]
    struct Line {
        id: String,
        label: Option<serde_json::Value>,
    }
    let text = std::fs::read_to_string(path)?;
    let mut labels = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |cause: String| CliError::Data(format!("{}:{}: {cause}", path.display(), i + 1));
        let parsed: Line = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let Some(label) = pipeline::parse_label(parsed.label.as_ref()).map_err(bad)? else {
            continue;
        };
        if labels.insert(parsed.id.clone(), label).is_some() {
            return Err(bad(format!("duplicate id {:?}", parsed.id)));
        }
    }
    Ok(labels)
}

fn eval(args: EvalArgs) -> CliResult {
    if !args.threshold.is_finite() {
        return Err(usage("--threshold must be finite"));
    }
    let predictions = read_predictions(&args.predictions)?;
    let labels = read_labels(&args.labels)?;
    let (mut scores, mut y) = (Vec::new(), Vec::new());
    for p in &predictions {
        match labels.get(&p.id) {
            Some(&l) => {
                scores.push(p.prob_ai);
                y.push(l);
            }
            None => log::warn!("{}: no label, left out of the report", p.id),
        }
    }
    let report = classification_report(&scores, &y, args.threshold).map_err(|e| CliError::Data(e.to_string()))?;
    eprintln!("{report}");
    emit_json(&report, args.out.as_deref())
}

fn boost(args: BoostArgs) -> CliResult {
    let mut manifest = load_manifest(&args.manifest)?;
    let data = &mut manifest.data;
    for (flag, slot) in [
        (args.train, &mut data.train),
        (args.test, &mut data.test),
        (args.cache, &mut data.logprob_cache),
        (args.model, &mut manifest.output.model),
        (args.predictions, &mut manifest.output.predictions),
        (args.report, &mut manifest.output.report),
    ] {
        if flag.is_some() {
            *slot = flag;
        }
    }
    if let Some(scores) = args.scores {
        manifest.booster.scores = scores;
    }
    if let Some(n) = args.tokens.max_tokens {
        manifest.max_tokens = n;
    }
    manifest.extractor = extractor_config(&manifest, &args.extractor)?;
    manifest.gbdt = gbdt_params(&manifest, &args.gbdt)?;
    if manifest.booster.scores.is_empty() {
        return Err(usage("missing required flag --scores <NAMES>"));
    }
    manifest.check_inputs_exist()?;
    let train_path = manifest.data.train.clone().ok_or_else(|| usage("missing required flag --train <PATH>"))?;
    let test_path = manifest.data.test.clone().ok_or_else(|| usage("missing required flag --test <PATH>"))?;
    let train = pipeline::ingest(&train_path)?;
    let test = pipeline::ingest(&test_path)?;
    let outcome = pipeline::run_boosted(&train, &test, &manifest)?;
    eprintln!("{}", outcome.report.metrics);
    emit_json(&outcome.report, None)
}

#[derive(Serialize)]
struct ImportanceReport {
    features: Vec<FeatureShare>,
    blocks: BlockImportance,
}

#[derive(Serialize)]
struct FeatureShare {
    name: String,
    importance: f64,
}

fn importance_report(model: &GbdtModel) -> ImportanceReport {
    let importance = model.feature_importance();
    ImportanceReport {
        blocks: BlockImportance::from_importance(&importance),
        features: importance
            .into_iter()
            .map(|(name, importance)| FeatureShare { name, importance })
            .collect(),
    }
}

fn importance(args: ImportanceArgs) -> CliResult {
    let model = gbdt::load(&args.model)?;
    if model.num_features() < FEATURE_COUNT {
        return Err(CliError::Data(format!(
            "model has {} features, fewer than the nine diversity features",
            model.num_features()
        )));
    }
    emit_json(&importance_report(&model), args.out.as_deref())
}

fn diagnose_cmd(args: DiagnoseArgs) -> CliResult {
    if args.bins == 0 {
        return Err(usage("--bins must be positive"));
    }
    let records = read_feature_file(&args.features)?;
    let dataset = pipeline::dataset_from_feature_records(records, &[])?;
    let table = FeatureTable::build(
        &dataset,
        &HashMap::new(),
        &ExtractorConfig::default(),
        DEFAULT_MAX_TOKENS,
        &[],
    )?;
    let report = diagnose(&table, args.bins)?;
    emit_json(&report, args.out.as_deref())
}
