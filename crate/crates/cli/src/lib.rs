//! Command-line wiring: configuration resolution, run manifests, and the
//! extract / eval / record / replay / schemas subcommands.
//!
//! Configuration precedence is flags > config file > environment, and the
//! resolved values land in the run manifest for audits. The API token is
//! read only from `IEXTRACT_API_TOKEN` and never written anywhere. All
//! artifacts are written atomically (write-temp-then-rename), so a crashed
//! run leaves no partial file under a final name.
//!
//! Exit codes: 0 success, 1 configuration error, 2 when `--fail-on-errors`
//! is set and some samples failed.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use iextract::chat::{Backend, BackendConfig, BackendKind, SystemClock};
use iextract::datasets::{load_dataset, subsample, DatasetFormat};
use iextract::eval::{
    score_ee_batch, score_ner_batch, score_re_batch, Equivalences, MetricReport, Regime,
};
use iextract::pipeline::{run_batch, BatchOptions, BatchReport, SampleOutcome};
use iextract::types::{Extraction, GoldAnnotation, Sample};
use iextract::{Task, TaskSchema};

pub const ENDPOINT_ENV_VAR: &str = "IEXTRACT_ENDPOINT";
pub const MODEL_ENV_VAR: &str = "IEXTRACT_MODEL";

#[derive(Parser)]
#[command(
    name = "iextract",
    about = "Two-stage chat-driven information extraction",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run extraction over a dataset and write a batch report.
    Extract(ExtractArgs),
    /// Score a batch report against a dataset's gold annotations.
    Eval(EvalArgs),
    /// Extract with a live backend while persisting transcripts.
    Record(ExtractArgs),
    /// Extract strictly from a recorded transcript store (no network).
    Replay(ExtractArgs),
    /// Schema file utilities.
    Schemas {
        #[command(subcommand)]
        command: SchemasCommand,
    },
}

#[derive(Subcommand)]
enum SchemasCommand {
    /// Parse and validate a schema file.
    Validate {
        #[arg(long)]
        schema: PathBuf,
    },
}

#[derive(Args, Clone, Default)]
struct ExtractArgs {
    /// TOML run-config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Task sanity check: re, ner, or ee (must match the schema).
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Dataset format: nyt11, duie2, conllpp, msra, duee1, ace05-lines.
    #[arg(long)]
    format: Option<String>,
    /// Backend kind: live, replay, gold-oracle.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Transcript store path (replay source, or record sink with --record).
    #[arg(long)]
    transcripts: Option<PathBuf>,
    /// Record every turn to the transcript store.
    #[arg(long)]
    record: bool,
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    span_check: bool,
    /// Override the schema's skip_stage1 flag (NER only).
    #[arg(long)]
    skip_stage1: Option<bool>,
    #[arg(long)]
    rate_limit: Option<u32>,
    #[arg(long)]
    max_retries: Option<u32>,
    #[arg(long)]
    timeout_ms: Option<u64>,
    /// Output directory for report.jsonl and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 2 when any sample fails.
    #[arg(long)]
    fail_on_errors: bool,
}

#[derive(Args, Clone)]
struct EvalArgs {
    /// Batch report written by `extract` (report.jsonl).
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    format: String,
    #[arg(long)]
    schema: PathBuf,
    /// Scoring regime: re-border, re-strict, ner-exact, ee-entitylevel,
    /// ee-wordlevel.
    #[arg(long)]
    regime: String,
    /// Inverse-relation pairs as TOML (`pairs = [["a", "b"]]`); defaults to
    /// the schema's declarations.
    #[arg(long)]
    equivalences: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Fields of the config file; every one can be overridden by a flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    task: Option<Task>,
    schema: Option<PathBuf>,
    dataset: Option<PathBuf>,
    format: Option<String>,
    out: Option<PathBuf>,
    limit: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    span_check: Option<bool>,
    skip_stage1: Option<bool>,
    backend: Option<BackendConfig>,
}

/// Fully resolved run configuration; this is what the manifest records.
#[derive(Debug, Clone, Serialize)]
struct RunConfig {
    task: Task,
    schema: PathBuf,
    dataset: PathBuf,
    format: DatasetFormat,
    backend: BackendConfig,
    limit: Option<usize>,
    seed: u64,
    workers: usize,
    span_check: bool,
    skip_stage1: Option<bool>,
    #[serde(skip)]
    out_dir: PathBuf,
    #[serde(skip)]
    fail_on_errors: bool,
}

impl RunConfig {
    /// Stable digest of the semantic fields (everything serialized above;
    /// output location and exit-code policy excluded).
    fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("serializable");
        let mut hasher = Sha256::new();
        hasher.update(&canonical);
        hex::encode(hasher.finalize())
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit code 0.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Extract(args) => cmd_extract(args, None),
        Command::Record(args) => cmd_extract(args, Some(BackendKind::Live)),
        Command::Replay(args) => cmd_extract(args, Some(BackendKind::Replay)),
        Command::Eval(args) => cmd_eval(args),
        Command::Schemas {
            command: SchemasCommand::Validate { schema },
        } => cmd_schemas_validate(schema),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn parse_backend_kind(s: &str) -> Result<BackendKind> {
    match s {
        "live" => Ok(BackendKind::Live),
        "replay" => Ok(BackendKind::Replay),
        "gold-oracle" | "gold_oracle" => Ok(BackendKind::GoldOracle),
        other => bail!("unknown backend kind '{other}' (live, replay, gold-oracle)"),
    }
}

fn parse_regime(s: &str) -> Result<Regime> {
    match s {
        "re-border" | "border" => Ok(Regime::ReBorder),
        "re-strict" | "strict" => Ok(Regime::ReStrict),
        "ner-exact" | "ner" => Ok(Regime::NerExact),
        "ee-entitylevel" | "ee-entity" => Ok(Regime::EeEntitylevel),
        "ee-wordlevel" | "ee-word" => Ok(Regime::EeWordlevel),
        other => bail!(
            "unknown regime '{other}' (re-border, re-strict, ner-exact, ee-entitylevel, ee-wordlevel)"
        ),
    }
}

/// Merge flags over the config file over the environment.
fn resolve(args: &ExtractArgs, forced_kind: Option<BackendKind>) -> Result<RunConfig> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("bad config file {}", path.display()))?
        }
        None => FileConfig::default(),
    };

    let schema_path = args
        .schema
        .clone()
        .or(file.schema)
        .ok_or_else(|| anyhow!("--schema is required (flag or config file)"))?;
    let dataset = args
        .dataset
        .clone()
        .or(file.dataset)
        .ok_or_else(|| anyhow!("--dataset is required (flag or config file)"))?;
    let format: DatasetFormat = args
        .format
        .clone()
        .or(file.format)
        .ok_or_else(|| anyhow!("--format is required (flag or config file)"))?
        .parse()
        .map_err(|e: String| anyhow!(e))?;
    let out_dir = args
        .out
        .clone()
        .or(file.out)
        .ok_or_else(|| anyhow!("--out is required (flag or config file)"))?;

    let mut backend = file.backend.unwrap_or_else(BackendConfig::gold_oracle);
    if let Some(kind) = &args.backend {
        backend.kind = parse_backend_kind(kind)?;
    }
    if let Some(kind) = forced_kind {
        backend.kind = kind;
    }
    if let Some(endpoint) = args
        .endpoint
        .clone()
        .or_else(|| std::env::var(ENDPOINT_ENV_VAR).ok())
    {
        if args.endpoint.is_some() || backend.endpoint.is_none() {
            backend.endpoint = Some(endpoint);
        }
    }
    if let Some(model) = args
        .model
        .clone()
        .or_else(|| std::env::var(MODEL_ENV_VAR).ok())
    {
        if args.model.is_some() || backend.model_name.is_none() {
            backend.model_name = Some(model);
        }
    }
    if let Some(path) = &args.transcripts {
        backend.transcript_path = Some(path.clone());
    }
    if args.record || forced_kind == Some(BackendKind::Live) {
        backend.record = true;
    }
    if let Some(limit) = args.rate_limit {
        backend.rate_limit_per_minute = limit;
    }
    if let Some(retries) = args.max_retries {
        backend.max_retries = retries;
    }
    if let Some(timeout) = args.timeout_ms {
        backend.request_timeout_ms = timeout;
    }
    if backend.kind == BackendKind::Replay && backend.endpoint.is_some() {
        bail!("replay forbids a live endpoint; drop --endpoint");
    }
    if backend.kind == BackendKind::Replay {
        let path = backend
            .transcript_path
            .as_ref()
            .ok_or_else(|| anyhow!("replay requires --transcripts"))?;
        if !path.exists() {
            bail!("transcript store {} does not exist", path.display());
        }
    }
    backend.validate().map_err(|e| anyhow!("{e}"))?;

    let config = RunConfig {
        task: Task::Re, // overwritten below once the schema is read
        schema: schema_path,
        dataset,
        format,
        backend,
        limit: args.limit.or(file.limit),
        seed: args.seed.or(file.seed).unwrap_or(0),
        workers: args.workers.or(file.workers).unwrap_or(0),
        span_check: args.span_check || file.span_check.unwrap_or(false),
        skip_stage1: args.skip_stage1.or(file.skip_stage1),
        out_dir,
        fail_on_errors: args.fail_on_errors,
    };
    let declared_task = match &args.task {
        Some(name) => Some(
            serde_json::from_value::<Task>(serde_json::Value::String(name.clone()))
                .map_err(|_| anyhow!("unknown task '{name}' (re, ner, ee)"))?,
        ),
        None => file.task,
    };
    let mut config = config;
    let schema = TaskSchema::load(&config.schema).map_err(|e| anyhow!("{e}"))?;
    config.task = schema.task;
    if let Some(task) = declared_task {
        if task != schema.task {
            bail!(
                "configured task '{task}' does not match schema task '{}'",
                schema.task
            );
        }
    }
    if config.format.task() != schema.task {
        bail!(
            "dataset format '{}' is for task '{}', schema is for '{}'",
            config.format,
            config.format.task(),
            schema.task
        );
    }
    Ok(config)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes).with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("cannot move {} into place", tmp.display()))?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    fingerprint: String,
    config: &'a RunConfig,
    precedence: &'static str,
    started_at: String,
    finished_at: String,
    wall_ms: u64,
    requests: u64,
    samples: usize,
    ok: usize,
    failures: usize,
}

fn cmd_extract(args: ExtractArgs, forced_kind: Option<BackendKind>) -> Result<i32> {
    let config = resolve(&args, forced_kind)?;
    let schema = TaskSchema::load(&config.schema).map_err(|e| anyhow!("{e}"))?;
    let mut samples =
        load_dataset(&config.dataset, config.format, &schema).map_err(|e| anyhow!("{e}"))?;
    if let Some(limit) = config.limit {
        samples = subsample(&samples, limit, config.seed).map_err(|e| anyhow!("{e}"))?;
    }

    let started_at = chrono::Utc::now();
    let backend =
        Backend::from_config(&config.backend, std::sync::Arc::new(SystemClock::new()))
            .map_err(|e| anyhow!("{e}"))?;
    let options = BatchOptions {
        workers: config.workers,
        span_check: config.span_check,
        skip_stage1: config.skip_stage1,
    };
    let report = run_batch(&samples, &schema, &backend, &options).map_err(|e| anyhow!("{e}"))?;
    let finished_at = chrono::Utc::now();

    let report_path = config.out_dir.join("report.jsonl");
    write_atomic(&report_path, report.to_jsonl().as_bytes())?;
    let manifest = Manifest {
        fingerprint: config.fingerprint(),
        config: &config,
        precedence: "flags > config file > environment",
        started_at: started_at.to_rfc3339(),
        finished_at: finished_at.to_rfc3339(),
        wall_ms: report.summary.wall_ms,
        requests: backend.request_count(),
        samples: report.summary.samples,
        ok: report.summary.ok,
        failures: report.summary.failures,
    };
    write_atomic(
        &config.out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;

    println!(
        "extracted {} sample(s): {} ok, {} failed, {} turns, report at {}",
        report.summary.samples,
        report.summary.ok,
        report.summary.failures,
        report.summary.turns_total,
        report_path.display()
    );
    if config.fail_on_errors && report.summary.failures > 0 {
        return Ok(2);
    }
    Ok(0)
}

#[derive(Deserialize)]
struct EquivalencesFile {
    pairs: Vec<(String, String)>,
}

fn cmd_eval(args: EvalArgs) -> Result<i32> {
    let regime = parse_regime(&args.regime)?;
    let schema = TaskSchema::load(&args.schema).map_err(|e| anyhow!("{e}"))?;
    let format: DatasetFormat = args.format.parse().map_err(|e: String| anyhow!(e))?;
    let gold_samples = load_dataset(&args.dataset, format, &schema).map_err(|e| anyhow!("{e}"))?;

    let predictions_text = std::fs::read_to_string(&args.predictions)
        .with_context(|| format!("cannot read predictions {}", args.predictions.display()))?;
    let report = BatchReport::from_jsonl(&predictions_text).context("bad predictions file")?;

    let known_ids: BTreeSet<&str> = gold_samples.iter().map(|s| s.id.as_str()).collect();
    for outcome in &report.outcomes {
        if !known_ids.contains(outcome.sample_id()) {
            bail!(
                "id mismatch: prediction for unknown sample '{}'",
                outcome.sample_id()
            );
        }
    }

    let equivalences = match &args.equivalences {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read equivalences {}", path.display()))?;
            let file: EquivalencesFile = toml::from_str(&text)?;
            Equivalences::from_pairs(&file.pairs)
        }
        None => Equivalences::from_schema(&schema),
    };

    let metric = score_predictions(&report, &gold_samples, &schema, regime, &equivalences)?;
    let table = MetricReport::render_table(std::slice::from_ref(&metric));
    print!("{table}");

    if let Some(out) = &args.out {
        write_atomic(
            &out.join("metrics.json"),
            serde_json::to_string_pretty(&metric)?.as_bytes(),
        )?;
        write_atomic(&out.join("metrics.txt"), table.as_bytes())?;
    }
    Ok(0)
}

/// Join predictions to gold by sample id; samples without a prediction (or
/// with a failed one) score as empty predictions.
fn score_predictions(
    report: &BatchReport,
    gold_samples: &[Sample],
    schema: &TaskSchema,
    regime: Regime,
    equivalences: &Equivalences,
) -> Result<MetricReport> {
    let by_id: std::collections::HashMap<&str, &SampleOutcome> = report
        .outcomes
        .iter()
        .map(|o| (o.sample_id(), o))
        .collect();
    match (schema.task, regime) {
        (Task::Re, Regime::ReBorder | Regime::ReStrict) => {
            let mut pairs = Vec::new();
            for sample in gold_samples {
                let Some(GoldAnnotation::Triples(gold)) = &sample.gold else {
                    bail!("sample '{}' has no relation gold", sample.id);
                };
                let pred = match by_id.get(sample.id.as_str()).and_then(|o| o.result()) {
                    Some(result) => match &result.extraction {
                        Extraction::Triples(t) => t.clone(),
                        _ => bail!("prediction for '{}' is not relation output", sample.id),
                    },
                    None => BTreeSet::new(),
                };
                pairs.push((pred, gold.clone()));
            }
            score_re_batch(&pairs, regime, equivalences).map_err(|e| anyhow!("{e}"))
        }
        (Task::Ner, Regime::NerExact) => {
            let mut pairs = Vec::new();
            for sample in gold_samples {
                let Some(GoldAnnotation::Entities(gold)) = &sample.gold else {
                    bail!("sample '{}' has no entity gold", sample.id);
                };
                let pred = match by_id.get(sample.id.as_str()).and_then(|o| o.result()) {
                    Some(result) => match &result.extraction {
                        Extraction::Entities(e) => e.clone(),
                        _ => bail!("prediction for '{}' is not entity output", sample.id),
                    },
                    None => BTreeSet::new(),
                };
                pairs.push((pred, gold.clone()));
            }
            Ok(score_ner_batch(&pairs))
        }
        (Task::Ee, Regime::EeEntitylevel | Regime::EeWordlevel) => {
            let mut pairs = Vec::new();
            for sample in gold_samples {
                let Some(GoldAnnotation::Events(gold)) = &sample.gold else {
                    bail!("sample '{}' has no event gold", sample.id);
                };
                let pred = match by_id.get(sample.id.as_str()).and_then(|o| o.result()) {
                    Some(result) => match &result.extraction {
                        Extraction::Events(e) => e.clone(),
                        _ => bail!("prediction for '{}' is not event output", sample.id),
                    },
                    None => BTreeSet::new(),
                };
                pairs.push((pred, gold.clone()));
            }
            score_ee_batch(&pairs, regime, schema.language).map_err(|e| anyhow!("{e}"))
        }
        (task, regime) => bail!("regime '{regime}' unsupported for task '{task}'"),
    }
}

fn cmd_schemas_validate(path: PathBuf) -> Result<i32> {
    let schema = TaskSchema::load(&path).map_err(|e| anyhow!("{e}"))?;
    let size = schema.type_inventory().len();
    println!(
        "ok: {} schema ({}, {} type(s))",
        schema.task, schema.language, size
    );
    Ok(0)
}
