//! The `deae` command line.
//!
//! Every subcommand resolves its settings from built-in defaults, an
//! optional TOML `--config` file and command-line flags (flags win; the seed
//! additionally falls back to `DEAE_SEED`). A run manifest is written before
//! the command starts and finalized when it ends.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 runtime failure. Failures print a human message followed by one JSON
//! line `{"error":{"kind":…,"exit_code":…,"message":…}}` on stderr.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bias_analysis::{compare_predictions, load_alt_prompts, robustness_delta};
use crate::corpus::{load_ontologies, load_parses, zero_shot_split, Corpus, CorpusFormat, Split};
use crate::error::{Error, Result};
use crate::evaluation::{read_predictions, run_eval, write_predictions};
use crate::model::{Checkpoint, ModelConfig, ToyModel};
use crate::prompts::{ClusterIndex, ClusterSource, PromptStyle};
use crate::training::{init_model, lambda_grid, sweep_lambda, train, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

const SEED_ENV: &str = "DEAE_SEED";
const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "deae", version, about = "Debiased prompt-based event argument extraction")]
struct Cli {
    /// TOML file with default settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the resolved settings as JSON and exit.
    #[arg(long, global = true)]
    print_config: bool,
    /// Manifest path (default: next to the primary output).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Increase log verbosity.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a corpus and write it in the generic JSON-lines schema.
    Ingest {
        #[command(flatten)]
        data: CorpusArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the toy extractor and keep the best dev checkpoint.
    Train {
        #[command(flatten)]
        data: CorpusArgs,
        #[command(flatten)]
        clusters: ClusterArgs,
        #[command(flatten)]
        tune: Tunables,
        /// Output directory for checkpoint, curve and summary.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model per λ and keep the best on dev.
    SweepLambda {
        #[command(flatten)]
        data: CorpusArgs,
        #[command(flatten)]
        clusters: ClusterArgs,
        #[command(flatten)]
        tune: Tunables,
        /// Grid as start:stop:step, inclusive.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract on a split and score the predictions.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[command(flatten)]
        data: CorpusArgs,
        #[command(flatten)]
        clusters: ClusterArgs,
        #[arg(long, default_value = "test")]
        split: Split,
        /// Override the checkpoint's λ.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        report: PathBuf,
        /// Predictions file (default: report path with `.predictions.jsonl`).
        #[arg(long)]
        pred: Option<PathBuf>,
    },
    /// Retag a corpus for zero-shot transfer on the n most frequent types.
    ZeroshotSplit {
        #[command(flatten)]
        data: CorpusArgs,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two prediction files: spurious roles, syntactic matching, cases.
    AnalyzeBias {
        /// Exactly two prediction files.
        #[arg(long = "pred", required = true)]
        preds: Vec<PathBuf>,
        /// Gold corpus.
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, default_value = "generic")]
        format: CorpusFormat,
        #[arg(long)]
        ontology: PathBuf,
        /// Dependency parses; enables the syntactic matching ratio.
        #[arg(long)]
        parses: Option<PathBuf>,
        /// Column labels, comma separated (default: file stems).
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<String>>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Score a checkpoint under original and alternative prompts.
    Robustness {
        #[arg(long)]
        ckpt: PathBuf,
        #[command(flatten)]
        data: CorpusArgs,
        #[command(flatten)]
        clusters: ClusterArgs,
        #[arg(long)]
        alt_prompts: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Corpus file, or directory with train/dev/test files.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "generic")]
    format: CorpusFormat,
    /// Ontology JSON file.
    #[arg(long)]
    ontology: PathBuf,
    /// Dependency parses (JSON lines).
    #[arg(long)]
    parses: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
struct ClusterArgs {
    /// Generated prompt cluster file (JSON lines).
    #[arg(long, conflicts_with = "stub_clusters")]
    cluster_file: Option<PathBuf>,
    /// Use the built-in stub generator with this many prompts per instance.
    #[arg(long)]
    stub_clusters: Option<usize>,
    #[arg(long)]
    cluster_seed: Option<u64>,
}

/// Settings that may come from the config file or from flags.
#[derive(Debug, Args, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Tunables {
    #[arg(long)]
    h: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    max_span_length: Option<usize>,
    #[arg(long)]
    max_input_length: Option<usize>,
    #[arg(long)]
    prompt_style: Option<PromptStyle>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    clip_norm: Option<f64>,
    #[arg(skip)]
    #[serde(default)]
    slots_per_role: Option<BTreeMap<String, usize>>,
    #[arg(skip)]
    #[serde(default)]
    grid: Option<String>,
    #[arg(skip)]
    #[serde(default)]
    stub_clusters: Option<usize>,
    #[arg(skip)]
    #[serde(default)]
    cluster_seed: Option<u64>,
}

/// Fully resolved settings, as printed by `--print-config` and recorded in
/// manifests.
#[derive(Debug, Clone, Serialize)]
struct Resolved {
    model: ModelConfig,
    train: TrainConfig,
    seed_source: &'static str,
}

impl Tunables {
    fn merge(self, file: Tunables) -> Tunables {
        macro_rules! pick {
            ($($f:ident),*) => { Tunables { $($f: self.$f.or(file.$f)),* } };
        }
        pick!(
            h, lambda, max_span_length, max_input_length, prompt_style, seed, learning_rate, weight_decay,
            batch_size, max_steps, eval_every, clip_norm, slots_per_role, grid, stub_clusters, cluster_seed
        )
    }

    fn resolve(&self) -> Result<Resolved> {
        let (seed, seed_source) = match self.seed {
            Some(s) => (s, "settings"),
            None => match std::env::var(SEED_ENV) {
                Ok(v) => (
                    v.trim()
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("{SEED_ENV}={v} is not an integer")))?,
                    "environment",
                ),
                Err(_) => (DEFAULT_SEED, "default"),
            },
        };
        let dm = ModelConfig::default();
        let model = ModelConfig {
            h: self.h.unwrap_or(dm.h),
            lambda: self.lambda.unwrap_or(dm.lambda),
            max_span_length: self.max_span_length.unwrap_or(dm.max_span_length),
            max_input_length: self.max_input_length.unwrap_or(dm.max_input_length),
            seed,
            slots_per_role: self.slots_per_role.clone().unwrap_or_default(),
            prompt_style: self.prompt_style.unwrap_or(dm.prompt_style),
        };
        model.validate()?;
        let dt = TrainConfig::default();
        let grid = match &self.grid {
            Some(g) => parse_grid(g)?,
            None => dt.lambda_grid.clone(),
        };
        let train = TrainConfig {
            learning_rate: self.learning_rate.unwrap_or(dt.learning_rate),
            weight_decay: self.weight_decay.unwrap_or(dt.weight_decay),
            batch_size: self.batch_size.unwrap_or(dt.batch_size),
            max_steps: self.max_steps.unwrap_or(dt.max_steps),
            eval_every: self.eval_every.unwrap_or(dt.eval_every),
            lambda_grid: grid,
            seed,
            clip_norm: self.clip_norm.unwrap_or(dt.clip_norm),
        };
        train.validate()?;
        Ok(Resolved {
            model,
            train,
            seed_source,
        })
    }
}

/// Parses `start:stop:step`, or a comma-separated list of values.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("bad lambda grid {text:?}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [a, b, c] => lambda_grid(num(a)?, num(b)?, num(c)?),
        [_] => text.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

fn read_config(path: &Path) -> Result<Tunables> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::record(path.display(), 0, "config", e.to_string()))
}

/// Record of one invocation, written before the run and finalized after.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    /// SHA-256 of every input file (directories are hashed file by file).
    pub inputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started_at: u64,
    pub finished_at: Option<u64>,
    pub outputs: Vec<String>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn digest_into(path: &Path, out: &mut BTreeMap<String, String>) -> Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        entries.sort();
        for p in entries {
            digest_into(&p, out)?;
        }
        return Ok(());
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    out.insert(path.display().to_string(), hex::encode(Sha256::digest(&bytes)));
    Ok(())
}

struct Failure {
    code: i32,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_data_error() { EXIT_DATA } else { EXIT_RUNTIME },
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

fn report_failure(f: &Failure) {
    eprintln!("error: {}", f.message);
    let record = serde_json::json!({"error": {"kind": f.kind, "exit_code": f.code, "message": f.message}});
    eprintln!("{record}");
}

/// Runs the command line `argv` (including the program name) and returns
/// the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return EXIT_OK;
            }
            let _ = e.print();
            let text = e.to_string();
            let summary: Vec<&str> = text
                .lines()
                .take_while(|l| !l.trim().is_empty())
                .map(|l| l.trim().trim_start_matches("error: "))
                .collect();
            let _ = std::io::stdout().flush();
            let failure = Failure {
                code: EXIT_USAGE,
                kind: "usage",
                message: summary.join(" "),
            };
            let record = serde_json::json!({"error": {"kind": failure.kind, "exit_code": failure.code, "message": failure.message}});
            eprintln!("{record}");
            return EXIT_USAGE;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let argv_text: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli, argv_text) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            report_failure(&f);
            f.code
        }
    }
}

/// What a command needs before it runs.
struct Plan {
    name: &'static str,
    inputs: Vec<PathBuf>,
    manifest: PathBuf,
    config: serde_json::Value,
    seed: Option<u64>,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn data_inputs(d: &CorpusArgs) -> Vec<PathBuf> {
    let mut v = vec![d.corpus.clone(), d.ontology.clone()];
    v.extend(d.parses.clone());
    v
}

fn cluster_source(args: &ClusterArgs, file: &Tunables, seed: u64) -> Result<ClusterSource> {
    if let Some(path) = &args.cluster_file {
        return Ok(ClusterSource::File(ClusterIndex::load(path)?));
    }
    match args.stub_clusters.or(file.stub_clusters) {
        Some(0) => Err(Error::InvalidArgument("stub cluster size must be positive".into())),
        Some(k) => Ok(ClusterSource::Stub {
            k,
            seed: args.cluster_seed.or(file.cluster_seed).unwrap_or(seed),
        }),
        None => Ok(ClusterSource::None),
    }
}

fn load_corpus(d: &CorpusArgs) -> Result<Corpus> {
    let ontologies = load_ontologies(&d.ontology)?;
    let mut corpus = Corpus::load(&d.corpus, d.format, ontologies)?;
    if let Some(p) = &d.parses {
        corpus.attach_parses(load_parses(p)?)?;
    }
    Ok(corpus)
}

fn load_model(path: &Path, corpus: &Corpus, lambda: Option<f64>) -> Result<ToyModel> {
    let mut model = ToyModel::from_checkpoint(Checkpoint::load(path)?)?;
    let roles = model.roles();
    for ont in corpus.ontologies.values() {
        if let Some(r) = ont.roles.iter().find(|r| !roles.contains(r)) {
            return Err(Error::Checkpoint(format!(
                "checkpoint has no selector for role {r} of event type {}",
                ont.event_type
            )));
        }
    }
    if let Some(l) = lambda {
        model.config.lambda = l;
        model.config.validate()?;
    }
    Ok(model)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("value serializes") + "\n"
}

fn run(cli: Cli, argv: Vec<String>) -> std::result::Result<(), Failure> {
    let file = match &cli.config {
        Some(p) => read_config(p)?,
        None => Tunables::default(),
    };
    let resolve = |tune: &Tunables| -> Result<Resolved> { tune.clone().merge(file.clone()).resolve() };

    let plan = match &cli.command {
        Command::Ingest { data, out } => Plan {
            name: "ingest",
            inputs: data_inputs(data),
            manifest: sibling(out, ".manifest.json"),
            config: serde_json::json!({"format": data.format}),
            seed: None,
        },
        Command::Train { data, out, tune, .. } | Command::SweepLambda { data, out, tune, .. } => {
            let mut tune = tune.clone();
            if let Command::SweepLambda { grid: Some(g), .. } = &cli.command {
                tune.grid = Some(g.clone());
            }
            let r = resolve(&tune)?;
            Plan {
                name: if matches!(cli.command, Command::Train { .. }) { "train" } else { "sweep-lambda" },
                inputs: data_inputs(data),
                manifest: out.join("manifest.json"),
                seed: Some(r.train.seed),
                config: serde_json::to_value(&r).expect("config serializes"),
            }
        }
        Command::Eval { ckpt, data, report, lambda, split, .. } => Plan {
            name: "eval",
            inputs: [vec![ckpt.clone()], data_inputs(data)].concat(),
            manifest: sibling(report, ".manifest.json"),
            config: serde_json::json!({"split": split, "lambda_override": lambda}),
            seed: None,
        },
        Command::ZeroshotSplit { data, n, out } => Plan {
            name: "zeroshot-split",
            inputs: data_inputs(data),
            manifest: sibling(out, ".manifest.json"),
            config: serde_json::json!({"n": n}),
            seed: None,
        },
        Command::AnalyzeBias { preds, gold, ontology, parses, report, .. } => {
            if preds.len() != 2 {
                return Err(Failure {
                    code: EXIT_USAGE,
                    kind: "usage",
                    message: format!("analyze-bias needs exactly two --pred files, got {}", preds.len()),
                });
            }
            let mut inputs = preds.clone();
            inputs.extend([gold.clone(), ontology.clone()]);
            inputs.extend(parses.clone());
            Plan {
                name: "analyze-bias",
                inputs,
                manifest: sibling(report, ".manifest.json"),
                config: serde_json::json!({"syntactic": parses.is_some()}),
                seed: None,
            }
        }
        Command::Robustness { ckpt, data, alt_prompts, report, split, .. } => Plan {
            name: "robustness",
            inputs: [vec![ckpt.clone(), alt_prompts.clone()], data_inputs(data)].concat(),
            manifest: sibling(report, ".manifest.json"),
            config: serde_json::json!({"split": split}),
            seed: None,
        },
    };

    if cli.print_config {
        println!("{}", to_json(&plan.config).trim_end());
        return Ok(());
    }

    let manifest_path = cli.manifest.clone().unwrap_or(plan.manifest);
    let mut inputs = BTreeMap::new();
    for p in &plan.inputs {
        digest_into(p, &mut inputs)?;
    }
    let mut manifest = RunManifest {
        command: plan.name.into(),
        argv,
        config: plan.config,
        inputs,
        seed: plan.seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        started_at: now(),
        finished_at: None,
        outputs: Vec::new(),
        status: "running".into(),
        error: None,
    };
    manifest.write_atomic(&manifest_path)?;

    let result = execute(&cli.command, &file, resolve);
    manifest.finished_at = Some(now());
    match &result {
        Ok(outputs) => {
            manifest.status = "ok".into();
            manifest.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
        }
        Err(e) => {
            manifest.status = "failed".into();
            manifest.error = Some(e.to_string());
        }
    }
    manifest.write_atomic(&manifest_path)?;
    result.map(|_| ()).map_err(Failure::from)
}

fn execute(
    command: &Command,
    file: &Tunables,
    resolve: impl Fn(&Tunables) -> Result<Resolved>,
) -> Result<Vec<PathBuf>> {
    match command {
        Command::Ingest { data, out } => {
            let corpus = load_corpus(data)?;
            write_text(out, "")?;
            corpus.write_jsonl(out)?;
            let sizes: BTreeMap<String, usize> =
                corpus.split_sizes().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            println!("{}", serde_json::json!({"instances": corpus.instances.len(), "splits": sizes}));
            Ok(vec![out.clone()])
        }
        Command::Train {
            data,
            clusters,
            tune,
            out,
        } => {
            let r = resolve(tune)?;
            let corpus = load_corpus(data)?;
            let source = cluster_source(clusters, file, r.model.seed)?;
            let model = init_model(r.model.clone(), &corpus, &source)?;
            let outcome = train(model, &corpus, &source, &r.train)?;
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            let ckpt = out.join("checkpoint.json");
            outcome.checkpoint.save(&ckpt)?;
            let curve = out.join("curve.jsonl");
            let lines: String = outcome
                .curve
                .iter()
                .map(|p| serde_json::to_string(p).expect("curve serializes") + "\n")
                .collect();
            write_text(&curve, &lines)?;
            let summary = out.join("summary.json");
            write_text(
                &summary,
                &to_json(&serde_json::json!({
                    "best_step": outcome.best_step,
                    "best_dev_arg_c": outcome.best_dev_arg_c,
                    "final_loss": outcome.curve.last().map(|p| p.loss),
                })),
            )?;
            println!(
                "trained {} steps; best dev Arg-C {:?} at step {}",
                r.train.max_steps, outcome.best_dev_arg_c, outcome.best_step
            );
            Ok(vec![ckpt, curve, summary])
        }
        Command::SweepLambda {
            data,
            clusters,
            tune,
            grid,
            out,
        } => {
            let mut tune = tune.clone();
            tune.grid = grid.clone().or(tune.grid);
            let r = resolve(&tune)?;
            let corpus = load_corpus(data)?;
            let source = cluster_source(clusters, file, r.model.seed)?;
            let base = r.model.clone();
            let factory = |lambda: f64| init_model(ModelConfig { lambda, ..base.clone() }, &corpus, &source);
            let outcome = sweep_lambda(factory, &corpus, &source, &r.train)?;
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            let table = out.join("sweep.json");
            write_text(
                &table,
                &to_json(&serde_json::json!({"best_lambda": outcome.best_lambda, "rows": outcome.rows})),
            )?;
            let ckpt = out.join("checkpoint.json");
            outcome.best_checkpoint.save(&ckpt)?;
            for row in &outcome.rows {
                println!("lambda {:.2}  dev Arg-C F1 {:.4}", row.lambda, row.dev.arg_c.f1);
            }
            println!("best lambda {}", outcome.best_lambda);
            Ok(vec![table, ckpt])
        }
        Command::Eval {
            ckpt,
            data,
            clusters,
            split,
            lambda,
            report,
            pred,
        } => {
            let corpus = load_corpus(data)?;
            let model = load_model(ckpt, &corpus, *lambda)?;
            let source = cluster_source(clusters, file, model.config.seed)?;
            let (rep, preds) = run_eval(&model, &corpus, *split, &source)?;
            let pred_path = pred.clone().unwrap_or_else(|| report.with_extension("predictions.jsonl"));
            write_text(report, "")?;
            rep.write_json(report)?;
            write_predictions(&preds, &pred_path)?;
            print!("{}", rep.to_table());
            Ok(vec![report.clone(), pred_path])
        }
        Command::ZeroshotSplit { data, n, out } => {
            let corpus = load_corpus(data)?;
            let split = zero_shot_split(&corpus, *n)?;
            write_text(out, "")?;
            split.write_jsonl(out)?;
            let sizes: BTreeMap<String, usize> =
                split.split_sizes().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            println!("{}", serde_json::json!({"n": n, "splits": sizes}));
            Ok(vec![out.clone()])
        }
        Command::AnalyzeBias {
            preds,
            gold,
            format,
            ontology,
            parses,
            labels,
            report,
        } => {
            let data = CorpusArgs {
                corpus: gold.clone(),
                format: *format,
                ontology: ontology.clone(),
                parses: parses.clone(),
            };
            let corpus = load_corpus(&data)?;
            let a = read_predictions(&preds[0])?;
            let b = read_predictions(&preds[1])?;
            let stem = |p: &Path| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let (la, lb) = match labels.as_deref() {
                Some([a, b]) => (a.clone(), b.clone()),
                Some(other) => {
                    return Err(Error::InvalidArgument(format!("--labels needs two names, got {}", other.len())))
                }
                None => (stem(&preds[0]), stem(&preds[1])),
            };
            let rep = compare_predictions((&la, &a), (&lb, &b), &corpus, parses.is_some())?;
            write_text(report, "")?;
            rep.write_json(report)?;
            for col in [&rep.left, &rep.right] {
                let syn = col.syntactic.map(|s| format!("{:.4}", s.ratio)).unwrap_or_else(|| "-".into());
                println!("{:<24} spurious {:.4}  syntactic {}", col.label, col.spurious.ratio, syn);
            }
            println!("{} disagreement cases", rep.cases.len());
            Ok(vec![report.clone()])
        }
        Command::Robustness {
            ckpt,
            data,
            clusters,
            alt_prompts,
            split,
            report,
        } => {
            let corpus = load_corpus(data)?;
            let model = load_model(ckpt, &corpus, None)?;
            let source = cluster_source(clusters, file, model.config.seed)?;
            let alts = load_alt_prompts(alt_prompts)?;
            let rep = robustness_delta(&model, &corpus, *split, &alts, &source)?;
            write_text(report, &to_json(&rep))?;
            println!(
                "raw Arg-C F1 {:.4}  perturbed {:.4}  delta {:+.4}",
                rep.raw_f1, rep.perturbed_f1, rep.delta
            );
            Ok(vec![report.clone()])
        }
    }
}

/// Entry point used by the binary.
pub fn main_exit_code() -> i32 {
    let code = dispatch(std::env::args_os());
    let _ = std::io::stdout().flush();
    code
}
