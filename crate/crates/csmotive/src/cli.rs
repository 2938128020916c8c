//! The `csmotive` command line.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use csmotive_core::annotation::{label_distribution, AnnotationIndex, AnnotationRecord};
use csmotive_core::chat::ParserProfile;
use csmotive_core::eval::{
    make_splits, render_report, run_experiment, Backend, EvalReport, HyperParams, NbBackend, SplitSpec,
    DEFAULT_NB_ALPHAS, DEFAULT_SEEDS,
};
use csmotive_core::langid::{seeds, train_langmodel, LangModel, TrainConfig};
use csmotive_core::nb::{nb_predict, nb_train_instances, NbModel};
use csmotive_core::switches::{extract_instances, focus_stats};
use csmotive_core::transcript::corpus_stats;
use csmotive_core::translate::TransferOptions;
use csmotive_core::{LabelKey, LangTag, SwitchInstance, Transcript};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{config_path, ProjectConfig};
use crate::io::{parse_files, read_corpus, read_jsonl, transcript_files, write_atomic, write_corpus, write_jsonl};
use crate::remote::{RemoteBackend, TrainPredictRequest};
use crate::server::AppState;
use crate::translation::{build_client, transfer_parallel, CachedTranslator, ClientSpec, TranslationCache};

#[derive(Debug, Parser)]
#[command(name = "csmotive", version, about = "Code-switch extraction, annotation and classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse CHAT transcripts into corpus JSONL.
    Parse(ParseArgs),
    /// Train or apply the word-level language identifier.
    #[command(subcommand)]
    Langid(LangidCommand),
    /// Cut switch instances with their context windows.
    Extract(ExtractArgs),
    /// Annotation statistics and agreement.
    #[command(subcommand)]
    Annotate(AnnotateCommand),
    /// Train per-label classifiers.
    Train(TrainArgs),
    /// Run the split / grid search / seed protocol and write reports.
    Eval(EvalArgs),
    /// Translate Spanish spans to Hindi (translate-train).
    Transfer(TransferArgs),
    /// Serve the annotation API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// Transcript files or directories of .cha/.txt files.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Matrix language assumed for bare `@s` markers.
    #[arg(long, default_value = "eng")]
    pub matrix: LangTag,
    /// Skip files that fail to parse instead of aborting.
    #[arg(long)]
    pub skip_errors: bool,
}

#[derive(Debug, Subcommand)]
pub enum LangidCommand {
    Train(LangidTrainArgs),
    Apply(LangidApplyArgs),
}

#[derive(Debug, Args)]
pub struct LangidTrainArgs {
    /// `LANG=PATH` seed lexicon; defaults to the shipped lists for `--pair`.
    #[arg(long = "lexicon", value_parser = parse_lexicon)]
    pub lexicons: Vec<(LangTag, PathBuf)>,
    #[arg(long, default_value = "eng,spa", value_parser = parse_pair)]
    pub pair: (LangTag, LangTag),
    #[arg(long, default_value_t = TrainConfig::default().ambiguity_margin)]
    pub margin: f64,
    #[arg(long, default_value_t = TrainConfig::default().min_seed_words)]
    pub min_seed_words: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LangidApplyArgs {
    /// Model written by `langid train`; defaults to the shipped `--pair` lists.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "eng,spa", value_parser = parse_pair)]
    pub pair: (LangTag, LangTag),
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long, default_value_t = csmotive_core::switches::DEFAULT_WINDOW)]
    pub context: usize,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Tag unmarked tokens with the shipped ENG/SPA model first.
    #[arg(long)]
    pub tag: bool,
}

#[derive(Debug, Subcommand)]
pub enum AnnotateCommand {
    /// Label distribution over one annotator's records.
    Stats {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        annotator: String,
        #[arg(long)]
        json: bool,
    },
    /// Per-label accuracy and kappa between two annotators.
    Agreement {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// File with one instance id per line; defaults to every instance
        /// annotated by `b`.
        #[arg(long)]
        subset: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Attach one annotator's labels to instances as gold labels.
    Gold {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        annotator: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Nb,
    Remote,
}

#[derive(Debug, Args)]
pub struct RemoteArgs {
    /// Model server base URL (remote backend).
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long, default_value = "xlmr")]
    pub model_name: String,
    /// Directory for cached remote responses.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value = "nb")]
    pub backend: BackendKind,
    /// `all` or a label key.
    #[arg(long, default_value = "all")]
    pub label: String,
    #[arg(long, default_value_t = DEFAULT_SEEDS[0])]
    pub seed: u64,
    /// Labeled instances JSONL.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// NB smoothing constant.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 16)]
    pub batch_size: u32,
    #[arg(long, default_value_t = 2e-5)]
    pub learning_rate: f64,
    /// Instances to predict; predictions go to `<out-dir>/predictions.jsonl`.
    #[arg(long)]
    pub predict: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub remote: RemoteArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum, default_value = "nb")]
    pub backend: BackendKind,
    /// `all` or comma-separated label keys.
    #[arg(long, default_value = "all")]
    pub labels: String,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SEEDS)]
    pub seeds: Vec<u64>,
    /// Labeled instances JSONL.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// splits.json: test conversation ids, dev fraction, shuffle seed.
    #[arg(long)]
    pub splits: Option<PathBuf>,
    /// Overrides the shuffle seed in the splits file.
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
    /// Separate labeled test set (e.g. Hindi-English); replaces the test
    /// conversations of the splits file.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Language pair of the test data, shown in the report header.
    #[arg(long, default_value = "spa-eng")]
    pub pair: String,
    /// NB smoothing grid.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_NB_ALPHAS)]
    pub alphas: Vec<f64>,
    /// Labels evaluated concurrently.
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub remote: RemoteArgs,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    /// identity | upper | http:<url template with {text}, {source}, {target}>
    #[arg(long, default_value = "identity")]
    pub client: ClientSpec,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Translation cache (JSONL); defaults to `<out>.cache.jsonl`.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Leave Devanagari client output as it is.
    #[arg(long)]
    pub no_romanize: bool,
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Config file; falls back to $CSMOTIVE_CONFIG, then ./csmotive.toml.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured port.
    #[arg(long)]
    pub port: Option<u16>,
}

fn parse_pair(s: &str) -> Result<(LangTag, LangTag), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected two languages like eng,spa, got `{s}`"))?;
    let a: LangTag = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: LangTag = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a == b || !a.is_language() || !b.is_language() {
        return Err(format!("`{s}` is not a pair of two different languages"));
    }
    Ok((a, b))
}

fn parse_lexicon(s: &str) -> Result<(LangTag, PathBuf), String> {
    let (lang, path) = s.split_once('=').ok_or_else(|| format!("expected LANG=PATH, got `{s}`"))?;
    let lang: LangTag = lang.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((lang, PathBuf::from(path)))
}

/// Runs the CLI and returns the process exit code: 0 on success, 1 on a
/// domain error, 2 on a usage error.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Parse(a) => parse(a),
        Command::Langid(LangidCommand::Train(a)) => langid_train(a),
        Command::Langid(LangidCommand::Apply(a)) => langid_apply(a),
        Command::Extract(a) => extract(a),
        Command::Annotate(c) => annotate(c),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Transfer(a) => transfer(a),
        Command::Serve(a) => serve(a),
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("plain data serializes"));
}

fn parse(args: ParseArgs) -> Result<()> {
    let profile = ParserProfile { default_matrix: args.matrix, ..ParserProfile::default() };
    let files = transcript_files(&args.inputs)?;
    if files.is_empty() {
        bail!("no transcript files found");
    }
    let mut transcripts = Vec::new();
    let mut failures = Vec::new();
    for result in parse_files(&files, &profile) {
        match result {
            Ok(t) => transcripts.push(t),
            Err(e) => failures.push(e.to_string()),
        }
    }
    if !failures.is_empty() {
        if !args.skip_errors {
            bail!("{} file(s) failed to parse:\n  {}", failures.len(), failures.join("\n  "));
        }
        for f in &failures {
            log::warn!("skipped {f}");
        }
    }
    write_corpus(&args.out, &transcripts)?;
    eprintln!("parsed {} transcript(s), {} skipped", transcripts.len(), failures.len());
    print_json(&corpus_stats(&transcripts));
    Ok(())
}

fn shipped_model(pair: (LangTag, LangTag)) -> Result<LangModel> {
    Ok(train_langmodel(&seeds::pair(pair.0, pair.1), &TrainConfig::default())?)
}

fn langid_train(args: LangidTrainArgs) -> Result<()> {
    let corpora = if args.lexicons.is_empty() {
        seeds::pair(args.pair.0, args.pair.1)
    } else {
        args.lexicons
            .iter()
            .map(|(lang, path)| {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Ok((*lang, seeds::words(&text)))
            })
            .collect::<Result<Vec<_>>>()?
    };
    let config = TrainConfig { ambiguity_margin: args.margin, min_seed_words: args.min_seed_words, ..TrainConfig::default() };
    let model = train_langmodel(&corpora, &config)?;
    write_atomic(&args.out, &serde_json::to_vec(&model)?)?;
    eprintln!("trained {:?} model, alphabet {}", model.languages, model.alphabet_size);
    Ok(())
}

fn load_model(path: &Path) -> Result<LangModel> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let model: LangModel = serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    if model.version != csmotive_core::langid::MODEL_VERSION {
        bail!("{}: model version {} is not supported", path.display(), model.version);
    }
    Ok(model)
}

fn tag_corpus(model: &LangModel, transcripts: &[Transcript]) -> Result<Vec<Transcript>> {
    transcripts
        .par_iter()
        .map(|t| Ok(t.map_utterances(|u| model.tag_utterance(u))?))
        .collect()
}

fn langid_apply(args: LangidApplyArgs) -> Result<()> {
    let model = match &args.model {
        Some(p) => load_model(p)?,
        None => shipped_model(args.pair)?,
    };
    let tagged = tag_corpus(&model, &read_corpus(&args.input)?)?;
    write_corpus(&args.out, &tagged)?;
    print_json(&corpus_stats(&tagged));
    Ok(())
}

fn extract(args: ExtractArgs) -> Result<()> {
    let mut transcripts = read_corpus(&args.input)?;
    if args.tag {
        transcripts = tag_corpus(&shipped_model((LangTag::Eng, LangTag::Spa))?, &transcripts)?;
    }
    let instances: Vec<SwitchInstance> =
        transcripts.iter().flat_map(|t| extract_instances(t, args.context)).collect();
    write_jsonl(&args.out, &instances)?;
    eprintln!("{} instance(s) from {} transcript(s)", instances.len(), transcripts.len());
    print_json(&focus_stats(&instances));
    Ok(())
}

fn read_records(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let records: Vec<AnnotationRecord> = read_jsonl(path)?;
    for r in &records {
        r.check_schema().with_context(|| format!("{}: record for `{}`", path.display(), r.instance_id))?;
    }
    Ok(records)
}

fn annotate(cmd: AnnotateCommand) -> Result<()> {
    match cmd {
        AnnotateCommand::Stats { annotations, annotator, json } => {
            let index = AnnotationIndex::compact(read_records(&annotations)?);
            let dist = label_distribution(index.by_annotator(&annotator))?;
            if json {
                print_json(&dist);
            } else {
                println!("{} instance(s) annotated by {annotator}", dist.instances);
                for f in &dist.labels {
                    println!("{:<14} {:>6} {:>6.1}%", f.label.as_str(), f.count, f.frequency * 100.0);
                }
                println!("multi-label    {:>13.1}%", dist.multilabel_rate * 100.0);
                println!("no label       {:>6}", dist.no_label);
            }
        }
        AnnotateCommand::Agreement { annotations, a, b, subset, json } => {
            let index = AnnotationIndex::compact(read_records(&annotations)?);
            let ids: Vec<String> = match subset {
                Some(p) => std::fs::read_to_string(&p)
                    .with_context(|| format!("reading {}", p.display()))?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(String::from)
                    .collect(),
                None => index.by_annotator(&b).map(|r| r.instance_id.clone()).collect(),
            };
            let rows = index.agreement_table(&a, &b, &ids)?;
            if json {
                print_json(&rows);
            } else {
                println!("{a} vs {b} over {} instance(s)", ids.len());
                for r in &rows {
                    let kappa = r.kappa.map_or("undefined".to_string(), |k| format!("{k:.3}"));
                    println!("{:<14} {:>6.1}%  kappa {kappa}", r.label.as_str(), r.accuracy * 100.0);
                }
            }
        }
        AnnotateCommand::Gold { instances, annotations, annotator, out } => {
            let index = AnnotationIndex::compact(read_records(&annotations)?);
            let mut labeled = Vec::new();
            let mut missing = 0;
            for mut inst in read_jsonl::<SwitchInstance>(&instances)? {
                match index.get(&inst.id, &annotator) {
                    Some(r) => {
                        inst.labels = Some(r.labels);
                        labeled.push(inst);
                    }
                    None => missing += 1,
                }
            }
            write_jsonl(&out, &labeled)?;
            eprintln!("{} labeled instance(s) written, {missing} without a record from {annotator}", labeled.len());
        }
    }
    Ok(())
}

fn parse_labels(spec: &str) -> Result<Vec<LabelKey>> {
    if spec == "all" {
        return Ok(LabelKey::ALL.to_vec());
    }
    spec.split(',').map(|s| Ok(s.trim().parse::<LabelKey>()?)).collect()
}

fn remote_backend(args: &RemoteArgs) -> Result<RemoteBackend> {
    let endpoint = args.endpoint.clone().context("the remote backend needs --endpoint")?;
    Ok(RemoteBackend::new(endpoint, args.model_name.clone(), args.cache_dir.clone()))
}

/// NB model file: one per (label, backend, seed).
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub backend: String,
    pub seed: u64,
    pub model: NbModel,
}

fn train(args: TrainArgs) -> Result<()> {
    let labels = parse_labels(&args.label)?;
    let data: Vec<SwitchInstance> = read_jsonl(&args.input)?;
    let to_predict: Option<Vec<SwitchInstance>> = args.predict.as_deref().map(read_jsonl).transpose()?;
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let mut predictions = Vec::new();
    match args.backend {
        BackendKind::Nb => {
            let models = labels
                .par_iter()
                .map(|&label| Ok(nb_train_instances(&data, label, args.alpha)?))
                .collect::<Result<Vec<NbModel>>>()?;
            for model in models {
                if let Some(test) = &to_predict {
                    predictions.extend(test.iter().map(|i| nb_predict(&model, i)));
                }
                let path = args.out_dir.join(format!("{}.nb.seed{}.json", model.label, args.seed));
                let file = ModelFile { format_version: 1, backend: "nb".into(), seed: args.seed, model };
                write_atomic(&path, &serde_json::to_vec(&file)?)?;
            }
        }
        BackendKind::Remote => {
            let test = to_predict.as_ref().context("the remote backend trains and predicts in one call; pass --predict")?;
            let backend = remote_backend(&args.remote)?;
            let params = HyperParams::Transformer {
                batch_size: args.batch_size,
                learning_rate: args.learning_rate,
                epochs: csmotive_core::eval::TRANSFORMER_EPOCHS,
                weight_decay: csmotive_core::eval::TRANSFORMER_WEIGHT_DECAY,
            };
            for &label in &labels {
                let request = TrainPredictRequest::build(&backend.model_name, label, &params, args.seed, &data, &[], test)?;
                predictions.extend(backend.remote_train_predict(&request)?);
            }
        }
    }
    if to_predict.is_some() {
        write_jsonl(&args.out_dir.join("predictions.jsonl"), &predictions)?;
    }
    eprintln!("trained {} label(s)", labels.len());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let splits_path = args.splits.as_ref().context("eval needs --splits (test conversation ids and seed)")?;
    let text = std::fs::read_to_string(splits_path).with_context(|| format!("reading {}", splits_path.display()))?;
    let mut spec: SplitSpec = serde_json::from_str(&text).with_context(|| format!("parsing {}", splits_path.display()))?;
    if let Some(seed) = args.shuffle_seed {
        spec.shuffle_seed = seed;
    }
    let labels = parse_labels(&args.labels)?;
    let instances: Vec<SwitchInstance> = read_jsonl(&args.input)?;
    let mut splits = make_splits(&instances, &spec)?;
    if let Some(test) = &args.test {
        splits.test = read_jsonl(test)?;
    }

    let (backend, grid): (Box<dyn Backend + Sync>, Vec<HyperParams>) = match args.backend {
        BackendKind::Nb => (Box::new(NbBackend), HyperParams::nb_grid(&args.alphas)),
        BackendKind::Remote => (Box::new(remote_backend(&args.remote)?), HyperParams::transformer_grid()),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs.max(1)).build()?;
    let rows = pool.install(|| {
        labels
            .par_iter()
            .map(|&label| run_experiment(backend.as_ref(), &splits, label, &grid, &args.seeds))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let report = EvalReport::new(args.pair, backend.name(), rows);
    let text = render_report(&report);
    write_atomic(&args.out_dir.join("report.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    write_atomic(&args.out_dir.join("report.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn transfer(args: TransferArgs) -> Result<()> {
    let instances: Vec<SwitchInstance> = read_jsonl(&args.input)?;
    let cache_path = args.cache.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".cache.jsonl");
        PathBuf::from(p)
    });
    let client = CachedTranslator::new(build_client(&args.client), TranslationCache::open(&cache_path)?);
    let opts = TransferOptions { romanize: !args.no_romanize, ..TransferOptions::default() };
    let (out, report) = transfer_parallel(&instances, &client, &opts, args.jobs);
    write_jsonl(&args.out, &out)?;
    if let Some(p) = &args.report {
        write_atomic(p, serde_json::to_string_pretty(&report)?.as_bytes())?;
    }
    eprintln!(
        "{}/{} transferred, {} failed, {} span(s) translated, {} from cache, {} client call(s)",
        report.transferred,
        report.total,
        report.failures.len(),
        report.spans_translated,
        report.cache_hits,
        client.client_calls()
    );
    Ok(())
}

fn serve(args: ServeArgs) -> Result<()> {
    let path = config_path(args.config.as_deref());
    let config = ProjectConfig::load(&path)?;
    let state = AppState::from_config(&config)?;
    let port = args.port.unwrap_or(config.port);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(crate::server::serve(state, config.ui_dir.clone(), port))?;
    Ok(())
}

