//! The `workbench` command line.
//!
//! Exit codes: 0 success, 1 operational error, 2 usage error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{Map, Value};
use workbench_core::agent::{trace_to_jsonl, Agent, DialogueState, EventBody, TraceEvent};
use workbench_core::bench::{self, ItemMode};
use workbench_core::curate::{self, FilterPolicy, GenerationRecord, LabelResult, Section};
use workbench_core::eval::{self, EvalError, EvalFormat, EvalOptions};
use workbench_core::gateway::{Backend, GatewayError, ScriptedBackend};
use workbench_core::kg::{KgIndex, KgQuery, SharedIndex};
use workbench_core::review::{self, CleanConfig, ConsistencyRule, Decision, MetaReview, ReviewPrediction, ReviewRecord};
use workbench_core::tools::render_hits;

use crate::config::{build_registry, load_index_file, ServiceConfig, DEFAULT_BIND};
use crate::server;
use crate::session::{BackendFactory, SessionStore};

#[derive(Debug, Parser)]
#[command(name = "workbench", version, about = "Academic research workbench", arg_required_else_help = true)]
pub struct Cli {
    /// JSON config file (default: $WORKBENCH_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Question answering with the ReAct agent.
    #[command(subcommand, arg_required_else_help = true)]
    Agent(AgentCommand),
    /// Knowledge-graph ingestion and queries.
    #[command(subcommand, arg_required_else_help = true)]
    Kg(KgCommand),
    /// Benchmark construction and evaluation.
    #[command(subcommand, arg_required_else_help = true)]
    Bench(BenchCommand),
    /// Peer-review cleaning, SFT data and metrics.
    #[command(subcommand, arg_required_else_help = true)]
    Review(ReviewCommand),
    /// Web-corpus labeling, filtering and generation records.
    #[command(subcommand, arg_required_else_help = true)]
    Corpus(CorpusCommand),
    /// Run the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    /// Scripted backend JSON; overrides the configured gateway.
    #[arg(long)]
    pub script: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AgentCommand {
    /// Ask questions; reads one per line from stdin unless --question is given.
    Chat {
        #[arg(short, long = "question")]
        questions: Vec<String>,
        /// Knowledge-graph index (.json) or record dump (.jsonl).
        #[arg(long)]
        kg: Option<PathBuf>,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Append every episode trace as JSON Lines.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum KgCommand {
    /// Build an index file from a JSON Lines record dump.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an AcademicSearch-shaped JSON query.
    Search {
        #[arg(long)]
        index: Option<PathBuf>,
        /// e.g. '{"title": "attention", "resultParameters": ["title"]}'
        #[arg(long)]
        query: String,
        #[arg(long)]
        json: bool,
    },
    /// Papers most similar to one paper.
    Similar {
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        id: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TaskFormat {
    Mmlu,
    Ceval,
    Pubmedqa,
    Scieval,
    Csqa,
}

impl From<TaskFormat> for EvalFormat {
    fn from(t: TaskFormat) -> Self {
        match t {
            TaskFormat::Mmlu => EvalFormat::Mmlu,
            TaskFormat::Ceval => EvalFormat::Ceval,
            TaskFormat::Pubmedqa => EvalFormat::Pubmedqa,
            TaskFormat::Scieval => EvalFormat::Scieval,
            TaskFormat::Csqa => EvalFormat::Csqa,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Generate multiple-choice items from method and dataset dumps.
    Build {
        #[arg(long)]
        methods: Option<PathBuf>,
        #[arg(long)]
        datasets: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// One item per record, alternating intro and refer.
        #[arg(long)]
        one_per_record: bool,
        /// Write skipped records with reasons as JSON Lines.
        #[arg(long)]
        skipped: Option<PathBuf>,
    },
    /// Few-shot evaluation against the configured backend.
    Eval {
        #[arg(long, value_enum)]
        task: TaskFormat,
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        shots: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[command(flatten)]
        backend: BackendArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ConsistencyArg {
    Conjunctive,
    LowestContradicting,
    Off,
}

#[derive(Debug, Subcommand)]
pub enum ReviewCommand {
    /// Drop short, long, ragged and low-confidence contradicting reviews.
    Clean {
        #[arg(long = "in")]
        input: PathBuf,
        /// Meta-reviews carrying each paper's decision.
        #[arg(long)]
        meta: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        removed: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "conjunctive")]
        consistency: ConsistencyArg,
    },
    /// Turn `{paper_text, review_text}` lines into prompt/output pairs.
    Sft {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recommendation accuracy, aspect recall and aspect accuracy.
    Metrics {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        meta: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Ask the judge model for a verdict on every `{text}` line.
    Label {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Keep labeled lines whose verdict passes the policy.
    Filter {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Policy JSON `{"keep_if_any": [...]}`; built-in default otherwise.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Format title/abstract generation records.
    SftGen {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Optional sections, e.g. `experiments,results`.
        #[arg(long, value_delimiter = ',')]
        sections: Vec<String>,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub bind: Option<String>,
    #[arg(long)]
    pub journal_dir: Option<PathBuf>,
    #[arg(long = "cors-origin")]
    pub cors_origins: Vec<String>,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug)]
pub struct CliError(pub String);

impl<E: std::fmt::Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

/// Parse `args` and run the command. `input` feeds `agent chat`.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return e.exit_code();
        }
    };
    match execute(cli, input, out) {
        Ok(()) => 0,
        Err(CliError(message)) => {
            let _ = writeln!(err, "error: {message}");
            1
        }
    }
}

fn execute(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write) -> CliResult {
    let config = ServiceConfig::resolve(cli.config.as_deref())?;
    match cli.command {
        Command::Agent(AgentCommand::Chat {
            questions,
            kg,
            max_steps,
            trace_out,
            backend,
        }) => agent_chat(&config, questions, kg, max_steps, trace_out, &backend, input, out),
        Command::Kg(cmd) => kg_command(&config, cmd, out),
        Command::Bench(cmd) => bench_command(&config, cmd, out),
        Command::Review(cmd) => review_command(cmd, out),
        Command::Corpus(cmd) => corpus_command(&config, cmd, out),
        Command::Serve(args) => serve(&config, args, out),
    }
}

fn scripted_from(path: &Path) -> Result<ScriptedBackend, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    Ok(ScriptedBackend::from_json(&text)?)
}

fn backend_for(config: &ServiceConfig, args: &BackendArgs) -> Result<Arc<dyn Backend>, CliError> {
    match &args.script {
        Some(path) => Ok(Arc::new(scripted_from(path)?)),
        None => Ok(config.backend()?),
    }
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = (usize, Result<String, std::io::Error>)>, CliError> {
    let file = File::open(path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    Ok(BufReader::new(file).lines().enumerate().map(|(i, l)| (i + 1, l)))
}

fn read_objects(path: &Path) -> Result<Vec<Map<String, Value>>, CliError> {
    let mut out = Vec::new();
    for (line_no, line) in open_lines(path)? {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(Value::Object(map)) => out.push(map),
            Ok(_) => return Err(CliError(format!("{}: line {line_no}: expected a JSON object", path.display()))),
            Err(e) => return Err(CliError(format!("{}: line {line_no}: {e}", path.display()))),
        }
    }
    Ok(out)
}

fn read_typed<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = File::open(path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    review::parse_jsonl(BufReader::new(file)).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> CliResult {
    let mut w = create(path)?;
    for row in rows {
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn print_event(out: &mut dyn Write, event: &TraceEvent) {
    let _ = match &event.body {
        EventBody::Thought(t) => writeln!(out, "Thought: {t}"),
        EventBody::Action(blob) => writeln!(out, "Action: {}", serde_json::to_string(blob).unwrap_or_default()),
        EventBody::Observation(o) => writeln!(out, "Observation: {o}"),
        EventBody::FinalAnswer(a) => writeln!(out, "Final Answer: {a}"),
    };
}

#[allow(clippy::too_many_arguments)]
fn agent_chat(
    config: &ServiceConfig,
    questions: Vec<String>,
    kg: Option<PathBuf>,
    max_steps: Option<usize>,
    trace_out: Option<PathBuf>,
    backend: &BackendArgs,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> CliResult {
    let backend = backend_for(config, backend)?;
    let index = match &kg {
        Some(path) => load_index_file(path)?,
        None => config.load_index()?,
    };
    let tools = Arc::new(build_registry(SharedIndex::new(index), config.web_search.as_ref())?);
    let mut agent_config = config.agent_config();
    if let Some(n) = max_steps {
        agent_config.max_steps = n;
    }
    let agent = Agent::new(backend, tools, agent_config)?;
    let mut state = DialogueState::new();
    let mut traces = match &trace_out {
        Some(path) => Some(create(path)?),
        None => None,
    };
    let interactive = questions.is_empty();
    let mut pending = questions.into_iter();
    let mut failed = None;
    loop {
        let question = if interactive {
            write!(out, "> ")?;
            out.flush()?;
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                break;
            }
            let line = line.trim().to_string();
            if line == "exit" || line == "quit" {
                break;
            }
            if line.is_empty() {
                continue;
            }
            line
        } else {
            match pending.next() {
                Some(q) => q,
                None => break,
            }
        };
        match agent.run_episode_with(&question, &mut state, &mut |e| print_event(out, e)) {
            Ok(outcome) => {
                if let Some(w) = traces.as_mut() {
                    w.write_all(trace_to_jsonl(&outcome.trace).as_bytes())?;
                }
            }
            Err(e) => {
                writeln!(out, "error: {e}")?;
                failed = Some(e.to_string());
                if !interactive {
                    break;
                }
            }
        }
    }
    if let Some(mut w) = traces {
        w.flush()?;
    }
    match failed {
        Some(message) => Err(CliError(message)),
        None => Ok(()),
    }
}

fn index_for(config: &ServiceConfig, path: Option<&Path>) -> Result<KgIndex, CliError> {
    match path {
        Some(p) => Ok(load_index_file(p)?),
        None if config.kg.is_some() => Ok(config.load_index()?),
        None => Err(CliError("no index: pass --index or set \"kg\" in the config".into())),
    }
}

fn kg_command(config: &ServiceConfig, cmd: KgCommand, out: &mut dyn Write) -> CliResult {
    match cmd {
        KgCommand::Ingest { input, out: target } => {
            let file = File::open(&input).map_err(|e| CliError(format!("{}: {e}", input.display())))?;
            let (index, stats) = KgIndex::ingest(BufReader::new(file))?;
            index.save(&target)?;
            writeln!(out, "accepted {} records, rejected {}", stats.accepted, stats.rejected)?;
            for r in &stats.reasons {
                writeln!(out, "  line {}: {}", r.line, r.reason)?;
            }
            writeln!(out, "index written to {}", target.display())?;
        }
        KgCommand::Search { index, query, json } => {
            let index = index_for(config, index.as_deref())?;
            let value: Value = serde_json::from_str(&query).map_err(|e| CliError(format!("--query: {e}")))?;
            let hits = index.search(&KgQuery::from_json(&value)?)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&hits)?)?;
            } else {
                writeln!(out, "{}", render_hits(&hits))?;
            }
        }
        KgCommand::Similar { index, id, k } => {
            let index = index_for(config, index.as_deref())?;
            for (other, score) in index.recommend_similar(&id, k)? {
                let title = index.get(&other).map(|r| r.title.as_str()).unwrap_or_default();
                writeln!(out, "{score:.4}\t{other}\t{title}")?;
            }
        }
    }
    Ok(())
}

fn bench_command(config: &ServiceConfig, cmd: BenchCommand, out: &mut dyn Write) -> CliResult {
    match cmd {
        BenchCommand::Build {
            methods,
            datasets,
            seed,
            out: target,
            one_per_record,
            skipped,
        } => {
            if methods.is_none() && datasets.is_none() {
                return Err(CliError("pass --methods and/or --datasets".into()));
            }
            let open = |p: &Path| -> Result<BufReader<File>, CliError> {
                File::open(p)
                    .map(BufReader::new)
                    .map_err(|e| CliError(format!("{}: {e}", p.display())))
            };
            let methods = match &methods {
                Some(p) => bench::parse_methods(open(p)?).map_err(|e| CliError(format!("{}: {e}", p.display())))?,
                None => Vec::new(),
            };
            let datasets = match &datasets {
                Some(p) => bench::parse_datasets(open(p)?).map_err(|e| CliError(format!("{}: {e}", p.display())))?,
                None => Vec::new(),
            };
            let mode = if one_per_record { ItemMode::OnePerRecord } else { ItemMode::Both };
            let (items, stats) = bench::build_dataset(&methods, &datasets, seed, mode);
            let mut w = create(&target)?;
            bench::write_items(&items, &mut w)?;
            if let Some(path) = skipped {
                write_jsonl(&path, &stats.skipped)?;
            }
            for (qtype, n) in &stats.counts {
                writeln!(out, "{qtype}: {n}")?;
            }
            writeln!(out, "wrote {} items to {} ({} skipped)", items.len(), target.display(), stats.skipped.len())?;
        }
        BenchCommand::Eval {
            task,
            path,
            shots,
            seed,
            report,
            parallelism,
            backend,
        } => {
            let backend = backend_for(config, &backend)?;
            let task = eval::load_task(task.into(), &path, shots)?;
            let options = EvalOptions {
                seed,
                parallelism,
                ..EvalOptions::default()
            };
            let (result, failure) = match eval::evaluate_with(&task, backend.as_ref(), &options) {
                Ok(r) => (r, None),
                Err(EvalError::Backend { source, partial }) => (*partial, Some(source.to_string())),
                Err(e) => return Err(e.into()),
            };
            let mut w = create(&report)?;
            w.write_all(result.to_json_pretty().as_bytes())?;
            w.write_all(b"\n")?;
            w.flush()?;
            for (subject, t) in &result.per_subject {
                writeln!(out, "{subject}: {}/{} = {:.4}", t.correct, t.total, t.accuracy)?;
            }
            writeln!(
                out,
                "overall (micro): {}/{} = {:.4}; macro: {:.4}; unparsed: {}",
                result.overall.correct, result.overall.total, result.overall.accuracy, result.macro_accuracy, result.unparsed_count
            )?;
            if let Some(message) = failure {
                return Err(CliError(format!("backend failed, partial report written: {message}")));
            }
        }
    }
    Ok(())
}

fn review_command(cmd: ReviewCommand, out: &mut dyn Write) -> CliResult {
    match cmd {
        ReviewCommand::Clean {
            input,
            meta,
            out: target,
            removed,
            consistency,
        } => {
            let reviews: Vec<ReviewRecord> = read_typed(&input)?;
            let metas: Vec<MetaReview> = read_typed(&meta)?;
            let decisions: std::collections::HashMap<String, Decision> =
                metas.into_iter().map(|m| (m.paper_id, m.decision)).collect();
            let config = CleanConfig {
                consistency: match consistency {
                    ConsistencyArg::Conjunctive => ConsistencyRule::Conjunctive,
                    ConsistencyArg::LowestContradicting => ConsistencyRule::LowestContradicting,
                    ConsistencyArg::Off => ConsistencyRule::Off,
                },
                ..CleanConfig::default()
            };
            let outcome = review::clean_reviews(reviews, &decisions, &config);
            write_jsonl(&target, &outcome.kept)?;
            if let Some(path) = removed {
                write_jsonl(&path, &outcome.removed)?;
            }
            writeln!(out, "kept {}, removed {}", outcome.kept.len(), outcome.removed.len())?;
            for (reason, n) in outcome.reason_counts() {
                writeln!(out, "  {}: {n}", serde_json::to_value(reason)?.as_str().unwrap_or_default())?;
            }
        }
        ReviewCommand::Sft { input, out: target } => {
            let mut records = Vec::new();
            for (i, obj) in read_objects(&input)?.into_iter().enumerate() {
                let field = |names: &[&str]| names.iter().find_map(|n| obj.get(*n).and_then(Value::as_str)).unwrap_or("");
                let paper = review::strip_boilerplate(field(&["paper_text", "paper"]));
                let text = field(&["review_text", "review"]);
                records.push(
                    review::format_sft_record(&paper, text)
                        .map_err(|e| CliError(format!("{}: record {}: {e}", input.display(), i + 1)))?,
                );
            }
            write_jsonl(&target, &records)?;
            writeln!(out, "wrote {} SFT records to {}", records.len(), target.display())?;
        }
        ReviewCommand::Metrics { pred, meta, json } => {
            let predictions: Vec<ReviewPrediction> = read_typed(&pred)?;
            let metas: Vec<MetaReview> = read_typed(&meta)?;
            let metrics = review::review_metrics(&predictions, &metas)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&metrics)?)?;
            } else {
                write!(out, "{}", review::render_metrics_table(&metrics))?;
                writeln!(out, "aspect accuracy (macro over predictions): {}", metrics.aspect_accuracy_macro)?;
            }
        }
    }
    Ok(())
}

fn corpus_command(config: &ServiceConfig, cmd: CorpusCommand, out: &mut dyn Write) -> CliResult {
    match cmd {
        CorpusCommand::Label {
            input,
            out: target,
            parallelism,
            backend,
        } => {
            let backend = backend_for(config, &backend)?;
            let mut rows = read_objects(&input)?;
            let texts: Vec<String> = rows
                .iter()
                .map(|r| r.get("text").and_then(Value::as_str).unwrap_or_default().to_string())
                .collect();
            let results = curate::label_samples(&texts, backend.as_ref(), parallelism);
            let mut failures = 0;
            for (row, result) in rows.iter_mut().zip(results) {
                match result {
                    LabelResult::Verdict(v) => {
                        row.insert("verdict".into(), serde_json::to_value(v)?);
                    }
                    LabelResult::Error(e) => {
                        failures += 1;
                        row.insert("verdict_error".into(), Value::String(e));
                    }
                }
            }
            write_jsonl(&target, &rows)?;
            writeln!(out, "labeled {} samples ({failures} without a valid verdict)", rows.len())?;
        }
        CorpusCommand::Filter { input, out: target, policy } => {
            let policy = match policy {
                Some(path) => FilterPolicy::from_json(&fs::read_to_string(&path).map_err(|e| CliError(format!("{}: {e}", path.display())))?)?,
                None => FilterPolicy::default(),
            };
            let rows = read_objects(&input)?;
            let total = rows.len();
            let mut kept = Vec::new();
            let mut unlabeled = 0;
            for row in rows {
                let verdict = row
                    .get("verdict")
                    .map(|v| curate::parse_verdict(&v.to_string()))
                    .transpose()
                    .ok()
                    .flatten();
                match verdict {
                    Some(v) if curate::filter_decision(&v, &policy).is_keep() => kept.push(row),
                    Some(_) => {}
                    None => unlabeled += 1,
                }
            }
            write_jsonl(&target, &kept)?;
            writeln!(out, "kept {} of {total} ({unlabeled} without a valid verdict)", kept.len())?;
        }
        CorpusCommand::SftGen { input, out: target, sections } => {
            let sections: Vec<Section> = sections
                .iter()
                .filter(|s| !s.trim().is_empty() && !s.trim().eq_ignore_ascii_case("intro") && !s.trim().eq_ignore_ascii_case("introduction"))
                .map(|s| s.parse())
                .collect::<Result<_, _>>()?;
            let records: Vec<GenerationRecord> = read_typed(&input)?;
            let mut rows = Vec::new();
            for (i, record) in records.iter().enumerate() {
                let text = curate::format_title_abstract_record(record, &sections)
                    .map_err(|e| CliError(format!("{}: record {}: {e}", input.display(), i + 1)))?;
                rows.push(serde_json::json!({ "text": text }));
            }
            write_jsonl(&target, &rows)?;
            writeln!(out, "wrote {} records to {}", rows.len(), target.display())?;
        }
    }
    Ok(())
}

fn serve(config: &ServiceConfig, args: ServeArgs, out: &mut dyn Write) -> CliResult {
    let factory: BackendFactory = match &args.backend.script {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
            ScriptedBackend::from_json(&text)?;
            Arc::new(move || Ok(Arc::new(ScriptedBackend::from_json(&text)?) as Arc<dyn Backend>))
        }
        None => {
            let gateway = config
                .gateway
                .clone()
                .ok_or_else(|| CliError("no backend configured: add a \"gateway\" block or pass --script".into()))?;
            let shared: Arc<dyn Backend> = Arc::from(gateway.build()?);
            let scripted = gateway.backend == workbench_core::gateway::BackendKind::Scripted;
            Arc::new(move || -> Result<Arc<dyn Backend>, GatewayError> {
                // scripted sessions each get their own cursor
                if scripted {
                    Ok(Arc::from(gateway.build()?))
                } else {
                    Ok(shared.clone())
                }
            })
        }
    };
    let tools = Arc::new(config.tools()?);
    let mut store = SessionStore::new(factory, tools, config.agent_config());
    if let Some(dir) = args.journal_dir.or_else(|| config.server.journal_dir.clone()) {
        store = store.with_journal(dir)?;
    }
    let origins = if args.cors_origins.is_empty() {
        config.server.cors_origins.clone()
    } else {
        args.cors_origins
    };
    let bind = args
        .bind
        .or_else(|| config.server.bind.clone())
        .unwrap_or_else(|| DEFAULT_BIND.to_string());
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&bind).await?;
        writeln!(out, "listening on http://{}", listener.local_addr()?)?;
        out.flush()?;
        let app = server::router(Arc::new(store), &origins);
        server::serve(listener, app, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        Ok::<(), CliError>(())
    })
}
