//! The `mrag` command line: index, run, eval, sweep and sidecar-check.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 provider error.

pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use mrag::eval::{
    add_semantic, evaluate, generate_answer, load_benchmark, load_run, sweep, write_sweep_csv, BenchmarkSample,
    ReaderTemplate, RunRecord,
};
use mrag::lexical::InvertedIndex;
use mrag::pipeline::{decompose, run_decomposed, Engine, PipelineError};
use mrag::providers::{ProviderError, RemoteClient};
use mrag::temporal::{ConstraintClass, ConstraintKind, TimePoint};
use mrag::{load_corpus, Corpus};
use rayon::prelude::*;

pub use config::{EngineConfig, ProviderKind, Providers};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("provider error: {0}")]
    Provider(#[from] ProviderError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Provider(_) => 3,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Provider(p) => Self::Provider(p),
            PipelineError::InvalidConfig(m) => Self::Usage(m),
            PipelineError::EmptyQuestion => Self::Data(e.to_string()),
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "mrag", version, about = "Modular retrieval for time-sensitive questions")]
pub struct Cli {
    /// Engine configuration file (TOML).
    #[arg(long, global = true, default_value = "mrag.toml")]
    pub config: PathBuf,
    /// Override the provider kind from the config.
    #[arg(long, global = true, value_enum)]
    pub provider: Option<ProviderKind>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the BM25 index cache.
    Index,
    /// Run the pipeline over a query file.
    Run(RunArgs),
    /// Score a run file against a benchmark.
    Eval(EvalArgs),
    /// Tabulate temporal scores over a date grid.
    Sweep(SweepArgs),
    /// Check that the sidecar answers health and embed requests.
    SidecarCheck,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Passages kept per query (overrides pipeline.top_out).
    #[arg(long)]
    pub k: Option<usize>,
    /// Passages summarized per query (overrides pipeline.qfs_k).
    #[arg(long)]
    pub qfs: Option<usize>,
    /// Record per-stage candidates in the output.
    #[arg(long)]
    pub trace: bool,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    /// Also generate an answer with this reader template
    /// (direct, cot, rag_concat, self_rag). Needs a generator.
    #[arg(long)]
    pub reader: Option<ReaderTemplate>,
    /// Passages handed to the reader.
    #[arg(long, default_value_t = 5)]
    pub reader_passages: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated cutoffs (overrides ks from the config).
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// `KIND:ANCHOR` or `KIND:START,END` for between classes,
    /// e.g. `last-before:1981.5`.
    #[arg(long)]
    pub class: String,
    /// `START..END[:STEP]` in years, or a comma list of dates.
    #[arg(long)]
    pub grid: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Query for an extra semantic-score column.
    #[arg(long, requires = "doc_template")]
    pub semantic_query: Option<String>,
    /// Document text with a `{date}` slot, paired with --semantic-query.
    #[arg(long, requires = "semantic_query")]
    pub doc_template: Option<String>,
}

/// Parses arguments and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mrag: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = EngineConfig::load(&cli.config)?;
    if let Some(p) = cli.provider {
        cfg.provider.kind = p;
    }
    match &cli.command {
        Command::Index => command_index(&cfg),
        Command::Run(a) => command_run(&mut cfg, a),
        Command::Eval(a) => command_eval(&mut cfg, a),
        Command::Sweep(a) => command_sweep(&cfg, a),
        Command::SidecarCheck => command_sidecar_check(&cfg),
    }
}

/// Writes through a temp file in the destination directory, then renames.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::Data(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        write(&mut buf).map_err(fail)?;
        buf.flush().map_err(fail)?;
    }
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn load_inputs(cfg: &EngineConfig) -> Result<(Corpus, InvertedIndex), CliError> {
    cfg.validate()?;
    let corpus = load_corpus(&cfg.corpus).map_err(data)?;
    let index = InvertedIndex::load_or_build(cfg.index_path(), &corpus, cfg.bm25).map_err(data)?;
    Ok((corpus, index))
}

pub fn command_index(cfg: &EngineConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let corpus = load_corpus(&cfg.corpus).map_err(data)?;
    let index = InvertedIndex::build(&corpus, cfg.bm25).map_err(data)?;
    index.save(cfg.index_path()).map_err(data)?;
    log::info!("indexed {} passages into {}", corpus.len(), cfg.index_path().display());
    Ok(())
}

fn answer_for(
    engine: &Engine<'_>,
    dq: &mrag::DecomposedQuery,
    ranked: &[mrag::RankedPassage],
    template: ReaderTemplate,
    n: usize,
) -> Option<String> {
    let g = engine.generator?;
    match generate_answer(dq, &ranked[..n.min(ranked.len())], g, template, engine.prompts) {
        Ok(a) => Some(a.text),
        Err(e) => {
            log::warn!("answer generation failed for {:?}: {e}", dq.original);
            None
        }
    }
}

pub fn command_run(cfg: &mut EngineConfig, args: &RunArgs) -> Result<(), CliError> {
    if let Some(k) = args.k {
        cfg.pipeline.top_out = k;
        cfg.pipeline.n_kw_sentences = cfg.pipeline.n_kw_sentences.max(k);
    }
    if let Some(q) = args.qfs {
        cfg.pipeline.qfs_k = q;
    }
    if args.trace {
        cfg.pipeline.trace = true;
    }
    if args.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let (corpus, index) = load_inputs(cfg)?;
    let samples = load_benchmark(&args.queries).map_err(data)?;
    let prompts = cfg.prompt_set()?;
    let providers = Providers::build(&cfg.provider)?;
    if args.reader.is_some() && providers.generator.is_none() {
        return Err(CliError::Usage("--reader needs a generator (provider.generator_model)".into()));
    }
    let engine = Engine {
        corpus: &corpus,
        index: &index,
        scorer: providers.scorer.as_ref(),
        generator: providers.generator.as_deref(),
        prompts: &prompts,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.workers).build().map_err(data)?;
    let run_one = |s: &BenchmarkSample| -> Result<RunRecord, CliError> {
        if s.question.trim().is_empty() {
            return Err(CliError::Data(format!("query {:?} has an empty question", s.id)));
        }
        let dq = decompose(&s.question, &engine, &cfg.pipeline);
        let out = run_decomposed(dq, &engine, &cfg.pipeline)?;
        let mut rec = RunRecord::from_output(&s.id, &out);
        if let Some(t) = args.reader {
            rec.answer = answer_for(&engine, &out.query, &out.ranked, t, args.reader_passages);
        }
        Ok(rec)
    };
    cfg.pipeline.validate()?;
    let mut records: Vec<RunRecord> = pool.install(|| samples.par_iter().map(run_one).collect::<Result<_, _>>())?;
    records.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    write_atomic(&args.out, |w| {
        for r in &records {
            serde_json::to_writer(&mut *w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

pub fn command_eval(cfg: &mut EngineConfig, args: &EvalArgs) -> Result<(), CliError> {
    if let Some(k) = &args.k {
        cfg.ks = k.clone();
    }
    cfg.validate()?;
    let corpus = load_corpus(&cfg.corpus).map_err(data)?;
    let samples = load_benchmark(&args.queries).map_err(data)?;
    let run = load_run(&args.run).map_err(data)?;
    let report = evaluate(&samples, &run, &corpus, &cfg.ks, cfg.echo()).map_err(data)?;
    write_atomic(&args.out, |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        w.write_all(b"\n")
    })
}

pub fn parse_class(spec: &str) -> Result<ConstraintClass, CliError> {
    let usage = |m: String| CliError::Usage(format!("--class {spec:?}: {m}"));
    let (kind, anchors) = spec.split_once(':').ok_or_else(|| usage("expected KIND:ANCHOR".into()))?;
    let kind: ConstraintKind = kind.parse().map_err(|e| usage(format!("{e}")))?;
    let nums: Vec<f64> = anchors
        .split(',')
        .map(|a| a.trim().parse::<f64>().map_err(|e| usage(format!("{a:?}: {e}"))))
        .collect::<Result<_, _>>()?;
    let class = match nums.as_slice() {
        [a] => ConstraintClass::point(kind, *a),
        [a, b] => ConstraintClass::window(kind, *a, *b),
        _ => return Err(usage("expected one or two anchors".into())),
    };
    class.map_err(|e| usage(e.to_string()))
}

pub fn parse_grid(spec: &str) -> Result<Vec<TimePoint>, CliError> {
    let usage = |m: String| CliError::Usage(format!("--grid {spec:?}: {m}"));
    let grid: Vec<TimePoint> = if let Some((a, rest)) = spec.split_once("..") {
        let (b, step) = match rest.split_once(':') {
            Some((b, s)) => (b, s.trim().parse::<usize>().map_err(|e| usage(e.to_string()))?),
            None => (rest, 1),
        };
        let a: i32 = a.trim().parse().map_err(|e| usage(format!("{e}")))?;
        let b: i32 = b.trim().parse().map_err(|e| usage(format!("{e}")))?;
        if step == 0 || b < a {
            return Err(usage("need START <= END and STEP >= 1".into()));
        }
        (a..=b).step_by(step).map(|y| TimePoint::year(y).map_err(|e| usage(e.to_string()))).collect::<Result<_, _>>()?
    } else {
        spec.split(',').map(|d| d.parse::<TimePoint>().map_err(|e| usage(e.to_string()))).collect::<Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err(usage("empty grid".into()));
    }
    Ok(grid)
}

pub fn command_sweep(cfg: &EngineConfig, args: &SweepArgs) -> Result<(), CliError> {
    cfg.pipeline.spline.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let class = parse_class(&args.class)?;
    let grid = parse_grid(&args.grid)?;
    let mut rows = sweep(&class, &cfg.pipeline.spline, &grid);
    if let (Some(q), Some(t)) = (&args.semantic_query, &args.doc_template) {
        let providers = Providers::build(&cfg.provider)?;
        add_semantic(&mut rows, providers.scorer.as_ref(), q, t)?;
    }
    write_atomic(&args.out, |w| write_sweep_csv(&rows, w).map_err(std::io::Error::other))
}

pub fn command_sidecar_check(cfg: &EngineConfig) -> Result<(), CliError> {
    let client = Arc::new(RemoteClient::new(cfg.provider.remote.clone()));
    let health = client.health()?;
    let vectors = client.embed(&["sidecar check"])?;
    let dim = vectors.first().map(|v| v.dim()).unwrap_or(0);
    if dim != health.dims.embed {
        return Err(ProviderError::DimensionMismatch { expected: health.dims.embed, actual: dim }.into());
    }
    println!("sidecar ok: {} (embed dim {dim})", cfg.provider.remote.base_url);
    Ok(())
}
