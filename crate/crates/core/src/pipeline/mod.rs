//! The staged retrieval pipeline.
//!
//! retrieve (BM25 on MC) → passage keyword ranking → passage semantic
//! ranking → sentence split + query-focused summaries → sentence keyword
//! ranking → semantic × temporal hybrid ranking → passage selection.

mod hybrid;
mod summarize;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{split_sentences, Corpus, Sentence};
use crate::lexical::{bm25_search, keyword_rank, InvertedIndex};
use crate::prompts::PromptSet;
use crate::providers::{Generator, ProviderError, SemanticScorer};
use crate::query::{decompose_llm, decompose_rule_based, DecomposedQuery};
use crate::temporal::SplineParams;

pub use hybrid::{hybrid_order, hybrid_rank, normalize_semantic, select_passages, RankedPassage, ScoredSentence};
pub use summarize::{parse_summary, summarize_qfs};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub n_retrieve: usize,
    pub n_kw_passages: usize,
    /// Passages to summarize; 0 disables summarization.
    pub qfs_k: usize,
    pub n_kw_sentences: usize,
    pub top_out: usize,
    pub spline: SplineParams,
    /// Off = semantic-only ranking (temporal score fixed at 1).
    pub temporal_scoring: bool,
    /// Decompose and extract keywords with the generator when one is given.
    pub generator_decomposition: bool,
    pub trace: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            n_retrieve: 1000,
            n_kw_passages: 100,
            qfs_k: 5,
            n_kw_sentences: 200,
            top_out: 20,
            spline: SplineParams::default(),
            temporal_scoring: true,
            generator_decomposition: true,
            trace: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::InvalidConfig(m.into()));
        if self.n_kw_passages == 0 {
            return bad("n_kw_passages must be at least 1");
        }
        if self.n_retrieve < self.n_kw_passages {
            return bad("n_retrieve must be >= n_kw_passages");
        }
        if self.top_out == 0 {
            return bad("top_out must be at least 1");
        }
        if self.n_kw_sentences < self.top_out {
            return bad("n_kw_sentences must be >= top_out");
        }
        if self.qfs_k > self.n_kw_passages {
            return bad("qfs_k must be <= n_kw_passages");
        }
        self.spline.validate().map_err(|e| PipelineError::InvalidConfig(e.to_string()))
    }
}

/// Shared, read-only inputs of a pipeline run.
#[derive(Clone, Copy)]
pub struct Engine<'a> {
    pub corpus: &'a Corpus,
    pub index: &'a InvertedIndex,
    pub scorer: &'a dyn SemanticScorer,
    pub generator: Option<&'a dyn Generator>,
    pub prompts: &'a PromptSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceItem {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// Candidates surviving one stage, in that stage's order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub stage: String,
    pub items: Vec<TraceItem>,
}

impl StageTrace {
    fn new(stage: &str, items: impl IntoIterator<Item = (String, Option<f64>)>) -> Self {
        Self { stage: stage.into(), items: items.into_iter().map(|(id, score)| TraceItem { id, score }).collect() }
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|i| i.id.as_str())
    }
}

pub const STAGES: [&str; 7] =
    ["retrieve", "passage_keyword", "passage_semantic", "sentences", "sentence_keyword", "hybrid", "select"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub query: DecomposedQuery,
    pub ranked: Vec<RankedPassage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<StageTrace>>,
}

pub fn decompose(question: &str, engine: &Engine<'_>, config: &PipelineConfig) -> DecomposedQuery {
    match engine.generator {
        Some(g) if config.generator_decomposition => decompose_llm(question, g, engine.prompts),
        _ => decompose_rule_based(question),
    }
}

pub fn run_pipeline(
    question: &str,
    engine: &Engine<'_>,
    config: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    if question.trim().is_empty() {
        return Err(PipelineError::EmptyQuestion);
    }
    config.validate()?;
    let dq = decompose(question, engine, config);
    run_decomposed(dq, engine, config)
}

/// Runs every stage after decomposition.
pub fn run_decomposed(
    dq: DecomposedQuery,
    engine: &Engine<'_>,
    config: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    let corpus = engine.corpus;
    let mut trace: Vec<StageTrace> = Vec::new();
    let tracing = config.trace;
    let mut record = |t: StageTrace| {
        if tracing {
            trace.push(t);
        }
    };

    let retrieved = bm25_search(engine.index, &dq.main_content, config.n_retrieve);
    record(StageTrace::new("retrieve", retrieved.iter().map(|(id, s)| (id.clone(), Some(*s)))));
    if retrieved.is_empty() {
        return Ok(PipelineOutput { query: dq, ranked: Vec::new(), trace: tracing.then_some(trace) });
    }

    let items: Vec<(String, String)> = retrieved
        .iter()
        .map(|(id, _)| (id.clone(), corpus.get(id).expect("index matches corpus").indexed_text()))
        .collect();
    let kept = keyword_rank(&items, &dq.keywords, config.n_kw_passages);
    record(StageTrace::new("passage_keyword", kept.iter().map(|k| (k.unit_id.clone(), Some(k.coverage as f64)))));

    let texts: Vec<String> = kept.iter().map(|k| corpus.get(&k.unit_id).unwrap().indexed_text()).collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let raw = engine.scorer.score(&dq.main_content, &refs)?;
    if raw.len() != refs.len() {
        return Err(
            ProviderError::Other(format!("scorer returned {} scores for {} passages", raw.len(), refs.len())).into()
        );
    }
    let mut semantic: Vec<(&str, f64)> = kept.iter().map(|k| k.unit_id.as_str()).zip(raw).collect();
    // stable: equal scores keep keyword-stage order
    semantic.sort_by(|a, b| b.1.total_cmp(&a.1));
    record(StageTrace::new("passage_semantic", semantic.iter().map(|(id, s)| (id.to_string(), Some(*s)))));

    let summaries: Vec<Option<Sentence>> = match engine.generator {
        Some(g) if config.qfs_k > 0 => semantic
            .par_iter()
            .take(config.qfs_k)
            .map(|(id, _)| summarize_qfs(corpus.get(id).unwrap(), &dq.main_content, g, engine.prompts))
            .collect(),
        _ => Vec::new(),
    };
    let mut sentences: Vec<Sentence> = Vec::new();
    for (i, (id, _)) in semantic.iter().enumerate() {
        sentences.extend(split_sentences(corpus.get(id).unwrap()));
        if let Some(Some(s)) = summaries.get(i) {
            sentences.push(s.clone());
        }
    }
    record(StageTrace::new("sentences", sentences.iter().map(|s| (s.unit_id(), None))));

    let items: Vec<(String, String)> = sentences.iter().map(|s| (s.unit_id(), s.text.clone())).collect();
    let kept = keyword_rank(&items, &dq.keywords, config.n_kw_sentences);
    record(StageTrace::new("sentence_keyword", kept.iter().map(|k| (k.unit_id.clone(), Some(k.coverage as f64)))));
    let survivors: Vec<Sentence> = kept.iter().map(|k| sentences[k.prior_rank].clone()).collect();

    let params = config.temporal_scoring.then_some(&config.spline);
    let scored = hybrid_rank(&survivors, &dq, engine.scorer, params, corpus)?;
    record(StageTrace::new("hybrid", scored.iter().map(|s| (s.sentence.unit_id(), Some(s.final_score)))));

    let ranked = select_passages(&scored, config.top_out, corpus);
    record(StageTrace::new("select", ranked.iter().map(|r| (r.passage_id.clone(), Some(r.score)))));

    Ok(PipelineOutput { query: dq, ranked, trace: tracing.then_some(trace) })
}
