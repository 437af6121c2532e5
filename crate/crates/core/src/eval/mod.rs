//! Benchmarks, run records, retrieval/answer metrics, answer generation, and
//! temporal-score sweeps.

mod answer;
mod metrics;
mod sweep;

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use crate::corpus::{Corpus, SentenceOrigin};
use crate::pipeline::{PipelineOutput, StageTrace};

pub use answer::{check_relevance, extract_answer, generate_answer, AnswerResult, ReaderTemplate};
pub use metrics::{contains_normalized, exact_match, f1, normalize_answer};
pub use sweep::{add_semantic, sweep, write_sweep_csv, SweepRow};

pub const DEFAULT_KS: [usize; 4] = [1, 5, 10, 20];

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("run has no record for query {0:?}")]
    MissingRun(String),
    #[error("run references unknown passage {0:?}")]
    UnknownPassage(String),
    #[error("invalid k list: {0}")]
    InvalidK(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Timeqa,
    Situatedqa,
    #[default]
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSample {
    pub id: String,
    pub question: String,
    #[serde(default, deserialize_with = "answers_list_or_joined")]
    pub answers: Vec<String>,
    #[serde(default)]
    pub gold_evidence: Vec<String>,
    #[serde(default)]
    pub source: Source,
    #[serde(default)]
    pub perturbed: bool,
}

fn split_alternatives(s: &str) -> Vec<String> {
    s.split('|').map(str::trim).filter(|a| !a.is_empty()).map(String::from).collect()
}

/// Accepts `["a", "b"]` or `"a | b"`; list items may themselves be joined.
fn answers_list_or_joined<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        One(String),
        Many(Vec<String>),
    }
    Ok(match Raw::deserialize(d)? {
        Raw::One(s) => split_alternatives(&s),
        Raw::Many(v) => v.iter().flat_map(|s| split_alternatives(s)).collect(),
    })
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, EvalError> {
    let io = |source| EvalError::Io { path: path.display().to_string(), source };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let v =
            serde_json::from_str(&line).map_err(|e| EvalError::Malformed { line: i + 1, message: e.to_string() })?;
        out.push(v);
    }
    Ok(out)
}

/// Loads `queries.jsonl`. Ids must be unique.
pub fn load_benchmark(path: impl AsRef<Path>) -> Result<Vec<BenchmarkSample>, EvalError> {
    let samples: Vec<BenchmarkSample> = read_jsonl(path.as_ref())?;
    let mut seen = std::collections::HashSet::new();
    for s in &samples {
        if !seen.insert(s.id.as_str()) {
            return Err(EvalError::DuplicateId(s.id.clone()));
        }
    }
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub passage_id: String,
    pub score: f64,
    pub semantic: f64,
    pub temporal: f64,
    pub best_sentence: String,
    pub origin: SentenceOrigin,
}

/// One line of a run file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub query_id: String,
    pub ranked: Vec<RunEntry>,
    /// Generated answer, when answer generation ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<StageTrace>>,
}

impl RunRecord {
    pub fn from_output(query_id: &str, out: &PipelineOutput) -> Self {
        Self {
            query_id: query_id.to_string(),
            ranked: out
                .ranked
                .iter()
                .map(|r| RunEntry {
                    passage_id: r.passage_id.clone(),
                    score: r.score,
                    semantic: r.semantic,
                    temporal: r.temporal,
                    best_sentence: r.best_sentence.text.clone(),
                    origin: r.best_sentence.origin,
                })
                .collect(),
            answer: None,
            trace: out.trace.clone(),
        }
    }
}

pub fn load_run(path: impl AsRef<Path>) -> Result<Vec<RunRecord>, EvalError> {
    read_jsonl(path.as_ref())
}

fn validate_ks(ks: &[usize]) -> Result<Vec<usize>, EvalError> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(EvalError::InvalidK(format!("{ks:?}: need at least one k, all >= 1")));
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

fn run_index(run: &[RunRecord]) -> Result<HashMap<&str, &RunRecord>, EvalError> {
    let mut map = HashMap::new();
    for r in run {
        if map.insert(r.query_id.as_str(), r).is_some() {
            return Err(EvalError::DuplicateId(r.query_id.clone()));
        }
    }
    Ok(map)
}

/// Fraction of samples with an answer alternative contained in one of the
/// top-k passages (normalized "title text").
pub fn answer_recall_at_k(
    run: &[RunRecord],
    samples: &[BenchmarkSample],
    ks: &[usize],
    corpus: &Corpus,
) -> Result<BTreeMap<usize, f64>, EvalError> {
    let ks = validate_ks(ks)?;
    let runs = run_index(run)?;
    let mut hits = vec![0usize; ks.len()];
    for s in samples {
        let r = runs.get(s.id.as_str()).ok_or_else(|| EvalError::MissingRun(s.id.clone()))?;
        let answers: Vec<String> = s.answers.iter().map(|a| normalize_answer(a)).collect();
        let mut first_hit = None;
        for (rank, e) in r.ranked.iter().enumerate() {
            let p = corpus.get(&e.passage_id).ok_or_else(|| EvalError::UnknownPassage(e.passage_id.clone()))?;
            let text = normalize_answer(&p.indexed_text());
            if answers.iter().any(|a| contains_normalized(&text, a)) {
                first_hit = Some(rank);
                break;
            }
        }
        for (h, &k) in hits.iter_mut().zip(&ks) {
            if first_hit.is_some_and(|r| r < k) {
                *h += 1;
            }
        }
    }
    Ok(mean_per_k(&ks, &hits, samples.len()))
}

/// Fraction of samples with a gold evidence id among the top-k passages.
pub fn evidence_recall_at_k(
    run: &[RunRecord],
    samples: &[BenchmarkSample],
    ks: &[usize],
) -> Result<BTreeMap<usize, f64>, EvalError> {
    let ks = validate_ks(ks)?;
    let runs = run_index(run)?;
    let mut hits = vec![0usize; ks.len()];
    for s in samples {
        let r = runs.get(s.id.as_str()).ok_or_else(|| EvalError::MissingRun(s.id.clone()))?;
        let first_hit = r.ranked.iter().position(|e| s.gold_evidence.contains(&e.passage_id));
        for (h, &k) in hits.iter_mut().zip(&ks) {
            if first_hit.is_some_and(|r| r < k) {
                *h += 1;
            }
        }
    }
    Ok(mean_per_k(&ks, &hits, samples.len()))
}

fn mean_per_k(ks: &[usize], hits: &[usize], n: usize) -> BTreeMap<usize, f64> {
    ks.iter().zip(hits).map(|(&k, &h)| (k, if n == 0 { 0.0 } else { h as f64 / n as f64 })).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedSample {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ks: Vec<usize>,
    pub answer_recall: BTreeMap<usize, f64>,
    /// Over samples that list gold evidence; absent when none do.
    pub evidence_recall: Option<BTreeMap<usize, f64>>,
    /// Absent when the run carries no generated answers.
    pub exact_match: Option<f64>,
    pub f1: Option<f64>,
    pub samples_loaded: usize,
    pub samples_evaluated: usize,
    pub samples_skipped: usize,
    pub skipped: Vec<SkippedSample>,
    pub evidence_samples: usize,
    pub answered: usize,
    pub config: Value,
}

/// Full report. Samples without answers or with gold ids missing from the
/// corpus are skipped and itemized; unanswered samples score EM = F1 = 0.
pub fn evaluate(
    samples: &[BenchmarkSample],
    run: &[RunRecord],
    corpus: &Corpus,
    ks: &[usize],
    config: Value,
) -> Result<MetricsReport, EvalError> {
    let ks = validate_ks(ks)?;
    let mut skipped = Vec::new();
    let mut kept: Vec<BenchmarkSample> = Vec::new();
    for s in samples {
        if s.answers.is_empty() {
            skipped.push(SkippedSample { id: s.id.clone(), reason: "no answers".into() });
        } else if let Some(g) = s.gold_evidence.iter().find(|g| corpus.get(g).is_none()) {
            skipped.push(SkippedSample { id: s.id.clone(), reason: format!("gold evidence {g:?} not in corpus") });
        } else {
            kept.push(s.clone());
        }
    }
    let answer_recall = answer_recall_at_k(run, &kept, &ks, corpus)?;
    let with_gold: Vec<BenchmarkSample> = kept.iter().filter(|s| !s.gold_evidence.is_empty()).cloned().collect();
    let evidence_recall = if with_gold.is_empty() { None } else { Some(evidence_recall_at_k(run, &with_gold, &ks)?) };

    let runs = run_index(run)?;
    let has_answers = run.iter().any(|r| r.answer.is_some());
    let mut answered = 0;
    let (mut em, mut f) = (0.0, 0.0);
    for s in &kept {
        if let Some(pred) = runs.get(s.id.as_str()).and_then(|r| r.answer.as_deref()) {
            answered += 1;
            em += exact_match(pred, &s.answers);
            f += f1(pred, &s.answers);
        }
    }
    let n = kept.len().max(1) as f64;
    Ok(MetricsReport {
        ks,
        answer_recall,
        evidence_recall,
        exact_match: has_answers.then_some(em / n),
        f1: has_answers.then_some(f / n),
        samples_loaded: samples.len(),
        samples_evaluated: kept.len(),
        samples_skipped: skipped.len(),
        skipped,
        evidence_samples: with_gold.len(),
        answered,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Passage;

    fn entry(id: &str) -> RunEntry {
        RunEntry {
            passage_id: id.into(),
            score: 1.0,
            semantic: 1.0,
            temporal: 1.0,
            best_sentence: String::new(),
            origin: SentenceOrigin::OriginalSplit,
        }
    }

    #[test]
    fn answers_accept_both_shapes() {
        let a: BenchmarkSample =
            serde_json::from_str(r#"{"id":"1","question":"q","answers":"2012 | 2013 | 2012-2013"}"#).unwrap();
        assert_eq!(a.answers, vec!["2012", "2013", "2012-2013"]);
        let b: BenchmarkSample = serde_json::from_str(
            r#"{"id":"1","question":"q","answers":["1 | one", "uno"],"source":"timeqa","perturbed":true}"#,
        )
        .unwrap();
        assert_eq!(b.answers, vec!["1", "one", "uno"]);
        assert_eq!(b.source, Source::Timeqa);
    }

    #[test]
    fn recall_is_monotone_and_errors_on_missing_run() {
        let corpus = Corpus::from_passages(vec![
            Passage::new("x", "", "nothing here"),
            Passage::new("y", "", "Kyla Coleman won"),
        ])
        .unwrap();
        let s = BenchmarkSample {
            id: "q".into(),
            question: "?".into(),
            answers: vec!["Kyla Coleman".into()],
            gold_evidence: vec!["y".into()],
            source: Source::Other,
            perturbed: false,
        };
        let run =
            vec![RunRecord { query_id: "q".into(), ranked: vec![entry("x"), entry("y")], answer: None, trace: None }];
        let ar = answer_recall_at_k(&run, std::slice::from_ref(&s), &[1, 2], &corpus).unwrap();
        assert_eq!(ar[&1], 0.0);
        assert_eq!(ar[&2], 1.0);
        let er = evidence_recall_at_k(&run, std::slice::from_ref(&s), &[1, 2]).unwrap();
        assert_eq!((er[&1], er[&2]), (0.0, 1.0));
        assert!(matches!(answer_recall_at_k(&[], &[s], &[1], &corpus), Err(EvalError::MissingRun(_))));
    }
}
