//! Independent reference implementations shared by the oracle tests.
#![allow(dead_code)]

use std::collections::HashSet;

use mrag::corpus::{split_sentences, Corpus, Sentence};
use mrag::lexical::Bm25Params;
use mrag::providers::{ScoringMode, SemanticScorer};
use mrag::query::DecomposedQuery;
use mrag::temporal::{classify_constraint, parse_timepoints, SplineParams};
use mrag::PipelineConfig;

/// Lowercase alphanumeric runs; written independently of the library tokenizer.
pub fn oracle_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Scores every passage from scratch and sorts by (score desc, position asc).
pub fn brute_bm25(corpus: &Corpus, query: &str, params: Bm25Params) -> Vec<(String, f64)> {
    let docs: Vec<Vec<String>> = corpus.iter().map(|p| oracle_tokens(&format!("{} {}", p.title, p.text))).collect();
    let n = docs.len() as f64;
    let avg = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let mut terms: Vec<String> = Vec::new();
    for t in oracle_tokens(query) {
        if !terms.contains(&t) {
            terms.push(t);
        }
    }
    let mut scored: Vec<(usize, f64)> = Vec::new();
    for (i, d) in docs.iter().enumerate() {
        let mut score = 0.0;
        let mut shared = false;
        for t in &terms {
            let tf = d.iter().filter(|x| *x == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            shared = true;
            let df = docs.iter().filter(|d| d.contains(t)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let norm = params.k1 * (1.0 - params.b + params.b * d.len() as f64 / avg);
            score += idf * tf * (params.k1 + 1.0) / (tf + norm);
        }
        if shared {
            scored.push((i, score));
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.into_iter().map(|(i, s)| (corpus.passage_at(i).id.clone(), s)).collect()
}

/// Distinct keywords present, phrases as contiguous token runs.
pub fn brute_coverage(text: &str, keywords: &[impl AsRef<str>]) -> usize {
    let toks = oracle_tokens(text);
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    for k in keywords {
        let kt = oracle_tokens(k.as_ref());
        if kt.is_empty() || seen.contains(&kt) {
            continue;
        }
        if toks.windows(kt.len()).any(|w| w == kt.as_slice()) {
            seen.insert(kt);
        }
    }
    seen.len()
}

/// Stable sort by coverage desc, keep the first `m`.
fn coverage_filter<T>(items: Vec<(T, String)>, keywords: &[String], m: usize) -> Vec<T> {
    let mut scored: Vec<(usize, usize, T)> =
        items.into_iter().enumerate().map(|(i, (t, text))| (brute_coverage(&text, keywords), i, t)).collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(m).map(|(_, _, t)| t).collect()
}

#[derive(Debug, Clone)]
pub struct OracleHit {
    pub passage_id: String,
    pub score: f64,
    pub semantic: f64,
    pub temporal: f64,
}

/// The whole pipeline recomputed by exhaustive scoring, without generator
/// summaries. Temporal scores take the per-date curve from the library and
/// do the max/default aggregation here.
pub fn brute_pipeline(
    corpus: &Corpus,
    dq: &DecomposedQuery,
    scorer: &dyn SemanticScorer,
    config: &PipelineConfig,
) -> Vec<OracleHit> {
    let mut retrieved = brute_bm25(corpus, &dq.main_content, Bm25Params::default());
    retrieved.truncate(config.n_retrieve);
    let items = retrieved
        .into_iter()
        .map(|(id, _)| {
            let p = corpus.get(&id).unwrap();
            (id, format!("{} {}", p.title, p.text))
        })
        .collect();
    let kept = coverage_filter(items, &dq.keywords, config.n_kw_passages);

    let mut with_sem: Vec<(String, f64)> = kept
        .into_iter()
        .map(|id| {
            let p = corpus.get(&id).unwrap();
            let s = scorer.score(&dq.main_content, &[&format!("{} {}", p.title, p.text)]).unwrap()[0];
            (id, s)
        })
        .collect();
    with_sem.sort_by(|a, b| b.1.total_cmp(&a.1));

    let sentences: Vec<Sentence> =
        with_sem.iter().flat_map(|(id, _)| split_sentences(corpus.get(id).unwrap())).collect();
    let items = sentences
        .into_iter()
        .map(|s| {
            let t = s.text.clone();
            (s, t)
        })
        .collect();
    let survivors: Vec<Sentence> = coverage_filter(items, &dq.keywords, config.n_kw_sentences);

    let raw: Vec<f64> = survivors.iter().map(|s| scorer.score(&dq.main_content, &[&s.text]).unwrap()[0]).collect();
    let sem: Vec<f64> = match scorer.mode() {
        ScoringMode::BiEncoder => raw.iter().map(|s| s.clamp(0.0, 1.0)).collect(),
        ScoringMode::CrossEncoder => {
            let lo = raw.iter().cloned().fold(f64::MAX, f64::min);
            let hi = raw.iter().cloned().fold(f64::MIN, f64::max);
            raw.iter().map(|s| if hi > lo { (s - lo) / (hi - lo) } else { 1.0 }).collect()
        }
    };
    let params: Option<&SplineParams> = config.temporal_scoring.then_some(&config.spline);
    let class = dq.constraint.as_ref().map(classify_constraint);
    let mut rows: Vec<(f64, f64, f64, usize, u32, String)> = survivors
        .iter()
        .zip(sem)
        .map(|(s, se)| {
            let te = match (params, &class) {
                (Some(p), Some(c)) => {
                    let pts = parse_timepoints(&s.text);
                    if pts.is_empty() {
                        p.delta
                    } else {
                        pts.iter().map(|t| c.score_at(p, t.to_fractional_year())).fold(f64::MIN, f64::max)
                    }
                }
                _ => 1.0,
            };
            (se * te, se, te, corpus.position(&s.passage_id).unwrap(), s.index, s.passage_id.clone())
        })
        .collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)).then(a.3.cmp(&b.3)).then(a.4.cmp(&b.4)));
    let mut out: Vec<OracleHit> = Vec::new();
    for (f, se, te, _, _, pid) in rows {
        if out.len() == config.top_out {
            break;
        }
        if out.iter().all(|h| h.passage_id != pid) {
            out.push(OracleHit { passage_id: pid, score: f, semantic: se, temporal: te });
        }
    }
    out
}
