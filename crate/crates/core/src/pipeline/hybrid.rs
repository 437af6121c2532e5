use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence};
use crate::providers::{ProviderError, ScoringMode, SemanticScorer};
use crate::query::DecomposedQuery;
use crate::temporal::{classify_constraint, parse_timepoints, temporal_score, SplineParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSentence {
    pub sentence: Sentence,
    /// Normalized semantic score in [0, 1].
    pub semantic: f64,
    pub temporal: f64,
    /// Always `semantic * temporal`.
    #[serde(rename = "final")]
    pub final_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPassage {
    pub passage_id: String,
    pub score: f64,
    pub semantic: f64,
    pub temporal: f64,
    pub best_sentence: Sentence,
    /// Original passage title and text, even when a summary scored best.
    pub title: String,
    pub text: String,
}

/// Maps raw scores into [0, 1].
///
/// Bi-encoder cosines are clipped at 0; cross-encoder scores are min-max
/// scaled over the candidate set (all 1 when the set is constant).
pub fn normalize_semantic(mode: ScoringMode, raw: &[f64]) -> Vec<f64> {
    match mode {
        ScoringMode::BiEncoder => raw.iter().map(|&s| s.clamp(0.0, 1.0)).collect(),
        ScoringMode::CrossEncoder => {
            let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                raw.iter().map(|&s| (s - lo) / (hi - lo)).collect()
            } else {
                vec![1.0; raw.len()]
            }
        }
    }
}

/// Passage position in the corpus, then sentence index (summaries last).
fn canonical_key(corpus: &Corpus, s: &Sentence) -> (usize, u32) {
    (corpus.position(&s.passage_id).unwrap_or(usize::MAX), s.index)
}

/// Total order used for hybrid ranking: final desc, semantic desc, then
/// canonical passage and sentence order.
pub fn hybrid_order(corpus: &Corpus, a: &ScoredSentence, b: &ScoredSentence) -> Ordering {
    b.final_score
        .total_cmp(&a.final_score)
        .then(b.semantic.total_cmp(&a.semantic))
        .then_with(|| canonical_key(corpus, &a.sentence).cmp(&canonical_key(corpus, &b.sentence)))
}

/// Scores every sentence by normalized semantic score times temporal score.
///
/// `params = None` disables temporal scoring (temporal = 1), which is the
/// semantic-only baseline. Without a constraint temporal is 1 as well.
pub fn hybrid_rank(
    sentences: &[Sentence],
    dq: &DecomposedQuery,
    scorer: &dyn SemanticScorer,
    params: Option<&SplineParams>,
    corpus: &Corpus,
) -> Result<Vec<ScoredSentence>, ProviderError> {
    if sentences.is_empty() {
        return Ok(Vec::new());
    }
    let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
    let raw = scorer.score(&dq.main_content, &texts)?;
    if raw.len() != texts.len() || raw.iter().any(|s| !s.is_finite()) {
        return Err(ProviderError::Other(format!(
            "scorer returned {} usable scores for {} sentences",
            raw.iter().filter(|s| s.is_finite()).count(),
            texts.len()
        )));
    }
    let semantic = normalize_semantic(scorer.mode(), &raw);
    let class = match (params, &dq.constraint) {
        (Some(p), Some(tc)) => Some((p, classify_constraint(tc))),
        _ => None,
    };
    let mut scored: Vec<ScoredSentence> = sentences
        .iter()
        .zip(semantic)
        .map(|(s, sem)| {
            let temporal = match &class {
                Some((p, c)) => temporal_score(c, p, &parse_timepoints(&s.text)),
                None => 1.0,
            };
            ScoredSentence { sentence: s.clone(), semantic: sem, temporal, final_score: sem * temporal }
        })
        .collect();
    scored.sort_by(|a, b| hybrid_order(corpus, a, b));
    Ok(scored)
}

/// Best sentence per passage, at most `top_out` passages, in `scored` order.
pub fn select_passages(scored: &[ScoredSentence], top_out: usize, corpus: &Corpus) -> Vec<RankedPassage> {
    let mut out: Vec<RankedPassage> = Vec::new();
    for s in scored {
        if out.len() >= top_out {
            break;
        }
        if out.iter().any(|r| r.passage_id == s.sentence.passage_id) {
            continue;
        }
        let Some(p) = corpus.get(&s.sentence.passage_id) else { continue };
        out.push(RankedPassage {
            passage_id: p.id.clone(),
            score: s.final_score,
            semantic: s.semantic,
            temporal: s.temporal,
            best_sentence: s.sentence.clone(),
            title: p.title.clone(),
            text: p.text.clone(),
        });
    }
    out
}
