//! Modular retrieval for time-sensitive question answering.
//!
//! Questions are split into a main content and a temporal constraint.
//! Passages are retrieved with BM25 against the main content, narrowed by
//! keyword presence and semantic similarity, then broken into sentences
//! (plus optional query-focused summaries). Each sentence is scored by the
//! product of a semantic score and a symbolic temporal score, and passages
//! are ranked by their best sentence.

pub mod corpus;
pub mod eval;
pub mod lexical;
pub mod pipeline;
pub mod prompts;
pub mod providers;
pub mod query;
pub mod temporal;

#[cfg(any(test, feature = "testkit"))]
pub mod testkit;

pub use corpus::{load_corpus, split_sentences, Corpus, Passage, Sentence, SentenceOrigin};
pub use lexical::{bm25_search, keyword_rank, tokenize, InvertedIndex};
pub use pipeline::{run_pipeline, PipelineConfig, RankedPassage, ScoredSentence};
pub use query::{decompose_llm, decompose_rule_based, extract_keywords, DecomposedQuery};
pub use temporal::{classify_constraint, parse_timepoints, temporal_score, SplineParams, TimePoint};
