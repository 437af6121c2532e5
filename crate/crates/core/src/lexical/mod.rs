//! Lexical retrieval: tokenization, a BM25 inverted index, and keyword-presence ranking.

mod index;
mod keyword;

pub use index::{bm25_search, Bm25Params, IndexCacheError, InvertedIndex, Posting, INDEX_CACHE_VERSION};
pub use keyword::{keyword_coverage, keyword_rank, KeywordRankItem};

/// Lowercases and splits on every non-alphanumeric character.
///
/// ```
/// assert_eq!(mrag::lexical::tokenize("NBA Finals, 1995!"), ["nba", "finals", "1995"]);
/// ```
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}
