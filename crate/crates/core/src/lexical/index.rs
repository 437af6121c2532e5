use std::collections::HashMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tokenize;
use crate::corpus::Corpus;

/// Bumped whenever the on-disk layout or tokenization changes.
pub const INDEX_CACHE_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"MRAGIDX\0";

#[derive(Debug, thiserror::Error)]
pub enum IndexCacheError {
    #[error("invalid BM25 parameters: {0}")]
    InvalidParams(String),
    #[error("index cache i/o: {0}")]
    Io(#[from] io::Error),
    #[error("index cache is truncated or corrupt")]
    Corrupt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<(), IndexCacheError> {
        if !(self.k1.is_finite() && self.k1 > 0.0) {
            return Err(IndexCacheError::InvalidParams(format!("k1 must be > 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(IndexCacheError::InvalidParams(format!("b must be in [0,1], got {}", self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    /// Canonical corpus position.
    pub doc: u32,
    pub tf: u32,
}

/// Term → postings, plus the length statistics BM25 needs.
///
/// Documents are identified by canonical corpus position; postings lists are
/// sorted by position.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    postings: HashMap<String, Vec<Posting>>,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    params: Bm25Params,
    fingerprint: [u8; 32],
}

impl InvertedIndex {
    /// Indexes every passage's title and text.
    pub fn build(corpus: &Corpus, params: Bm25Params) -> Result<Self, IndexCacheError> {
        params.validate()?;
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut doc_ids = Vec::with_capacity(corpus.len());
        let mut doc_lengths = Vec::with_capacity(corpus.len());
        for (pos, passage) in corpus.iter().enumerate() {
            let tokens = tokenize(&passage.indexed_text());
            let mut counts: HashMap<String, u32> = HashMap::new();
            for t in &tokens {
                *counts.entry(t.clone()).or_default() += 1;
            }
            for (term, tf) in counts {
                postings.entry(term).or_default().push(Posting { doc: pos as u32, tf });
            }
            doc_ids.push(passage.id.clone());
            doc_lengths.push(tokens.len() as u32);
        }
        let avg_doc_length = mean_length(&doc_lengths);
        Ok(Self { postings, doc_ids, doc_lengths, avg_doc_length, params, fingerprint: corpus.fingerprint() })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn doc_id(&self, position: usize) -> &str {
        &self.doc_ids[position]
    }

    pub fn doc_length(&self, position: usize) -> u32 {
        self.doc_lengths[position]
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    pub fn term_frequency(&self, term: &str, position: usize) -> u32 {
        let list = self.postings(term);
        list.binary_search_by_key(&(position as u32), |p| p.doc).map_or(0, |i| list[i].tf)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    /// Robertson–Spärck Jones IDF with the +1 smoothing that keeps it positive.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_count() as f64;
        let df = self.document_frequency(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Whether this index was built from exactly this corpus.
    pub fn matches(&self, corpus: &Corpus) -> bool {
        self.fingerprint == corpus.fingerprint()
    }

    /// Writes the binary cache atomically.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexCacheError> {
        let path = path.as_ref();
        let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(dir)?;
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        put_u32(&mut buf, INDEX_CACHE_VERSION);
        buf.extend_from_slice(&self.fingerprint);
        buf.extend_from_slice(&self.params.k1.to_le_bytes());
        buf.extend_from_slice(&self.params.b.to_le_bytes());
        put_u32(&mut buf, self.doc_ids.len() as u32);
        for (id, len) in self.doc_ids.iter().zip(&self.doc_lengths) {
            put_str(&mut buf, id);
            put_u32(&mut buf, *len);
        }
        let mut terms: Vec<&String> = self.postings.keys().collect();
        terms.sort();
        put_u32(&mut buf, terms.len() as u32);
        for term in terms {
            put_str(&mut buf, term);
            let list = &self.postings[term];
            put_u32(&mut buf, list.len() as u32);
            for p in list {
                put_u32(&mut buf, p.doc);
                put_u32(&mut buf, p.tf);
            }
        }
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(&buf)?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }

    /// Reads a cache written by [`save`](Self::save).
    ///
    /// Returns `Ok(None)` when the file is missing, was written by another
    /// format version, or was built from a different corpus or BM25 parameters;
    /// the caller should rebuild.
    pub fn load(path: impl AsRef<Path>, corpus: &Corpus, params: Bm25Params) -> Result<Option<Self>, IndexCacheError> {
        let mut bytes = Vec::new();
        match fs::File::open(path.as_ref()) {
            Ok(mut f) => {
                f.read_to_end(&mut bytes)?;
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        }
        let mut r = Reader { bytes: &bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            log::warn!("index cache has unknown magic; rebuilding");
            return Ok(None);
        }
        let version = r.u32()?;
        if version != INDEX_CACHE_VERSION {
            log::info!("index cache version {version} != {INDEX_CACHE_VERSION}; rebuilding");
            return Ok(None);
        }
        let fingerprint: [u8; 32] = r.take(32)?.try_into().map_err(|_| IndexCacheError::Corrupt)?;
        let cached = Bm25Params { k1: r.f64()?, b: r.f64()? };
        if fingerprint != corpus.fingerprint() || cached != params {
            log::info!("index cache is stale; rebuilding");
            return Ok(None);
        }
        let n = r.u32()? as usize;
        let mut doc_ids = Vec::with_capacity(n);
        let mut doc_lengths = Vec::with_capacity(n);
        for _ in 0..n {
            doc_ids.push(r.string()?);
            doc_lengths.push(r.u32()?);
        }
        let n_terms = r.u32()? as usize;
        let mut postings = HashMap::with_capacity(n_terms);
        for _ in 0..n_terms {
            let term = r.string()?;
            let len = r.u32()? as usize;
            let mut list = Vec::with_capacity(len);
            for _ in 0..len {
                let doc = r.u32()?;
                let tf = r.u32()?;
                if doc as usize >= n {
                    return Err(IndexCacheError::Corrupt);
                }
                list.push(Posting { doc, tf });
            }
            postings.insert(term, list);
        }
        if r.pos != bytes.len() {
            return Err(IndexCacheError::Corrupt);
        }
        Ok(Some(Self {
            avg_doc_length: mean_length(&doc_lengths),
            postings,
            doc_ids,
            doc_lengths,
            params,
            fingerprint,
        }))
    }

    /// Loads the cache if it is valid for `corpus`, otherwise builds and rewrites it.
    pub fn load_or_build(path: impl AsRef<Path>, corpus: &Corpus, params: Bm25Params) -> Result<Self, IndexCacheError> {
        let path = path.as_ref();
        match Self::load(path, corpus, params) {
            Ok(Some(index)) => return Ok(index),
            Ok(None) => {}
            Err(IndexCacheError::Corrupt) => log::warn!("index cache {} is corrupt; rebuilding", path.display()),
            Err(e) => return Err(e),
        }
        let index = Self::build(corpus, params)?;
        index.save(path)?;
        Ok(index)
    }
}

fn mean_length(lengths: &[u32]) -> f64 {
    if lengths.is_empty() {
        return 0.0;
    }
    lengths.iter().map(|&l| l as f64).sum::<f64>() / lengths.len() as f64
}

/// Ranks passages for `query_text` with BM25.
///
/// Each distinct query term contributes once. Only passages sharing at least
/// one term with the query are returned; ties keep canonical passage order.
pub fn bm25_search(index: &InvertedIndex, query_text: &str, k: usize) -> Vec<(String, f64)> {
    if k == 0 || index.doc_count() == 0 {
        return Vec::new();
    }
    let mut terms = tokenize(query_text);
    let mut seen = std::collections::HashSet::new();
    terms.retain(|t| seen.insert(t.clone()));

    let Bm25Params { k1, b } = index.params;
    let avgdl = index.avg_doc_length.max(f64::MIN_POSITIVE);
    let mut scores = vec![0.0f64; index.doc_count()];
    let mut touched = vec![false; index.doc_count()];
    for term in &terms {
        let list = index.postings(term);
        if list.is_empty() {
            continue;
        }
        let idf = index.idf(term);
        for p in list {
            let d = p.doc as usize;
            let tf = p.tf as f64;
            let dl = index.doc_lengths[d] as f64;
            scores[d] += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
            touched[d] = true;
        }
    }
    let mut hits: Vec<usize> = (0..scores.len()).filter(|&d| touched[d]).collect();
    hits.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    hits.truncate(k);
    hits.into_iter().map(|d| (index.doc_ids[d].clone(), scores[d])).collect()
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    put_u32(buf, s.len() as u32);
    buf.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexCacheError> {
        let end = self.pos.checked_add(n).ok_or(IndexCacheError::Corrupt)?;
        let s = self.bytes.get(self.pos..end).ok_or(IndexCacheError::Corrupt)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, IndexCacheError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, IndexCacheError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, IndexCacheError> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| IndexCacheError::Corrupt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Passage;

    fn corpus(texts: &[&str]) -> Corpus {
        Corpus::from_passages(texts.iter().enumerate().map(|(i, t)| Passage::new(format!("p{i}"), "", *t)).collect())
            .unwrap()
    }

    #[test]
    fn single_passage_statistics() {
        let idx = InvertedIndex::build(&corpus(&["a b a"]), Bm25Params::default()).unwrap();
        assert_eq!(idx.term_frequency("a", 0), 2);
        assert_eq!(idx.term_frequency("b", 0), 1);
        assert_eq!(idx.doc_length(0), 3);
        assert_eq!(idx.avg_doc_length(), 3.0);
        assert_eq!(idx.doc_count(), 1);
    }

    #[test]
    fn rebuild_is_identical() {
        let c = corpus(&["x y z", "y z", "the quick brown fox"]);
        let a = InvertedIndex::build(&c, Bm25Params::default()).unwrap();
        let b = InvertedIndex::build(&c, Bm25Params::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_text_query_ranks_first() {
        let c = corpus(&["red apples", "green pears grow", "purple plums"]);
        let idx = InvertedIndex::build(&c, Bm25Params::default()).unwrap();
        let hits = bm25_search(&idx, "green pears grow", 10);
        assert_eq!(hits[0].0, "p1");
        assert_eq!(hits.len(), 1);
    }

    #[test]
    fn no_overlap_is_empty() {
        let c = corpus(&["red apples", "green pears"]);
        let idx = InvertedIndex::build(&c, Bm25Params::default()).unwrap();
        assert!(bm25_search(&idx, "zebra", 5).is_empty());
        assert!(bm25_search(&idx, "", 5).is_empty());
    }

    #[test]
    fn ties_follow_canonical_order() {
        let c = corpus(&["same words", "other", "same words"]);
        let idx = InvertedIndex::build(&c, Bm25Params::default()).unwrap();
        let hits = bm25_search(&idx, "same", 5);
        assert_eq!(hits.iter().map(|h| h.0.as_str()).collect::<Vec<_>>(), ["p0", "p2"]);
        assert_eq!(hits[0].1, hits[1].1);
    }

    #[test]
    fn invalid_params_rejected() {
        let c = corpus(&["a"]);
        assert!(InvertedIndex::build(&c, Bm25Params { k1: 0.0, b: 0.5 }).is_err());
        assert!(InvertedIndex::build(&c, Bm25Params { k1: 1.0, b: 1.5 }).is_err());
    }

    #[test]
    fn cache_round_trip_and_invalidation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("idx.bin");
        let c = corpus(&["alpha beta", "beta gamma gamma"]);
        let built = InvertedIndex::load_or_build(&path, &c, Bm25Params::default()).unwrap();
        let loaded = InvertedIndex::load(&path, &c, Bm25Params::default()).unwrap().unwrap();
        assert_eq!(loaded.doc_count(), built.doc_count());
        assert_eq!(loaded.term_frequency("gamma", 1), 2);
        assert_eq!(bm25_search(&loaded, "gamma beta", 5), bm25_search(&built, "gamma beta", 5));

        let other = corpus(&["alpha beta", "changed"]);
        assert!(InvertedIndex::load(&path, &other, Bm25Params::default()).unwrap().is_none());
        assert!(InvertedIndex::load(&path, &c, Bm25Params { k1: 2.0, b: 0.75 }).unwrap().is_none());

        // version bump → rebuild
        let mut bytes = fs::read(&path).unwrap();
        bytes[8] = bytes[8].wrapping_add(1);
        fs::write(&path, &bytes).unwrap();
        assert!(InvertedIndex::load(&path, &c, Bm25Params::default()).unwrap().is_none());

        // truncation → corrupt, load_or_build recovers
        let good = fs::read(dir.path().join("idx.bin")).unwrap();
        fs::write(&path, &good[..good.len() - 3]).unwrap();
        let _ = InvertedIndex::load_or_build(&path, &c, Bm25Params::default()).unwrap();
        assert!(InvertedIndex::load(&path, &c, Bm25Params::default()).unwrap().is_some());
    }
}
