//! Passage corpus: loading, validation, and sentence segmentation.
//!
//! A corpus is an ordered list of passages read from a JSONL file. The input
//! order is the canonical passage order used for every tie-break downstream.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Sentence index reserved for query-focused summaries.
pub const SUMMARY_INDEX: u32 = u32::MAX;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("failed to read corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate passage id {0:?}")]
    DuplicateId(String),
    #[error("corpus is empty")]
    Empty,
}

/// One retrieval chunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    pub title: String,
    pub text: String,
}

impl Passage {
    pub fn new(id: impl Into<String>, title: impl Into<String>, text: impl Into<String>) -> Self {
        Self { id: id.into(), title: title.into(), text: text.into() }
    }

    /// Text seen by lexical retrieval and keyword matching: title followed by body.
    pub fn indexed_text(&self) -> String {
        if self.title.is_empty() {
            self.text.clone()
        } else {
            format!("{} {}", self.title, self.text)
        }
    }

    /// `title | text`, the presentation used in prompts and semantic scoring.
    pub fn display_text(&self) -> String {
        if self.title.is_empty() {
            self.text.clone()
        } else {
            format!("{} | {}", self.title, self.text)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceOrigin {
    OriginalSplit,
    Summary,
}

/// A fine-grained ranking unit tied back to its passage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub passage_id: String,
    pub index: u32,
    pub text: String,
    pub origin: SentenceOrigin,
}

impl Sentence {
    pub fn summary(passage_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self { passage_id: passage_id.into(), index: SUMMARY_INDEX, text: text.into(), origin: SentenceOrigin::Summary }
    }

    /// Stable identifier used in traces: `<passage>#<index>` or `<passage>#summary`.
    pub fn unit_id(&self) -> String {
        match self.origin {
            SentenceOrigin::Summary => format!("{}#summary", self.passage_id),
            SentenceOrigin::OriginalSplit => format!("{}#{}", self.passage_id, self.index),
        }
    }
}

/// Immutable, ordered passage collection.
#[derive(Debug, Clone)]
pub struct Corpus {
    passages: Vec<Passage>,
    positions: HashMap<String, usize>,
}

impl Corpus {
    pub fn from_passages(passages: Vec<Passage>) -> Result<Self, CorpusError> {
        if passages.is_empty() {
            return Err(CorpusError::Empty);
        }
        let mut positions = HashMap::with_capacity(passages.len());
        for (i, p) in passages.iter().enumerate() {
            if p.id.is_empty() {
                return Err(CorpusError::Malformed { line: i + 1, message: "empty passage id".into() });
            }
            if p.text.trim().is_empty() {
                return Err(CorpusError::Malformed {
                    line: i + 1,
                    message: format!("passage {:?} has empty text", p.id),
                });
            }
            if positions.insert(p.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(p.id.clone()));
            }
        }
        Ok(Self { passages, positions })
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Passage> {
        self.positions.get(id).map(|&i| &self.passages[i])
    }

    /// Canonical position of a passage (input order).
    pub fn position(&self, id: &str) -> Option<usize> {
        self.positions.get(id).copied()
    }

    pub fn passage_at(&self, position: usize) -> &Passage {
        &self.passages[position]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Passage> {
        self.passages.iter()
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    /// SHA-256 over every passage's fields, in order. Used to validate index caches.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        for p in &self.passages {
            for field in [&p.id, &p.title, &p.text] {
                hasher.update((field.len() as u64).to_le_bytes());
                hasher.update(field.as_bytes());
            }
        }
        hasher.finalize().into()
    }
}

const KNOWN_FIELDS: [&str; 3] = ["id", "title", "text"];

/// Loads a JSONL corpus: one `{"id","title","text"}` object per line.
///
/// Blank lines are skipped. Unknown fields are ignored with a warning.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io { path: path.display().to_string(), source };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut passages = Vec::new();
    let mut positions: HashMap<String, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let passage = parse_record(&line, line_no)?;
        if positions.insert(passage.id.clone(), passages.len()).is_some() {
            return Err(CorpusError::DuplicateId(passage.id));
        }
        passages.push(passage);
    }
    if passages.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(Corpus { passages, positions })
}

fn parse_record(line: &str, line_no: usize) -> Result<Passage, CorpusError> {
    let malformed = |message: String| CorpusError::Malformed { line: line_no, message };
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| malformed("record is not a JSON object".into()))?;
    for key in obj.keys() {
        if !KNOWN_FIELDS.contains(&key.as_str()) {
            log::warn!("corpus line {line_no}: ignoring unknown field {key:?}");
        }
    }
    let field = |name: &str| -> Result<String, CorpusError> {
        match obj.get(name) {
            Some(serde_json::Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(malformed(format!("field {name:?} is not a string"))),
            None => Err(malformed(format!("missing field {name:?}"))),
        }
    };
    let passage = Passage { id: field("id")?, title: field("title")?, text: field("text")? };
    if passage.id.is_empty() {
        return Err(malformed("empty passage id".into()));
    }
    if passage.text.trim().is_empty() {
        return Err(malformed(format!("passage {:?} has empty text", passage.id)));
    }
    Ok(passage)
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "no", "vs", "etc", "inc", "ltd", "co", "corp", "gen", "col",
    "lt", "sgt", "capt", "gov", "sen", "rep", "rev", "hon", "mt", "ft", "approx", "dept", "est", "fig", "vol", "jan",
    "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "c", "ca", "cf", "al",
];

/// Splits a passage body into sentences.
///
/// A sentence ends at `.`, `!`, `?` or `…` (plus any closing quotes or brackets)
/// when followed by whitespace and then an uppercase letter, a digit, or an
/// opening quote. A period does not end a sentence after a known abbreviation,
/// a single-letter initial, or a dotted acronym such as `U.S.`.
pub fn split_sentences(passage: &Passage) -> Vec<Sentence> {
    split_text(&passage.text)
        .into_iter()
        .enumerate()
        .map(|(i, text)| Sentence {
            passage_id: passage.id.clone(),
            index: i as u32,
            text: text.to_string(),
            origin: SentenceOrigin::OriginalSplit,
        })
        .collect()
}

/// Sentence spans of `text`, trimmed. Exposed for callers that need raw strings.
pub fn split_text(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if matches!(c, '.' | '!' | '?' | '…') {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?' | '…') {
                j += 1;
            }
            let lone_period = c == '.' && j == i + 1;
            while j < chars.len() && matches!(chars[j].1, '"' | '\'' | ')' | ']' | '”' | '’') {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
            let boundary = match chars.get(j) {
                None => true,
                Some(&(_, next)) if next.is_whitespace() => {
                    chars[j..].iter().find(|&&(_, ch)| !ch.is_whitespace()).is_some_and(|&(_, ch)| starts_sentence(ch))
                }
                Some(_) => false,
            };
            if boundary && !(lone_period && is_abbreviation(&text[start..pos])) {
                let piece = text[start..end].trim();
                if !piece.is_empty() {
                    out.push(piece);
                }
                start = end;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

fn starts_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || matches!(c, '"' | '\'' | '“' | '‘' | '(' | '[')
}

/// Whether the word immediately before a period makes it a non-terminal period.
fn is_abbreviation(before: &str) -> bool {
    let word = before.rsplit(|c: char| c.is_whitespace() || c == '(' || c == '"').next().unwrap_or("");
    if word.is_empty() {
        return false;
    }
    let letters: Vec<char> = word.chars().collect();
    // single-letter initial: "H. A. Ivatt"
    if letters.len() == 1 && letters[0].is_alphabetic() && letters[0].is_uppercase() {
        return true;
    }
    // dotted acronym: "U.S", "e.g", "i.e"
    if word.contains('.') && word.split('.').all(|part| part.chars().count() <= 2 && !part.is_empty()) {
        return true;
    }
    ABBREVIATIONS.contains(&word.to_lowercase().as_str())
}
