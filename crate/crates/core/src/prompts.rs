//! Prompt templates with `{placeholder}` slots.
//!
//! The built-in templates live in `crates/core/prompts/` and are compiled in;
//! a directory of same-named files can override any of them.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    KeywordExtraction,
    Decomposition,
    Qfs,
    ReaderDirect,
    ReaderCot,
    ReaderRag,
    RelevanceCheck,
    IndependentReading,
    CombinedReading,
}

impl PromptKind {
    pub const ALL: [PromptKind; 9] = [
        Self::KeywordExtraction,
        Self::Decomposition,
        Self::Qfs,
        Self::ReaderDirect,
        Self::ReaderCot,
        Self::ReaderRag,
        Self::RelevanceCheck,
        Self::IndependentReading,
        Self::CombinedReading,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            Self::KeywordExtraction => "keyword_extraction.txt",
            Self::Decomposition => "decomposition.txt",
            Self::Qfs => "qfs.txt",
            Self::ReaderDirect => "reader_direct.txt",
            Self::ReaderCot => "reader_cot.txt",
            Self::ReaderRag => "reader_rag.txt",
            Self::RelevanceCheck => "relevance_check.txt",
            Self::IndependentReading => "independent_reading.txt",
            Self::CombinedReading => "combined_reading.txt",
        }
    }

    fn builtin(self) -> &'static str {
        match self {
            Self::KeywordExtraction => include_str!("../prompts/keyword_extraction.txt"),
            Self::Decomposition => include_str!("../prompts/decomposition.txt"),
            Self::Qfs => include_str!("../prompts/qfs.txt"),
            Self::ReaderDirect => include_str!("../prompts/reader_direct.txt"),
            Self::ReaderCot => include_str!("../prompts/reader_cot.txt"),
            Self::ReaderRag => include_str!("../prompts/reader_rag.txt"),
            Self::RelevanceCheck => include_str!("../prompts/relevance_check.txt"),
            Self::IndependentReading => include_str!("../prompts/independent_reading.txt"),
            Self::CombinedReading => include_str!("../prompts/combined_reading.txt"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PromptSet {
    templates: HashMap<PromptKind, String>,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PromptSet {
    pub fn builtin() -> Self {
        Self { templates: PromptKind::ALL.into_iter().map(|k| (k, k.builtin().to_string())).collect() }
    }

    /// Built-in templates, overridden by any `<kind>.txt` present in `dir`.
    pub fn from_dir(dir: impl AsRef<Path>) -> std::io::Result<Self> {
        let mut set = Self::builtin();
        for kind in PromptKind::ALL {
            let path = dir.as_ref().join(kind.file_name());
            match std::fs::read_to_string(&path) {
                Ok(text) => {
                    set.templates.insert(kind, text);
                }
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(e),
            }
        }
        Ok(set)
    }

    pub fn get(&self, kind: PromptKind) -> &str {
        &self.templates[&kind]
    }

    pub fn render(&self, kind: PromptKind, vars: &[(&str, &str)]) -> String {
        fill(self.get(kind), vars)
    }
}

/// Replaces `{name}` slots in one pass; substituted values are never rescanned.
/// Unknown slots are left as written.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                let name = &after[..close];
                match vars.iter().find(|(k, _)| *k == name) {
                    Some((_, v)) => out.push_str(v),
                    None => {
                        out.push('{');
                        out.push_str(name);
                        out.push('}');
                    }
                }
                rest = &after[close + 1..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_is_single_pass() {
        let s = fill("Q: {question} / {missing}", &[("question", "what {question}?")]);
        assert_eq!(s, "Q: what {question}? / {missing}");
    }

    #[test]
    fn builtins_have_their_slots() {
        let set = PromptSet::builtin();
        assert!(set.get(PromptKind::KeywordExtraction).contains("{normalized question}"));
        assert!(set.get(PromptKind::Qfs).contains("{title} | {text}"));
        assert!(set.get(PromptKind::ReaderRag).contains("{texts}"));
        assert!(set.get(PromptKind::CombinedReading).contains("{generations}"));
        assert!(set.get(PromptKind::IndependentReading).contains("{document}"));
        assert!(set.get(PromptKind::RelevanceCheck).contains("{context}"));
        assert!(set.get(PromptKind::Decomposition).contains("{question}"));
        assert!(set.get(PromptKind::Qfs).contains("respond with \"None\""));
    }

    #[test]
    fn directory_overrides() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("qfs.txt"), "custom {title}").unwrap();
        let set = PromptSet::from_dir(dir.path()).unwrap();
        assert_eq!(set.render(PromptKind::Qfs, &[("title", "T")]), "custom T");
        assert_eq!(set.get(PromptKind::ReaderCot), PromptKind::ReaderCot.builtin());
    }
}
