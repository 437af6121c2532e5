//! Reader prompts: answer generation and relevance checking.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::pipeline::parse_summary;
use crate::pipeline::RankedPassage;
use crate::prompts::{PromptKind, PromptSet};
use crate::providers::{Generator, ProviderError};
use crate::query::DecomposedQuery;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReaderTemplate {
    /// Closed-book, answer only.
    Direct,
    /// Closed-book, reasoning then answer.
    Cot,
    /// All passages concatenated into one context.
    RagConcat,
    /// Each passage summarized on its own, then one combined answer.
    SelfRag,
}

impl FromStr for ReaderTemplate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(Self::Direct),
            "cot" => Ok(Self::Cot),
            "rag_concat" => Ok(Self::RagConcat),
            "self_rag" => Ok(Self::SelfRag),
            _ => Err(format!("unknown reader template {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerResult {
    pub text: String,
    pub raw: String,
}

/// Text between `<Answer>` and `</Answer>`; either tag may be missing (the
/// prompt itself usually ends with the opening tag). Untagged replies are
/// returned whole, trimmed.
pub fn extract_answer(reply: &str) -> String {
    let after = match reply.rfind("<Answer>") {
        Some(i) => &reply[i + "<Answer>".len()..],
        None => reply,
    };
    let inner = after.split("</Answer>").next().unwrap_or(after);
    inner.trim().to_string()
}

fn passage_block(p: &RankedPassage) -> String {
    if p.title.is_empty() {
        p.text.clone()
    } else {
        format!("{} | {}", p.title, p.text)
    }
}

pub fn generate_answer(
    dq: &DecomposedQuery,
    passages: &[RankedPassage],
    generator: &dyn Generator,
    template: ReaderTemplate,
    prompts: &PromptSet,
) -> Result<AnswerResult, ProviderError> {
    let question = dq.original.as_str();
    let raw = match template {
        ReaderTemplate::Direct => {
            generator.generate(&prompts.render(PromptKind::ReaderDirect, &[("question", question)]))?
        }
        ReaderTemplate::Cot => generator.generate(&prompts.render(PromptKind::ReaderCot, &[("question", question)]))?,
        ReaderTemplate::RagConcat => {
            let texts = passages.iter().map(passage_block).collect::<Vec<_>>().join("\n\n");
            generator.generate(&prompts.render(PromptKind::ReaderRag, &[("texts", &texts), ("question", question)]))?
        }
        ReaderTemplate::SelfRag => {
            // the template appends its own "?"
            let mc = dq.main_content.trim_end_matches('?');
            let mut notes = Vec::new();
            for p in passages {
                let doc = passage_block(p);
                let reply = generator.generate(
                    &prompts.render(PromptKind::IndependentReading, &[("document", &doc), ("normalized question", mc)]),
                )?;
                if let Some(s) = parse_summary(&reply) {
                    notes.push(s);
                }
            }
            let generations = notes.join("\n\n");
            generator.generate(
                &prompts.render(PromptKind::CombinedReading, &[("generations", &generations), ("question", question)]),
            )?
        }
    };
    Ok(AnswerResult { text: extract_answer(&raw), raw })
}

/// Asks whether `context` answers `mc`; the reply must say Yes or No.
pub fn check_relevance(
    context: &str,
    mc: &str,
    generator: &dyn Generator,
    prompts: &PromptSet,
) -> Result<bool, ProviderError> {
    let reply = generator
        .generate(&prompts.render(PromptKind::RelevanceCheck, &[("context", context), ("normalized question", mc)]))?;
    let tail = match reply.rfind("<Response>") {
        Some(i) => &reply[i + "<Response>".len()..],
        None => reply.as_str(),
    };
    let word: String =
        tail.split("</Response>").next().unwrap_or("").trim().chars().take_while(|c| c.is_alphabetic()).collect();
    match word.to_lowercase().as_str() {
        "yes" => Ok(true),
        "no" => Ok(false),
        _ => Err(ProviderError::Malformed {
            endpoint: "relevance".into(),
            message: format!("expected Yes or No, got {:?}", tail.trim()),
        }),
    }
}
