use crate::corpus::{Passage, Sentence};
use crate::prompts::{PromptKind, PromptSet};
use crate::providers::Generator;

/// Reduces a raw QFS reply to summary text; `None` for "None" or empty.
pub fn parse_summary(reply: &str) -> Option<String> {
    let body = reply.split("</Summarization>").next().unwrap_or("");
    let body = body.replace("<Summarization>", "");
    let text = body.split_whitespace().collect::<Vec<_>>().join(" ");
    let bare = text.trim_end_matches('.').trim_matches('"');
    if bare.is_empty() || bare.eq_ignore_ascii_case("none") {
        None
    } else {
        Some(text)
    }
}

/// Query-focused one-sentence summary of `passage`, bound to its id.
///
/// Generator failures are logged and yield `None`; the caller continues with
/// split sentences only.
pub fn summarize_qfs(passage: &Passage, mc: &str, generator: &dyn Generator, prompts: &PromptSet) -> Option<Sentence> {
    let prompt = prompts
        .render(PromptKind::Qfs, &[("title", &passage.title), ("text", &passage.text), ("normalized question", mc)]);
    match generator.generate(&prompt) {
        Ok(reply) => parse_summary(&reply).map(|s| Sentence::summary(&passage.id, s)),
        Err(e) => {
            log::warn!("summary of {} skipped: {e}", passage.id);
            None
        }
    }
}
