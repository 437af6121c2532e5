//! Question decomposition into main content (MC) and temporal constraint (TC),
//! plus keyword extraction for the lexical stages.

use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::lexical::tokenize;
use crate::prompts::{PromptKind, PromptSet};
use crate::providers::Generator;
use crate::temporal::{find_dates, DateMatch, ImplicitCondition, TemporalConstraint, TemporalRelation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RuleBased,
    Generator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposedQuery {
    pub original: String,
    pub main_content: String,
    pub constraint: Option<TemporalConstraint>,
    pub keywords: Vec<String>,
    /// How MC/TC were obtained.
    pub method: Method,
    pub keyword_method: Method,
    /// Set when a generator was asked but its answer could not be used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

impl DecomposedQuery {
    pub fn used_fallback(&self) -> bool {
        self.fallback.is_some()
    }
}

// Relation markers that may directly precede a date. Longer forms first.
static MARKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)(?:^|[^\w'])(as of|prior to|up to|until|till|before|after|around|circa|by|during|in|on|since|from|between)\s+$",
    )
    .unwrap()
});
static CONDITION_WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:(the)\s+)?(first|earliest|last|latest)\b(?:\s+(time)\b)?").unwrap());

fn single_relation(marker: &str) -> TemporalRelation {
    match marker {
        "as of" => TemporalRelation::AsOf,
        "until" | "till" | "up to" => TemporalRelation::Until,
        "before" | "prior to" => TemporalRelation::Before,
        "after" => TemporalRelation::After,
        "around" | "circa" => TemporalRelation::Around,
        "by" => TemporalRelation::By,
        "in" | "during" => TemporalRelation::In,
        "on" => TemporalRelation::On,
        // a lone "from" with no closing endpoint reads as "since"
        "since" | "from" => TemporalRelation::Since,
        _ => unreachable!("marker regex admits only listed forms"),
    }
}

/// A relation marker plus its date(s), located in the text.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpan {
    pub span: Range<usize>,
    pub relation: TemporalRelation,
    pub t1: crate::temporal::TimePoint,
    pub t2: Option<crate::temporal::TimePoint>,
}

fn range_joiner(between: &str, relation_marker: &str) -> bool {
    let j = between.trim().to_lowercase();
    match relation_marker {
        "between" => j == "and",
        "from" => matches!(j.as_str(), "to" | "until" | "till" | "through" | "-" | "–" | "and"),
        _ => false,
    }
}

/// Finds the first relation marker immediately followed by a date.
pub fn find_constraint_span(text: &str) -> Option<ConstraintSpan> {
    let dates: Vec<DateMatch> = find_dates(text);
    for (i, d) in dates.iter().enumerate() {
        let prefix = &text[..d.span.start];
        let Some(caps) = MARKER.captures(prefix) else { continue };
        let m = caps.get(1).unwrap();
        let marker = m.as_str().to_lowercase();
        let start = m.start();
        if marker == "between" || marker == "from" {
            if let Some(next) = dates.get(i + 1) {
                if range_joiner(&text[d.span.end..next.span.start], &marker) {
                    let relation =
                        if marker == "between" { TemporalRelation::Between } else { TemporalRelation::FromTo };
                    if next.point.to_fractional_year() >= d.point.to_fractional_year() {
                        return Some(ConstraintSpan {
                            span: start..next.span.end,
                            relation,
                            t1: d.point,
                            t2: Some(next.point),
                        });
                    }
                    continue;
                }
            }
            if marker == "between" {
                continue;
            }
        }
        return Some(ConstraintSpan {
            span: start..d.span.end,
            relation: single_relation(&marker),
            t1: d.point,
            t2: None,
        });
    }
    None
}

/// The first condition word and the span to cut from MC ("the" and a
/// following "time" included).
fn find_condition(text: &str) -> Option<(ImplicitCondition, Range<usize>)> {
    let caps = CONDITION_WORD.captures(text)?;
    let cond = ImplicitCondition::from_word(caps.get(2).unwrap().as_str())?;
    Some((cond, caps.get(0).unwrap().range()))
}

fn is_dangling(word: &str) -> bool {
    matches!(word.to_lowercase().as_str(), "in" | "as" | "," | "")
}

/// Removes `cuts` from `text`, dropping connectives left dangling at each
/// cut and normalizing whitespace; keeps a terminal "?".
fn remove_spans(text: &str, mut cuts: Vec<Range<usize>>) -> String {
    cuts.sort_by_key(|r| r.start);
    let mut pieces: Vec<String> = Vec::new();
    let mut pos = 0;
    for cut in &cuts {
        if cut.start < pos {
            pos = pos.max(cut.end);
            continue;
        }
        let mut left = text[pos..cut.start].trim_end().to_string();
        loop {
            let trimmed = left.trim_end_matches([',', ' ']);
            let last_word_start = trimmed.rfind(' ').map(|i| i + 1).unwrap_or(0);
            let last = &trimmed[last_word_start..];
            if trimmed.len() != left.len() {
                left = trimmed.to_string();
            } else if is_dangling(last) && !trimmed.is_empty() {
                left = trimmed[..last_word_start].trim_end().to_string();
            } else {
                break;
            }
        }
        pieces.push(left);
        pos = cut.end;
    }
    let tail = text[pos..].trim_start_matches([',', ' ']);
    pieces.push(tail.to_string());
    let joined = pieces.join(" ");
    let mut out = joined.split_whitespace().collect::<Vec<_>>().join(" ");
    for p in ["?", ".", "!"] {
        out = out.replace(&format!(" {p}"), p);
    }
    let out = out.trim_end_matches([',', ' ']).to_string();
    if text.trim_end().ends_with('?') && !out.ends_with('?') {
        format!("{}?", out.trim_end_matches(['.', '!']))
    } else {
        out
    }
}

fn has_content(text: &str) -> bool {
    !tokenize(text).is_empty()
}

/// Rule-based decomposition without keywords.
fn split_question(question: &str) -> (String, Option<TemporalConstraint>) {
    let Some(cs) = find_constraint_span(question) else {
        return (question.to_string(), None);
    };
    let mut cuts = vec![cs.span.clone()];
    let mut condition = ImplicitCondition::None;
    if let Some((c, span)) = find_condition(question) {
        condition = c;
        if span.end <= cs.span.start || span.start >= cs.span.end {
            cuts.push(span);
        }
    }
    let raw = &question[cs.span.clone()];
    let Ok(tc) = TemporalConstraint::new(condition, cs.relation, cs.t1, cs.t2, raw) else {
        return (question.to_string(), None);
    };
    let mc = remove_spans(question, cuts);
    let mc = if has_content(&mc) { mc } else { question.to_string() };
    (mc, Some(tc))
}

pub fn decompose_rule_based(question: &str) -> DecomposedQuery {
    let (main_content, constraint) = split_question(question);
    let keywords = extract_keywords_rule_based(&main_content);
    DecomposedQuery {
        original: question.to_string(),
        main_content,
        constraint,
        keywords,
        method: Method::RuleBased,
        keyword_method: Method::RuleBased,
        fallback: None,
    }
}

/// Parses the "MC: …" / "TC: …" reply of the decomposition prompt.
fn parse_decomposition(question: &str, reply: &str) -> Result<(String, Option<TemporalConstraint>), String> {
    let field = |name: &str| {
        reply.lines().find_map(|l| {
            let l = l.trim();
            let (head, rest) = l.split_once(':')?;
            head.trim().eq_ignore_ascii_case(name).then(|| rest.trim().to_string())
        })
    };
    let mc = field("MC").ok_or("reply has no MC line")?;
    if !has_content(&mc) {
        return Err("MC is empty".into());
    }
    let tc = field("TC").ok_or("reply has no TC line")?;
    let tc = tc.trim_matches(|c: char| c == '"' || c == '\'' || c.is_whitespace());
    if tc.is_empty() || tc.eq_ignore_ascii_case("none") {
        return Ok((mc, None));
    }
    let lower_q = question.to_lowercase();
    let at = lower_q
        .find(&tc.to_lowercase())
        .filter(|&i| question.is_char_boundary(i) && question.is_char_boundary(i + tc.len()))
        .ok_or_else(|| format!("TC {tc:?} is not a span of the question"))?;
    let raw = &question[at..at + tc.len()];
    let cs = find_constraint_span(raw).ok_or_else(|| format!("TC {tc:?} has no relation and date"))?;
    let condition = find_condition(question).map(|(c, _)| c).unwrap_or_default();
    let tc = TemporalConstraint::new(condition, cs.relation, cs.t1, cs.t2, raw).map_err(|e| e.to_string())?;
    Ok((mc, Some(tc)))
}

/// Decomposes with a generator; any failure falls back to the rules and is
/// recorded in [`DecomposedQuery::fallback`].
pub fn decompose_llm(question: &str, generator: &dyn Generator, prompts: &PromptSet) -> DecomposedQuery {
    let prompt = prompts.render(PromptKind::Decomposition, &[("question", question)]);
    let parsed =
        generator.generate(&prompt).map_err(|e| e.to_string()).and_then(|reply| parse_decomposition(question, &reply));
    let mut dq = match parsed {
        Ok((main_content, constraint)) => DecomposedQuery {
            original: question.to_string(),
            main_content,
            constraint,
            keywords: Vec::new(),
            method: Method::Generator,
            keyword_method: Method::Generator,
            fallback: None,
        },
        Err(reason) => {
            log::warn!("decomposition fell back to rules: {reason}");
            let mut dq = decompose_rule_based(question);
            dq.fallback = Some(reason);
            return dq;
        }
    };
    match keywords_from_generator(&dq.main_content, generator, prompts) {
        Ok(k) => dq.keywords = k,
        Err(reason) => {
            log::warn!("keyword extraction fell back to rules: {reason}");
            dq.keywords = extract_keywords_rule_based(&dq.main_content);
            dq.keyword_method = Method::RuleBased;
            dq.fallback = Some(reason);
        }
    }
    dq
}

const STOPWORDS: &[&str] = &[
    // question words
    "who", "whom", "whose", "what", "which", "when", "where", "why", "how", // auxiliaries
    "is", "are", "was", "were", "be", "been", "being", "am", "do", "does", "did", "has", "have", "had", "will", "would",
    "shall", "should", "can", "could", "may", "might", "must", // articles
    "a", "an", "the", // prepositions
    "in", "on", "at", "by", "for", "from", "to", "of", "with", "about", "as", "into", "during", "before", "after",
    "since", "until", "till", "between", "through", "over", "under", "against", "among", "within", "without", "upon",
    // pronouns
    "i", "me", "my", "we", "us", "our", "you", "your", "he", "him", "his", "she", "her", "it", "its", "they", "them",
    "their", "this", "that", "these", "those", // conjunctions
    "and", "or", "but", "nor", // time words carried by the constraint, not the content
    "first", "earliest", "last", "latest", "time", "times", "year", "years", "ever",
];

const CONNECTORS: &[&str] = &["and", "of", "the", "&"];
const ADJECTIVE_SUFFIXES: &[&str] = &["al", "ic", "ary", "ive", "ous", "ian", "ese", "ish", "ern", "ful"];

fn is_stopword(w: &str) -> bool {
    STOPWORDS.contains(&w.to_lowercase().as_str())
}

fn is_capitalized(w: &str) -> bool {
    w.chars().next().is_some_and(char::is_uppercase)
}

fn is_adjectival(w: &str) -> bool {
    w.len() >= 5 && !is_capitalized(w) && ADJECTIVE_SUFFIXES.iter().any(|s| w.ends_with(s))
}

struct Word<'a> {
    text: &'a str,
    /// Punctuation followed the word, so no phrase may span past it.
    breaks_after: bool,
}

fn words(text: &str) -> Vec<Word<'_>> {
    text.split_whitespace()
        .filter_map(|raw| {
            let w = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if w.is_empty() {
                return None;
            }
            let breaks_after = !raw.ends_with(|c: char| c.is_alphanumeric());
            Some(Word { text: w, breaks_after })
        })
        .collect()
}

/// Content words of `mc`, with adjacent capitalized words (optionally joined
/// by "of"/"and"/"the") merged into names and an adjective merged with the
/// noun after it. Case-insensitive dedup, first occurrence wins.
pub fn extract_keywords_rule_based(mc: &str) -> Vec<String> {
    let ws = words(mc);
    let mut out: Vec<String> = Vec::new();
    let mut i = 0;
    while i < ws.len() {
        let w = &ws[i];
        if is_stopword(w.text) {
            i += 1;
            continue;
        }
        let mut end = i;
        if is_capitalized(w.text) {
            // extend over capitalized words, bridging connectors
            let mut j = i;
            while !ws[j].breaks_after {
                let mut k = j + 1;
                while k < ws.len() && CONNECTORS.contains(&ws[k].text.to_lowercase().as_str()) && !ws[k].breaks_after {
                    k += 1;
                }
                if k < ws.len() && is_capitalized(ws[k].text) && !is_stopword(ws[k].text) {
                    j = k;
                } else {
                    break;
                }
            }
            end = j;
        } else if is_adjectival(w.text) && !w.breaks_after {
            if let Some(next) = ws.get(i + 1) {
                if !is_stopword(next.text) && !is_capitalized(next.text) {
                    end = i + 1;
                }
            }
        }
        let phrase = ws[i..=end].iter().map(|w| w.text).collect::<Vec<_>>().join(" ");
        if !out.iter().any(|k| k.eq_ignore_ascii_case(&phrase)) {
            out.push(phrase);
        }
        i = end + 1;
    }
    out
}

/// Parses a JSON list of strings out of a generator reply.
fn parse_keyword_reply(reply: &str) -> Result<Vec<String>, String> {
    let start = reply.find('[').ok_or("reply has no list")?;
    let end = reply.rfind(']').filter(|&e| e > start).ok_or("reply has no closing bracket")?;
    let items: Vec<String> = serde_json::from_str(&reply[start..=end]).map_err(|e| format!("bad keyword list: {e}"))?;
    let mut out: Vec<String> = Vec::new();
    for k in items {
        let k = k.trim().to_string();
        if !k.is_empty() && !out.iter().any(|o| o.eq_ignore_ascii_case(&k)) {
            out.push(k);
        }
    }
    Ok(out)
}

fn keywords_from_generator(mc: &str, generator: &dyn Generator, prompts: &PromptSet) -> Result<Vec<String>, String> {
    let prompt = prompts.render(PromptKind::KeywordExtraction, &[("normalized question", mc)]);
    let reply = generator.generate(&prompt).map_err(|e| e.to_string())?;
    let kws = parse_keyword_reply(&reply)?;
    if kws.is_empty() && !extract_keywords_rule_based(mc).is_empty() {
        return Err("generator returned no keywords".into());
    }
    Ok(kws)
}

/// Keywords of `mc`: from the generator when given (rules on any failure),
/// else by rules.
pub fn extract_keywords(mc: &str, generator: Option<&dyn Generator>, prompts: &PromptSet) -> Vec<String> {
    if let Some(g) = generator {
        match keywords_from_generator(mc, g, prompts) {
            Ok(k) => return k,
            Err(reason) => log::warn!("keyword extraction fell back to rules: {reason}"),
        }
    }
    extract_keywords_rule_based(mc)
}
