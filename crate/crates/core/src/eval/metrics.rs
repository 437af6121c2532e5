//! Answer normalization and per-sample metrics.

use std::collections::HashMap;

/// Lowercases, turns punctuation into spaces, drops articles, and collapses
/// whitespace.
pub fn normalize_answer(text: &str) -> String {
    let spaced: String =
        text.to_lowercase().chars().map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' }).collect();
    spaced.split_whitespace().filter(|w| !matches!(*w, "a" | "an" | "the")).collect::<Vec<_>>().join(" ")
}

/// Plain substring test on already-normalized strings; an empty needle
/// never matches.
pub fn contains_normalized(haystack: &str, needle: &str) -> bool {
    !needle.is_empty() && haystack.contains(needle)
}

pub fn exact_match<S: AsRef<str>>(pred: &str, answers: &[S]) -> f64 {
    let p = normalize_answer(pred);
    if answers.iter().any(|a| normalize_answer(a.as_ref()) == p) {
        1.0
    } else {
        0.0
    }
}

fn token_f1(pred: &str, gold: &str) -> f64 {
    let p: Vec<&str> = pred.split_whitespace().collect();
    let g: Vec<&str> = gold.split_whitespace().collect();
    if p.is_empty() || g.is_empty() {
        return if p == g { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &g {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &p {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / p.len() as f64;
    let recall = common as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Best token-overlap F1 over the alternatives.
pub fn f1<S: AsRef<str>>(pred: &str, answers: &[S]) -> f64 {
    let p = normalize_answer(pred);
    answers.iter().map(|a| token_f1(&p, &normalize_answer(a.as_ref()))).fold(0.0, f64::max)
}
