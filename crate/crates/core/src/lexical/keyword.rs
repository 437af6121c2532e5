use serde::{Deserialize, Serialize};

use super::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordRankItem {
    pub unit_id: String,
    /// Number of distinct keywords present in the unit.
    pub coverage: usize,
    /// Position in the preceding stage's ranking.
    pub prior_rank: usize,
}

/// Counts distinct keywords present in `tokens`.
///
/// Each keyword is tokenized; one token matches as a token, several tokens
/// must appear as a contiguous run. Keywords that tokenize to the same
/// sequence count once.
pub fn keyword_coverage(tokens: &[String], keywords: &[Vec<String>]) -> usize {
    let mut matched: Vec<&[String]> = Vec::new();
    for kw in keywords {
        if kw.is_empty() || matched.contains(&kw.as_slice()) {
            continue;
        }
        let hit =
            if kw.len() == 1 { tokens.contains(&kw[0]) } else { tokens.windows(kw.len()).any(|w| w == kw.as_slice()) };
        if hit {
            matched.push(kw);
        }
    }
    matched.len()
}

/// Keeps the `m` units with the most keyword coverage.
///
/// `items` must already be in the preceding stage's order; that order breaks
/// ties. Matching is case-insensitive and unstemmed.
pub fn keyword_rank<K: AsRef<str>>(items: &[(String, String)], keywords: &[K], m: usize) -> Vec<KeywordRankItem> {
    let keyword_tokens: Vec<Vec<String>> = keywords.iter().map(|k| tokenize(k.as_ref())).collect();
    let mut ranked: Vec<KeywordRankItem> = items
        .iter()
        .enumerate()
        .map(|(prior_rank, (id, text))| KeywordRankItem {
            unit_id: id.clone(),
            coverage: if keyword_tokens.is_empty() { 0 } else { keyword_coverage(&tokenize(text), &keyword_tokens) },
            prior_rank,
        })
        .collect();
    ranked.sort_by(|a, b| b.coverage.cmp(&a.coverage).then(a.prior_rank.cmp(&b.prior_rank)));
    ranked.truncate(m);
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(texts: &[&str]) -> Vec<(String, String)> {
        texts.iter().enumerate().map(|(i, t)| (format!("u{i}"), t.to_string())).collect()
    }

    #[test]
    fn zero_coverage_keeps_prior_order() {
        let its = items(&["a", "b", "c", "d"]);
        let out = keyword_rank(&its, &["zzz"], 3);
        assert_eq!(out.iter().map(|i| i.unit_id.as_str()).collect::<Vec<_>>(), ["u0", "u1", "u2"]);
        let out = keyword_rank(&its, &[] as &[&str], 2);
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].prior_rank, 1);
    }

    #[test]
    fn full_coverage_dominates() {
        let its = items(&["the olympics", "hosted it", "The United States hosted the Olympics in 1996"]);
        let out = keyword_rank(&its, &["United States", "hosted", "Olympics"], 3);
        assert_eq!(out[0].unit_id, "u2");
        assert_eq!(out[0].coverage, 3);
        assert_eq!(out[1].unit_id, "u0");
    }

    #[test]
    fn phrases_must_be_contiguous() {
        let kw = vec![tokenize("national anthem")];
        assert_eq!(keyword_coverage(&tokenize("the National Anthem was sung"), &kw), 1);
        assert_eq!(keyword_coverage(&tokenize("national team anthem"), &kw), 0);
        // duplicate keywords count once
        let kw = vec![tokenize("Olympics"), tokenize("olympics")];
        assert_eq!(keyword_coverage(&tokenize("olympics"), &kw), 1);
    }
}
