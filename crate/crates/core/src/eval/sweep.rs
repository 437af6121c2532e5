//! Temporal-score curves over a grid of document dates.

use std::io::Write;

use crate::prompts::fill;
use crate::providers::{ProviderError, SemanticScorer};
use crate::temporal::{temporal_score, ConstraintClass, SplineParams, TimePoint};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub class: ConstraintClass,
    pub date: TimePoint,
    pub temporal_score: f64,
    pub semantic: Option<f64>,
}

/// One row per grid date, in grid order.
pub fn sweep(class: &ConstraintClass, params: &SplineParams, grid: &[TimePoint]) -> Vec<SweepRow> {
    grid.iter()
        .map(|&date| SweepRow {
            class: *class,
            date,
            temporal_score: temporal_score(class, params, &[date]),
            semantic: None,
        })
        .collect()
}

/// Adds semantic scores of `query` against `doc_template` with `{date}`
/// replaced by each row's date.
pub fn add_semantic(
    rows: &mut [SweepRow],
    scorer: &dyn SemanticScorer,
    query: &str,
    doc_template: &str,
) -> Result<(), ProviderError> {
    let docs: Vec<String> = rows.iter().map(|r| fill(doc_template, &[("date", &r.date.to_string())])).collect();
    let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
    let scores = scorer.score(query, &refs)?;
    for (r, s) in rows.iter_mut().zip(scores) {
        r.semantic = Some(s);
    }
    Ok(())
}

/// CSV with header `class,anchor1,anchor2,date,temporal_score`, plus a
/// `semantic` column when any row has one.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let with_semantic = rows.iter().any(|r| r.semantic.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["class", "anchor1", "anchor2", "date", "temporal_score"];
    if with_semantic {
        header.push("semantic");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.class.kind.as_str().to_string(),
            format!("{:.4}", r.class.a1),
            r.class.a2.map(|a| format!("{a:.4}")).unwrap_or_default(),
            r.date.to_string(),
            format!("{:.6}", r.temporal_score),
        ];
        if with_semantic {
            rec.push(r.semantic.map(|s| format!("{s:.6}")).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
