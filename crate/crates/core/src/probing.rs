//! Time probing: the year whose anchor has the largest raw dot product with
//! a query wins. Scores are not passed through a softmax.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{EmbeddingSet, TimeAnchorSet};
use crate::vector::dot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub id: String,
    pub y_pred: i32,
    pub score: f64,
    /// Best `top_k` years as `(year, score)`, by score descending then year
    /// ascending.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranked_years: Option<Vec<(i32, f64)>>,
}

/// Orders `(year, score)` pairs best-first; equal scores favor the earlier year.
fn better(a: &(i32, f64), b: &(i32, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

pub fn probe(query: &[f64], anchors: &TimeAnchorSet, top_k: usize) -> Result<ProbeResult> {
    probe_with_id("", query, anchors, top_k)
}

fn probe_with_id(
    id: &str,
    query: &[f64],
    anchors: &TimeAnchorSet,
    top_k: usize,
) -> Result<ProbeResult> {
    if top_k == 0 {
        return Err(Error::InvalidParameter("top_k must be at least 1".into()));
    }
    if anchors.is_empty() {
        return Err(Error::Empty("anchor set"));
    }
    if query.len() != anchors.dim() {
        return Err(Error::DimensionMismatch {
            expected: anchors.dim(),
            got: query.len(),
        });
    }
    let mut scored: Vec<(i32, f64)> = anchors
        .iter()
        .map(|(year, anchor)| (year, dot(query, anchor)))
        .collect();
    if scored.iter().any(|(_, s)| s.is_nan()) {
        return Err(Error::NonFinite { id: id.to_string() });
    }
    let k = top_k.min(scored.len());
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, better);
        scored.truncate(k);
    }
    scored.sort_by(better);
    let (y_pred, score) = scored[0];
    Ok(ProbeResult {
        id: id.to_string(),
        y_pred,
        score,
        ranked_years: Some(scored),
    })
}

/// Probes every query, returning results in query order.
pub fn probe_batch(
    queries: &EmbeddingSet,
    anchors: &TimeAnchorSet,
    top_k: usize,
) -> Result<Vec<ProbeResult>> {
    queries
        .records()
        .par_iter()
        .map(|r| probe_with_id(&r.id, &r.vec, anchors, top_k))
        .collect()
}
