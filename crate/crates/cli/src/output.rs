//! Response documents and text tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use shapedl::approx::{Breakdown, MatchResult};
use shapedl::index::{Classification, NodeInfo};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryHit {
    pub image_id: String,
    pub score: f64,
    pub breakdown: Breakdown,
    /// Region index for each query component.
    pub mapping: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub results: Vec<QueryHit>,
}

pub fn query_response(results: &[(String, MatchResult)]) -> QueryResponse {
    QueryResponse {
        results: results
            .iter()
            .map(|(id, r)| QueryHit {
                image_id: id.clone(),
                score: r.score,
                breakdown: r.breakdown,
                mapping: r.mapping.clone(),
            })
            .collect(),
    }
}

pub fn results_table(resp: &QueryResponse) -> String {
    let iw = resp
        .results
        .iter()
        .map(|h| h.image_id.len())
        .chain(["image".len()])
        .max()
        .unwrap_or(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4}  {:<iw$}  {:>6}  {:>7}  {:>6}  {:>6}  {:>8}  {:>6}  {:>7}  mapping",
        "rank", "image", "score", "spatial", "shape", "color", "rotation", "scale", "texture"
    );
    for (i, h) in resp.results.iter().enumerate() {
        let b = h.breakdown.as_array();
        let mapping: Vec<String> = h.mapping.iter().map(usize::to_string).collect();
        let _ = writeln!(
            out,
            "{:>4}  {:<iw$}  {:>6.4}  {:>7.4}  {:>6.4}  {:>6.4}  {:>8.4}  {:>6.4}  {:>7.4}  {}",
            i + 1,
            h.image_id,
            h.score,
            b[0],
            b[1],
            b[2],
            b[3],
            b[4],
            b[5],
            mapping.join(",")
        );
    }
    out
}

pub fn classification_text(c: &Classification) -> String {
    let mut out = String::new();
    if let Some(e) = &c.equivalent {
        let _ = writeln!(out, "equivalent: {e}");
    }
    let _ = writeln!(out, "parents: {}", c.parents.join(", "));
    let _ = writeln!(out, "children: {}", c.children.join(", "));
    out
}

pub fn hierarchy_text(nodes: &[NodeInfo]) -> String {
    let mut out = String::new();
    for n in nodes {
        let _ = write!(out, "{}", n.id);
        if !n.aliases.is_empty() {
            let _ = write!(out, " (aliases: {})", n.aliases.join(", "));
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "  parents: {}", n.parents.join(", "));
        let _ = writeln!(out, "  children: {}", n.children.join(", "));
        let _ = writeln!(out, "  images: {}", n.images.join(", "));
    }
    out
}
