use crate::error::{Error, Result};
use crate::graph::Edge;

/// Fraction of edges whose endpoints share a label.
pub fn homophily_ratio(edges: &[Edge], labels: &[usize]) -> Result<f64> {
    if edges.is_empty() {
        return Err(Error::Empty("homophily ratio of an empty edge set".into()));
    }
    let mut same = 0usize;
    for &e in edges {
        if edge_is_homophilic(e, labels)? {
            same += 1;
        }
    }
    Ok(same as f64 / edges.len() as f64)
}

pub fn edge_is_homophilic((u, v): Edge, labels: &[usize]) -> Result<bool> {
    match (labels.get(u), labels.get(v)) {
        (Some(a), Some(b)) => Ok(a == b),
        _ => Err(Error::MissingLabels(format!(
            "edge ({u},{v}) with {} labels",
            labels.len()
        ))),
    }
}
