//! Attributed graph data: dataset model, file I/O, edge splits, homophily
//! and a stochastic block model generator for controlled heterophily.

mod homophily;
mod io;
mod sbm;
mod split;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::DenseMatrix;
use crate::scalar::Scalar;

pub use homophily::{edge_is_homophilic, homophily_ratio};
pub use io::{load_dataset, save_dataset, Manifest};
pub use sbm::{generate_sbm, SbmParams};
pub use split::{load_split, sample_non_edges, save_split, split_edges, EdgeSplit, SplitRatios};

/// Unordered node pair stored canonically with `u < v`.
pub type Edge = (usize, usize);

pub fn canonical(u: usize, v: usize) -> Edge {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Orientation of an edge in a causal structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeStatus {
    Undirected,
    /// Messages flow from `cause` to `effect` only.
    Directed { cause: usize, effect: usize },
    /// Added by mutual information; symmetric.
    Added,
}

impl EdgeStatus {
    pub fn name(&self) -> &'static str {
        match self {
            EdgeStatus::Undirected => "undirected",
            EdgeStatus::Directed { .. } => "directed",
            EdgeStatus::Added => "added",
        }
    }
}

/// Node features, undirected edges and optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset<T = f64> {
    pub name: String,
    features: DenseMatrix<T>,
    edges: Vec<Edge>,
    labels: Option<Vec<usize>>,
    n_classes: Option<usize>,
}

impl<T: Scalar> GraphDataset<T> {
    /// Validates and canonicalizes. Self-loops are dropped and duplicate
    /// pairs (in either orientation) collapse to one edge; edges keep their
    /// first-seen order.
    pub fn new(
        name: impl Into<String>,
        features: DenseMatrix<T>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        labels: Option<Vec<usize>>,
        n_classes: Option<usize>,
    ) -> Result<Self> {
        let n = features.rows();
        if let Some((i, _)) = features.as_slice().iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let cols = features.cols().max(1);
            return Err(Error::NonFinite(format!(
                "feature at node {} column {}",
                i / cols,
                i % cols
            )));
        }
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        for (u, v) in edges {
            for idx in [u, v] {
                if idx >= n {
                    return Err(Error::NodeOutOfRange { index: idx, n_nodes: n });
                }
            }
            if u == v {
                continue;
            }
            let e = canonical(u, v);
            if seen.insert(e) {
                kept.push(e);
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{} labels for {n} nodes",
                    labels.len()
                )));
            }
            if let Some(c) = n_classes {
                if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
                    return Err(Error::DimensionMismatch(format!(
                        "label {bad} outside [0, {c})"
                    )));
                }
            }
        }
        let n_classes = match (&labels, n_classes) {
            (Some(l), None) => Some(l.iter().max().map_or(0, |m| m + 1)),
            (_, c) => c,
        };
        Ok(Self {
            name: name.into(),
            features,
            edges: kept,
            labels,
            n_classes,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> Option<usize> {
        self.n_classes
    }

    pub fn features(&self) -> &DenseMatrix<T> {
        &self.features
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn edge_set(&self) -> HashSet<Edge> {
        self.edges.iter().copied().collect()
    }

    /// Same nodes, features and labels with a different edge list.
    pub fn with_edges(&self, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.features.clone(),
            edges,
            self.labels.clone(),
            self.n_classes,
        )
    }

    pub fn with_features(&self, features: DenseMatrix<T>) -> Result<Self> {
        if features.rows() != self.n_nodes() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows for {} nodes",
                features.rows(),
                self.n_nodes()
            )));
        }
        Self::new(
            self.name.clone(),
            features,
            self.edges.iter().copied(),
            self.labels.clone(),
            self.n_classes,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalizes_and_drops_loops_and_duplicates() {
        let x = DenseMatrix::<f64>::zeros(3, 1);
        let g = GraphDataset::new("t", x, [(1, 0), (0, 1), (2, 2), (2, 1)], None, None).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn rejects_out_of_range_and_non_finite() {
        let x = DenseMatrix::<f64>::zeros(10, 2);
        let err = GraphDataset::new("t", x, [(0, 999)], None, None).unwrap_err();
        assert!(matches!(err, Error::NodeOutOfRange { index: 999, n_nodes: 10 }));

        let mut x = DenseMatrix::<f64>::zeros(2, 2);
        x[(1, 0)] = f64::NAN;
        assert!(matches!(
            GraphDataset::new("t", x, [(0, 1)], None, None),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn infers_class_count_from_labels() {
        let x = DenseMatrix::<f64>::zeros(3, 1);
        let g = GraphDataset::new("t", x, [], Some(vec![0, 2, 1]), None).unwrap();
        assert_eq!(g.n_classes(), Some(3));
    }
}
