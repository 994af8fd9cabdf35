use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::DenseMatrix;
use crate::scalar::Scalar;

/// How adjacency is turned into propagation weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// `D^{-1/2}(A+I)D^{-1/2}` on the symmetrized pattern.
    Symmetric,
    /// `D_in^{-1}(A+I)`; row `i` averages over the messages node `i` receives.
    InDegree,
}

/// Normalized adjacency in row-compressed form. Row `i` lists the nodes
/// whose messages node `i` aggregates, so `(Â·X)_i = Σ_j Â_ij X_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePropagator<T> {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    weights: Vec<T>,
}

/// Builds the propagator from directed message pairs `(receiver, sender)`.
/// Self-loops in the input are ignored; every row gets exactly one.
pub fn normalize_adjacency<T: Scalar>(
    n: usize,
    messages: impl IntoIterator<Item = (usize, usize)>,
    mode: NormalizationMode,
) -> Result<SparsePropagator<T>> {
    let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (recv, send) in messages {
        if recv >= n || send >= n {
            return Err(Error::NodeOutOfRange {
                index: recv.max(send),
                n_nodes: n,
            });
        }
        if recv == send {
            continue;
        }
        rows[recv].insert(send);
        if mode == NormalizationMode::Symmetric {
            rows[send].insert(recv);
        }
    }
    for (i, row) in rows.iter_mut().enumerate() {
        row.insert(i);
    }

    let degree: Vec<T> = rows.iter().map(|r| T::of_usize(r.len())).collect();
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::new();
    let mut weights = Vec::new();
    indptr.push(0);
    for (i, row) in rows.iter().enumerate() {
        for &j in row {
            let w = match mode {
                NormalizationMode::Symmetric => T::one() / (degree[i] * degree[j]).sqrt(),
                NormalizationMode::InDegree => T::one() / degree[i],
            };
            indices.push(j);
            weights.push(w);
        }
        indptr.push(indices.len());
    }
    Ok(SparsePropagator {
        n,
        indptr,
        indices,
        weights,
    })
}

impl<T: Scalar> SparsePropagator<T> {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            weights: vec![T::one(); n],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Entries `(column, weight)` of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.weights[span].iter().copied())
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map_or(T::zero(), |(_, w)| w)
    }

    fn check_rows(&self, x: &DenseMatrix<T>) -> Result<()> {
        if x.rows() != self.n {
            return Err(Error::ShapeMismatch {
                expected: format!("{} rows", self.n),
                actual: format!("{} rows", x.rows()),
            });
        }
        Ok(())
    }

    /// `Â · x`.
    pub fn apply(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.check_rows(x)?;
        let mut out = DenseMatrix::zeros(self.n, x.cols());
        for i in 0..self.n {
            let out_row = out.row_mut(i);
            for (j, w) in self.row(i) {
                for (o, &v) in out_row.iter_mut().zip(x.row(j)) {
                    *o += w * v;
                }
            }
        }
        Ok(out)
    }

    /// `Âᵀ · x`, scattering along rows in a fixed order.
    pub fn apply_transpose(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.check_rows(x)?;
        let mut out = DenseMatrix::zeros(self.n, x.cols());
        for i in 0..self.n {
            let src = x.row(i);
            for (j, w) in self.row(i) {
                for (o, &v) in out.row_mut(j).iter_mut().zip(src) {
                    *o += w * v;
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, w) in self.row(i) {
                d[(i, j)] = w;
            }
        }
        d
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, w)| self.weight(j, i) == w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_gives_identity() {
        let p: SparsePropagator<f64> =
            normalize_adjacency(3, std::iter::empty(), NormalizationMode::Symmetric).unwrap();
        assert_eq!(p, SparsePropagator::identity(3));
    }

    #[test]
    fn single_undirected_edge_symmetric_weights() {
        // degrees with self-loop are 2 and 2: every weight is 1/sqrt(2*2)
        let p: SparsePropagator<f64> =
            normalize_adjacency(2, [(0, 1)], NormalizationMode::Symmetric).unwrap();
        let d = p.to_dense();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(d[(i, j)], 0.5);
            }
        }
        assert!(p.is_symmetric());
    }

    #[test]
    fn directed_edge_in_degree_rows() {
        // 0 -> 1: node 1 receives from 0
        let p: SparsePropagator<f64> =
            normalize_adjacency(2, [(1, 0)], NormalizationMode::InDegree).unwrap();
        assert_eq!(p.weight(1, 0), 0.5);
        assert_eq!(p.weight(1, 1), 0.5);
        assert_eq!(p.weight(0, 0), 1.0);
        assert_eq!(p.weight(0, 1), 0.0);
        assert!(!p.is_symmetric());
    }

    #[test]
    fn transpose_product_matches_dense() {
        let p: SparsePropagator<f64> = normalize_adjacency(
            4,
            [(1, 0), (2, 1), (3, 1), (0, 3)],
            NormalizationMode::InDegree,
        )
        .unwrap();
        let x = DenseMatrix::from_fn(4, 2, |r, c| (r as f64 + 1.0) * (c as f64 - 0.5));
        let dense = p.to_dense();
        assert_eq!(p.apply(&x).unwrap(), dense.matmul(&x).unwrap());
        let want = dense.t_matmul(&x).unwrap();
        let got = p.apply_transpose(&x).unwrap();
        for (a, b) in got.as_slice().iter().zip(want.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn out_of_range_message_is_rejected() {
        let r: Result<SparsePropagator<f64>> =
            normalize_adjacency(2, [(0, 5)], NormalizationMode::Symmetric);
        assert!(matches!(r, Err(Error::NodeOutOfRange { index: 5, .. })));
    }
}
