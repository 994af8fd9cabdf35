use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{canonical, Edge, GraphDataset};
use crate::rng::{rng_for, tag};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.85,
            val: 0.05,
            test: 0.10,
        }
    }
}

/// Positive edges (as indices into the dataset edge list) and sampled
/// non-edges of equal count for each subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSplit {
    pub seed: u64,
    pub ratios: SplitRatios,
    pub train_pos: Vec<usize>,
    pub val_pos: Vec<usize>,
    pub test_pos: Vec<usize>,
    pub train_neg: Vec<Edge>,
    pub val_neg: Vec<Edge>,
    pub test_neg: Vec<Edge>,
}

impl EdgeSplit {
    pub fn pairs<T: Scalar>(ds: &GraphDataset<T>, idx: &[usize]) -> Vec<Edge> {
        idx.iter().map(|&i| ds.edges()[i]).collect()
    }

    pub fn train_edges<T: Scalar>(&self, ds: &GraphDataset<T>) -> Vec<Edge> {
        Self::pairs(ds, &self.train_pos)
    }

    /// The dataset restricted to training positives, used for message passing.
    pub fn train_graph<T: Scalar>(&self, ds: &GraphDataset<T>) -> Result<GraphDataset<T>> {
        ds.with_edges(self.train_edges(ds))
    }
}

/// Shuffles edges with the seed, floors the val and test shares, gives the
/// remainder to train, then samples one non-edge per positive.
pub fn split_edges<T: Scalar>(ds: &GraphDataset<T>, ratios: SplitRatios, seed: u64) -> Result<EdgeSplit> {
    let sum = ratios.train + ratios.val + ratios.test;
    if (sum - 1.0).abs() > 1e-9 || ratios.train < 0.0 || ratios.val < 0.0 || ratios.test < 0.0 {
        return Err(Error::InvalidArgument(format!("split ratios sum to {sum}")));
    }
    let m = ds.edges().len();
    if m < 10 {
        return Err(Error::Infeasible(format!("{m} edges, need at least 10")));
    }
    let n_val = (ratios.val * m as f64).floor() as usize;
    let n_test = (ratios.test * m as f64).floor() as usize;
    let n_train = m - n_val - n_test;
    if n_train == 0 || (ratios.val > 0.0 && n_val == 0) || (ratios.test > 0.0 && n_test == 0) {
        return Err(Error::Infeasible(format!(
            "{m} edges cannot populate {n_train}/{n_val}/{n_test}"
        )));
    }

    let mut rng = rng_for(seed, tag::SPLIT);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);
    let mut val_pos = order[..n_val].to_vec();
    let mut test_pos = order[n_val..n_val + n_test].to_vec();
    let mut train_pos = order[n_val + n_test..].to_vec();
    val_pos.sort_unstable();
    test_pos.sort_unstable();
    train_pos.sort_unstable();

    let mut negatives = sample_non_edges(ds.n_nodes(), &ds.edge_set(), m, &mut rng)?;
    let train_neg = negatives.split_off(n_val + n_test);
    let test_neg = negatives.split_off(n_val);
    let val_neg = negatives;

    Ok(EdgeSplit {
        seed,
        ratios,
        train_pos,
        val_pos,
        test_pos,
        train_neg,
        val_neg,
        test_neg,
    })
}

/// `count` distinct unordered non-adjacent pairs, uniformly at random.
/// Rejection sampling when the graph is sparse, enumeration otherwise.
pub fn sample_non_edges<R: Rng + ?Sized>(
    n: usize,
    edges: &HashSet<Edge>,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Edge>> {
    let capacity = n * n.saturating_sub(1) / 2;
    let available = capacity.saturating_sub(edges.len());
    if available < count {
        return Err(Error::Infeasible(format!(
            "{count} non-edges requested, {available} exist"
        )));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    if available >= 4 * count {
        let mut chosen = HashSet::with_capacity(count);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u == v {
                continue;
            }
            let e = canonical(u, v);
            if !edges.contains(&e) && chosen.insert(e) {
                out.push(e);
            }
        }
        Ok(out)
    } else {
        let mut all: Vec<Edge> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|e| !edges.contains(e))
            .collect();
        all.shuffle(rng);
        all.truncate(count);
        Ok(all)
    }
}

pub fn save_split(path: impl AsRef<Path>, split: &EdgeSplit) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, serde_json::to_string_pretty(split)? + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_split(path: impl AsRef<Path>) -> Result<EdgeSplit> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
