use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{sample_non_edges, Edge, EdgeSplit, GraphDataset};
use crate::linkpred::auc::auc;
use crate::linkpred::loss::{total_loss, LossWeights, PairBatch};
use crate::linkpred::model::LpModel;
use crate::nn::{adam_step, AdamConfig, AdamState, DenseMatrix, NormalizationMode, SparsePropagator};
use crate::rng::{rng_for, tag, Rng};
use crate::scalar::Scalar;
use crate::structure::CausalStructure;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkPredConfig {
    pub hidden: usize,
    pub dim: usize,
    /// Epochs per training phase (pre-training and each iteration).
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub patience: usize,
}

impl Default for LinkPredConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            dim: 16,
            epochs: 2000,
            lr: 1e-5,
            weight_decay: 1e-4,
            patience: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledPairs {
    pub pairs: Vec<Edge>,
    pub labels: Vec<bool>,
}

impl LabeledPairs {
    pub fn new(pos: &[Edge], neg: &[Edge]) -> Self {
        Self {
            pairs: pos.iter().chain(neg).copied().collect(),
            labels: pos.iter().map(|_| true).chain(neg.iter().map(|_| false)).collect(),
        }
    }
}

/// Everything the trainer needs from a split.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkData {
    pub n_nodes: usize,
    pub train_pos: Vec<Edge>,
    /// Adjacency that resampled training negatives must avoid.
    pub train_adj: HashSet<Edge>,
    pub val: LabeledPairs,
    pub test: LabeledPairs,
}

impl LinkData {
    pub fn from_split<T: Scalar>(ds: &GraphDataset<T>, split: &EdgeSplit) -> Self {
        let train_pos = split.train_edges(ds);
        Self {
            n_nodes: ds.n_nodes(),
            train_adj: train_pos.iter().copied().collect(),
            val: LabeledPairs::new(&EdgeSplit::pairs(ds, &split.val_pos), &split.val_neg),
            test: LabeledPairs::new(&EdgeSplit::pairs(ds, &split.test_pos), &split.test_neg),
            train_pos,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpEpoch {
    pub phase: usize,
    pub epoch: usize,
    pub loss: f64,
    pub recon_graph: f64,
    pub recon_causal: f64,
    pub consistency: f64,
    pub val_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseOutcome {
    pub phase: usize,
    pub best_val_auc: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub curve: Vec<LpEpoch>,
}

pub fn init_linkpred<T: Scalar>(d_in: usize, cfg: &LinkPredConfig, seed: u64) -> LpModel<T> {
    LpModel::glorot(d_in, cfg.hidden, cfg.dim, &mut rng_for(seed, tag::LINKPRED_INIT))
}

/// AUC of the model's logits on labeled pairs under one graph view.
pub fn evaluate<T: Scalar>(
    model: &LpModel<T>,
    prop: &SparsePropagator<T>,
    x: &DenseMatrix<T>,
    data: &LabeledPairs,
) -> Result<f64> {
    let logits = model.score(prop, x, &data.pairs)?;
    let scores: Vec<f64> = logits.iter().map(|v| v.as_f64()).collect();
    auc(&scores, &data.labels)
}

/// One optimization phase with fresh Adam moments. Validation AUC is read
/// from the causal-view encodings of each epoch before its update; the
/// parameters with the best validation AUC are restored on exit.
#[allow(clippy::too_many_arguments)]
pub fn train_phase<T: Scalar>(
    model: &mut LpModel<T>,
    x: &DenseMatrix<T>,
    graph_prop: &SparsePropagator<T>,
    causal_prop: &SparsePropagator<T>,
    data: &LinkData,
    cfg: &LinkPredConfig,
    weights: &LossWeights,
    rng: &mut Rng,
    phase: usize,
) -> Result<PhaseOutcome> {
    if data.train_pos.is_empty() {
        return Err(Error::Empty("no training edges".into()));
    }
    let adam = AdamConfig::new(cfg.lr, cfg.weight_decay);
    let mut state = AdamState::for_params(&model.parameters());
    let mut best = (f64::NEG_INFINITY, 0usize, model.clone());
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let neg = sample_non_edges(data.n_nodes, &data.train_adj, data.train_pos.len(), rng)?;
        let batch = PairBatch::new(&data.train_pos, &neg);
        let terms = total_loss(model, graph_prop, causal_prop, x, &batch, weights)?;
        if !terms.total.is_finite() {
            return Err(Error::Diverged {
                epoch,
                detail: format!("link prediction loss {} in phase {phase}", terms.total),
            });
        }
        let val_logits = model.decode_pairs(&terms.z_causal, &data.val.pairs)?;
        let val_scores: Vec<f64> = val_logits.iter().map(|v| v.as_f64()).collect();
        let val_auc = auc(&val_scores, &data.val.labels)?;
        curve.push(LpEpoch {
            phase,
            epoch,
            loss: terms.total.as_f64(),
            recon_graph: terms.recon_graph.as_f64(),
            recon_causal: terms.recon_causal.as_f64(),
            consistency: terms.consistency.as_f64(),
            val_auc,
        });
        if val_auc > best.0 {
            best = (val_auc, epoch, model.clone());
        }
        adam_step(&mut model.parameters_mut(), &terms.grads.flat(), &mut state, &adam)?;
        if epoch - best.1 >= cfg.patience {
            break;
        }
    }
    let epochs_run = curve.len();
    let (best_val_auc, best_epoch, best_model) = best;
    if epochs_run > 0 {
        *model = best_model;
    }
    Ok(PhaseOutcome {
        phase,
        best_val_auc,
        best_epoch,
        epochs_run,
        curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkPredMetrics {
    pub val_auc: f64,
    pub test_auc: f64,
    pub epochs_run: usize,
    pub seed: u64,
    pub curve: Vec<LpEpoch>,
}

/// Trains a fresh predictor on the training graph and the given structure,
/// then scores the test pairs under the structure's view.
pub fn train_linkpred<T: Scalar>(
    ds: &GraphDataset<T>,
    structure: &CausalStructure,
    split: &EdgeSplit,
    cfg: &LinkPredConfig,
    weights: &LossWeights,
    seed: u64,
) -> Result<(LpModel<T>, LinkPredMetrics)> {
    let data = LinkData::from_split(ds, split);
    let graph_prop = CausalStructure::from_edges(ds.n_nodes(), data.train_pos.iter().copied())?
        .to_propagator(NormalizationMode::Symmetric)?;
    let causal_prop = structure.propagator()?;
    let mut model = init_linkpred(ds.n_features(), cfg, seed);
    let mut rng = rng_for(seed, tag::LINKPRED_NEGATIVES);
    let out = train_phase(
        &mut model,
        ds.features(),
        &graph_prop,
        &causal_prop,
        &data,
        cfg,
        weights,
        &mut rng,
        0,
    )?;
    let test_auc = evaluate(&model, &causal_prop, ds.features(), &data.test)?;
    Ok((
        model,
        LinkPredMetrics {
            val_auc: out.best_val_auc,
            test_auc,
            epochs_run: out.epochs_run,
            seed,
            curve: out.curve,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{split_edges, SplitRatios};
    use crate::structure::init_structure;

    /// Two 8-cliques with distinct features and no edges between them.
    fn cliques() -> GraphDataset<f64> {
        let x = DenseMatrix::from_fn(16, 4, |r, c| {
            let side = r / 8;
            if c == side {
                1.0
            } else {
                ((r * 3 + c) % 5) as f64 * 0.05
            }
        });
        let mut edges = Vec::new();
        for base in [0, 8] {
            for u in base..base + 8 {
                for v in u + 1..base + 8 {
                    edges.push((u, v));
                }
            }
        }
        GraphDataset::new("cliques", x, edges, None, None).unwrap()
    }

    fn fast() -> LinkPredConfig {
        LinkPredConfig {
            hidden: 8,
            dim: 4,
            epochs: 300,
            lr: 1e-2,
            weight_decay: 0.0,
            patience: 300,
        }
    }

    #[test]
    fn separable_cliques_are_predicted() {
        let ds = cliques();
        let split = split_edges(&ds, SplitRatios::default(), 1).unwrap();
        // every negative crosses between the cliques
        for &(u, v) in split.test_neg.iter().chain(&split.val_neg) {
            if (u < 8) == (v < 8) {
                // not possible: both cliques are complete
                panic!("within-clique non-edge {u} {v}");
            }
        }
        let s = init_structure(&split.train_graph(&ds).unwrap());
        let (_, m) = train_linkpred(&ds, &s, &split, &fast(), &LossWeights::default(), 4).unwrap();
        assert!(m.test_auc >= 0.95, "test AUC {}", m.test_auc);
    }

    #[test]
    fn smoke_loss_decreases_and_is_deterministic() {
        let x = DenseMatrix::from_fn(8, 3, |r, c| ((r + c) % 3) as f64);
        let edges: Vec<_> = (0..7).map(|i| (i, i + 1)).chain([(0, 4), (2, 6), (1, 5)]).collect();
        let ds = GraphDataset::new("toy", x, edges, None, None).unwrap();
        assert_eq!(ds.edges().len(), 10);
        let split = split_edges(&ds, SplitRatios { train: 0.6, val: 0.2, test: 0.2 }, 0).unwrap();
        let s = init_structure(&split.train_graph(&ds).unwrap());
        let cfg = LinkPredConfig { epochs: 50, patience: 50, ..fast() };
        let (_, a) = train_linkpred(&ds, &s, &split, &cfg, &LossWeights::default(), 2).unwrap();
        let (_, b) = train_linkpred(&ds, &s, &split, &cfg, &LossWeights::default(), 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.epochs_run, 50);
        // negatives are resampled every epoch, so compare windows
        let mean = |c: &[LpEpoch]| c.iter().map(|e| e.loss).sum::<f64>() / c.len() as f64;
        let (first, last) = (mean(&a.curve[..10]), mean(&a.curve[40..]));
        assert!(last < first, "{first} -> {last}");
    }

    #[test]
    fn patience_stops_early() {
        let ds = cliques();
        let split = split_edges(&ds, SplitRatios::default(), 1).unwrap();
        let s = init_structure(&split.train_graph(&ds).unwrap());
        let cfg = LinkPredConfig { epochs: 500, patience: 5, lr: 0.0, ..fast() };
        let (_, m) = train_linkpred(&ds, &s, &split, &cfg, &LossWeights::default(), 4).unwrap();
        // with a frozen model validation never improves after epoch 0
        assert_eq!(m.epochs_run, 6);
    }
}
