use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphDataset;
use crate::nn::{adam_step, softmax_cross_entropy, AdamConfig, AdamState, DenseMatrix, Gcn, SparsePropagator};
use crate::rng::{derive_seed, rng_for, tag};
use crate::scalar::Scalar;
use crate::structure::CausalStructure;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NodeClassConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
}

impl Default for NodeClassConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            epochs: 200,
            lr: 1e-2,
            weight_decay: 5e-4,
        }
    }
}

/// `shots` training nodes per class, everything else held out.
pub fn kshot_split(labels: &[usize], n_classes: usize, shots: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if shots == 0 {
        return Err(Error::InvalidArgument("zero shots".into()));
    }
    let mut rng = rng_for(seed, tag::NODE_CLASS);
    let mut train = Vec::with_capacity(shots * n_classes);
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.len() < shots {
            return Err(Error::Infeasible(format!(
                "class {c} has {} nodes, fewer than {shots} shots",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..shots]);
    }
    train.sort_unstable();
    let test = (0..labels.len()).filter(|i| train.binary_search(i).is_err()).collect();
    Ok((train, test))
}

pub fn train_classifier<T: Scalar>(
    prop: &SparsePropagator<T>,
    x: &DenseMatrix<T>,
    labels: &[usize],
    n_classes: usize,
    train: &[usize],
    cfg: &NodeClassConfig,
    seed: u64,
) -> Result<Gcn<T>> {
    let mut rng = rng_for(derive_seed(seed, tag::NODE_CLASS), 1);
    let mut model = Gcn::glorot(x.cols(), cfg.hidden, n_classes, &mut rng);
    let adam = AdamConfig::new(cfg.lr, cfg.weight_decay);
    let mut state = AdamState::for_params(&model.parameters());
    let targets: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
    for epoch in 0..cfg.epochs {
        let (logits, cache) = model.forward(prop, x)?;
        let (loss, grad) = softmax_cross_entropy(&logits, train, &targets)?;
        if !loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                detail: format!("classifier loss {loss}"),
            });
        }
        let grads = model.backward(prop, &cache, &grad, false)?;
        adam_step(&mut model.parameters_mut(), &grads.flat(), &mut state, &adam)?;
    }
    Ok(model)
}

/// Fraction of `nodes` whose arg-max logit equals the label; ties go to the
/// lowest class index.
pub fn accuracy<T: Scalar>(logits: &DenseMatrix<T>, labels: &[usize], nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return f64::NAN;
    }
    let hits = nodes
        .iter()
        .filter(|&&i| {
            let row = logits.row(i);
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best == labels[i]
        })
        .count();
    hits as f64 / nodes.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeClassReport {
    pub shots: usize,
    pub seeds: Vec<u64>,
    /// Accuracies in percent, one per seed.
    pub original: Vec<f64>,
    pub causal: Vec<f64>,
    pub original_mean: f64,
    pub original_std: f64,
    pub causal_mean: f64,
    pub causal_std: f64,
    /// `causal_mean − original_mean`.
    pub difference: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Trains the same classifier (same split, same initialization) on each
/// structure for every seed.
pub fn eval_node_classification<T: Scalar>(
    ds: &GraphDataset<T>,
    original: &CausalStructure,
    causal: &CausalStructure,
    shots: usize,
    seeds: &[u64],
    cfg: &NodeClassConfig,
) -> Result<NodeClassReport> {
    let labels = ds.labels().ok_or_else(|| Error::MissingLabels(ds.name.clone()))?;
    let n_classes = ds.n_classes().ok_or_else(|| Error::MissingLabels(ds.name.clone()))?;
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds".into()));
    }
    for s in [original, causal] {
        if s.n_nodes() != ds.n_nodes() {
            return Err(Error::ShapeMismatch {
                expected: format!("structure over {} nodes", ds.n_nodes()),
                actual: format!("{}", s.n_nodes()),
            });
        }
    }
    let props = [original.propagator::<T>()?, causal.propagator::<T>()?];
    let mut acc = [Vec::new(), Vec::new()];
    for &seed in seeds {
        let (train, test) = kshot_split(labels, n_classes, shots, seed)?;
        for (arm, prop) in props.iter().enumerate() {
            let model = train_classifier(prop, ds.features(), labels, n_classes, &train, cfg, seed)?;
            let logits = model.predict(prop, ds.features())?;
            acc[arm].push(100.0 * accuracy(&logits, labels, &test));
        }
    }
    let [original, causal] = acc;
    let (om, os) = mean_std(&original);
    let (cm, cs) = mean_std(&causal);
    Ok(NodeClassReport {
        shots,
        seeds: seeds.to_vec(),
        original,
        causal,
        original_mean: om,
        original_std: os,
        causal_mean: cm,
        causal_std: cs,
        difference: cm - om,
    })
}
