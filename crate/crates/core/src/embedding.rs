//! Self-supervised node embedding network used as the measurement device
//! for interventions. Two augmented views are encoded by a shared two-layer
//! GCN and trained with a canonical-correlation objective: column
//! standardized embeddings should agree across views (invariance) while
//! each view's columns stay decorrelated.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphDataset;
use crate::nn::{
    adam_step, normalize_adjacency, params_io, AdamConfig, AdamState, DenseMatrix, Gcn,
    LayerParams, NormalizationMode, SparsePropagator,
};
use crate::rng::{rng_for, tag};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub hidden: usize,
    pub dim: usize,
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub edge_drop: f64,
    pub feature_mask: f64,
    pub lambda_cca: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            dim: 16,
            epochs: 1000,
            lr: 1e-4,
            weight_decay: 1e-4,
            edge_drop: 0.2,
            feature_mask: 0.2,
            lambda_cca: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel<T> {
    gcn: Gcn<T>,
    pub config: EmbeddingConfig,
}

/// One row of the training curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingEpoch {
    pub epoch: usize,
    pub loss: f64,
    pub invariance: f64,
    pub decorrelation: f64,
}

impl<T: Scalar> EmbeddingModel<T> {
    pub fn init(d_in: usize, config: &EmbeddingConfig, seed: u64) -> Self {
        let mut rng = rng_for(seed, tag::EMBEDDING_INIT);
        Self {
            gcn: Gcn::glorot(d_in, config.hidden, config.dim, &mut rng),
            config: *config,
        }
    }

    pub fn gcn(&self) -> &Gcn<T> {
        &self.gcn
    }

    pub fn embed(&self, prop: &SparsePropagator<T>, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.gcn.predict(prop, x)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let [l1, l2] = self.gcn.layers();
        let b1 = DenseMatrix::from_vec(1, l1.bias.len(), l1.bias.clone())?;
        let b2 = DenseMatrix::from_vec(1, l2.bias.len(), l2.bias.clone())?;
        params_io::write_params(&mut BufWriter::new(file), &[&l1.weight, &b1, &l2.weight, &b2])
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, config: &EmbeddingConfig) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let gcn = gcn_from_tensors(params_io::read_params(&mut BufReader::new(file))?)?;
        Ok(Self {
            gcn,
            config: *config,
        })
    }
}

/// Rebuilds a two-layer network from `[W1, b1, W2, b2]`.
pub(crate) fn gcn_from_tensors<T: Scalar>(tensors: Vec<DenseMatrix<T>>) -> Result<Gcn<T>> {
    let [w1, b1, w2, b2]: [DenseMatrix<T>; 4] = tensors
        .try_into()
        .map_err(|v: Vec<_>| Error::BadParamFile(format!("expected 4 tensors, found {}", v.len())))?;
    Gcn::new(
        LayerParams::new(w1, b1.into_vec())?,
        LayerParams::new(w2, b2.into_vec())?,
    )
}

/// Independently drops each undirected edge with probability `edge_drop`
/// and zeroes each feature column with probability `feature_mask`.
pub fn augment_view<T: Scalar, R: Rng + ?Sized>(
    graph: &GraphDataset<T>,
    edge_drop: f64,
    feature_mask: f64,
    rng: &mut R,
) -> Result<GraphDataset<T>> {
    for rate in [edge_drop, feature_mask] {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!("augmentation rate {rate} outside [0, 1)")));
        }
    }
    let kept: Vec<_> = graph
        .edges()
        .iter()
        .copied()
        .filter(|_| rng.random::<f64>() >= edge_drop)
        .collect();
    let masked: Vec<bool> = (0..graph.n_features())
        .map(|_| rng.random::<f64>() < feature_mask)
        .collect();
    let mut x = graph.features().clone();
    if masked.iter().any(|&m| m) {
        for r in 0..x.rows() {
            for (v, &m) in x.row_mut(r).iter_mut().zip(&masked) {
                if m {
                    *v = T::zero();
                }
            }
        }
    }
    graph.with_edges(kept)?.with_features(x)
}

/// Value and gradients of the correlation objective.
#[derive(Debug, Clone)]
pub struct CcaLoss<T> {
    pub loss: T,
    pub invariance: T,
    pub decorrelation: T,
    pub grad1: DenseMatrix<T>,
    pub grad2: DenseMatrix<T>,
}

const STD_FLOOR: f64 = 1e-8;

struct Standardized<T> {
    /// `(z − μ) / σ`.
    unit: DenseMatrix<T>,
    std: Vec<T>,
}

fn standardize<T: Scalar>(z: &DenseMatrix<T>) -> Result<Standardized<T>> {
    let n = T::of_usize(z.rows());
    let mean: Vec<T> = z.column_sums().into_iter().map(|s| s / n).collect();
    let mut var = vec![T::zero(); z.cols()];
    for r in 0..z.rows() {
        for ((v, &x), &m) in var.iter_mut().zip(z.row(r)).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let mut std = Vec::with_capacity(z.cols());
    for (c, v) in var.into_iter().enumerate() {
        let s = (v / n).sqrt();
        if !(s >= T::of(STD_FLOOR)) {
            return Err(Error::CollapsedEmbedding(c));
        }
        std.push(s);
    }
    let unit = DenseMatrix::from_fn(z.rows(), z.cols(), |r, c| (z[(r, c)] - mean[c]) / std[c]);
    Ok(Standardized { unit, std })
}

/// Backpropagates `g = dL/du` through `u = (z − μ)/σ` (population σ).
fn standardize_backward<T: Scalar>(s: &Standardized<T>, g: &DenseMatrix<T>) -> DenseMatrix<T> {
    let n = T::of_usize(g.rows());
    let cols = g.cols();
    let mut mean_g = vec![T::zero(); cols];
    let mut mean_gu = vec![T::zero(); cols];
    for r in 0..g.rows() {
        for c in 0..cols {
            mean_g[c] += g[(r, c)];
            mean_gu[c] += g[(r, c)] * s.unit[(r, c)];
        }
    }
    for c in 0..cols {
        mean_g[c] /= n;
        mean_gu[c] /= n;
    }
    DenseMatrix::from_fn(g.rows(), cols, |r, c| {
        (g[(r, c)] - mean_g[c] - s.unit[(r, c)] * mean_gu[c]) / s.std[c]
    })
}

/// `‖Z̃1 − Z̃2‖² + λ(‖Z̃1ᵀZ̃1 − I‖² + ‖Z̃2ᵀZ̃2 − I‖²)` where
/// `Z̃ = (Z − μ) / (σ√N)` column-wise, so `Z̃ᵀZ̃` is the correlation matrix.
pub fn cca_loss<T: Scalar>(z1: &DenseMatrix<T>, z2: &DenseMatrix<T>, lambda: f64) -> Result<CcaLoss<T>> {
    if z1.shape() != z2.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", z1.rows(), z1.cols()),
            actual: format!("{}x{}", z2.rows(), z2.cols()),
        });
    }
    if z1.rows() < 2 {
        return Err(Error::InvalidArgument("correlation loss needs at least 2 nodes".into()));
    }
    let lambda = T::of(lambda);
    let root_n = T::of_usize(z1.rows()).sqrt();
    let s1 = standardize(z1)?;
    let s2 = standardize(z2)?;
    let mut t1 = s1.unit.clone();
    t1.scale(T::one() / root_n);
    let mut t2 = s2.unit.clone();
    t2.scale(T::one() / root_n);

    let diff = t1.zip_map(&t2, |a, b| a - b)?;
    let invariance = diff.frobenius_sq();

    let eye = DenseMatrix::identity(z1.cols());
    let mut c1 = t1.t_matmul(&t1)?;
    let mut c2 = t2.t_matmul(&t2)?;
    c1 = c1.zip_map(&eye, |a, b| a - b)?;
    c2 = c2.zip_map(&eye, |a, b| a - b)?;
    let decorrelation = c1.frobenius_sq() + c2.frobenius_sq();

    // d/dZ̃ ‖Z̃ᵀZ̃ − I‖² = 4 Z̃ (Z̃ᵀZ̃ − I)
    let four = T::of(4.0);
    let two = T::of(2.0);
    let mut g1 = t1.matmul(&c1)?;
    g1.scale(four * lambda);
    let mut g2 = t2.matmul(&c2)?;
    g2.scale(four * lambda);
    let mut d2 = diff.clone();
    d2.scale(two);
    g1.add_assign(&d2)?;
    d2.scale(-T::one());
    g2.add_assign(&d2)?;
    // through the 1/√N scale
    g1.scale(T::one() / root_n);
    g2.scale(T::one() / root_n);

    Ok(CcaLoss {
        loss: invariance + lambda * decorrelation,
        invariance,
        decorrelation,
        grad1: standardize_backward(&s1, &g1),
        grad2: standardize_backward(&s2, &g2),
    })
}

fn symmetric_propagator<T: Scalar>(g: &GraphDataset<T>) -> Result<SparsePropagator<T>> {
    normalize_adjacency(g.n_nodes(), g.edges().iter().copied(), NormalizationMode::Symmetric)
}

/// Trains the embedding network on the graph. The input graph is not
/// modified; each epoch draws two fresh augmented views.
pub fn train_embedding<T: Scalar>(
    graph: &GraphDataset<T>,
    config: &EmbeddingConfig,
    seed: u64,
) -> Result<(EmbeddingModel<T>, Vec<EmbeddingEpoch>)> {
    if config.dim < 2 {
        return Err(Error::InvalidArgument(format!("embedding dim {} < 2", config.dim)));
    }
    let mut model = EmbeddingModel::init(graph.n_features(), config, seed);
    let mut rng = rng_for(seed, tag::EMBEDDING_AUGMENT);
    let mut state = AdamState::for_params(&model.gcn.parameters());
    let adam = AdamConfig::new(config.lr, config.weight_decay);
    let mut curve = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let v1 = augment_view(graph, config.edge_drop, config.feature_mask, &mut rng)?;
        let v2 = augment_view(graph, config.edge_drop, config.feature_mask, &mut rng)?;
        let p1 = symmetric_propagator(&v1)?;
        let p2 = symmetric_propagator(&v2)?;
        let (z1, c1) = model.gcn.forward(&p1, v1.features())?;
        let (z2, c2) = model.gcn.forward(&p2, v2.features())?;
        let loss = cca_loss(&z1, &z2, config.lambda_cca)?;
        if !loss.loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                detail: format!("embedding loss {}", loss.loss),
            });
        }
        curve.push(EmbeddingEpoch {
            epoch,
            loss: loss.loss.as_f64(),
            invariance: loss.invariance.as_f64(),
            decorrelation: loss.decorrelation.as_f64(),
        });
        let mut grads = model.gcn.backward(&p1, &c1, &loss.grad1, false)?;
        grads.add_assign(&model.gcn.backward(&p2, &c2, &loss.grad2, false)?)?;
        adam_step(&mut model.gcn.parameters_mut(), &grads.flat(), &mut state, &adam)?;
    }
    Ok((model, curve))
}

pub fn write_embedding_curve(path: &Path, curve: &[EmbeddingEpoch]) -> Result<()> {
    let mut body = String::from("epoch,loss,invariance,decorrelation\n");
    for e in curve {
        body.push_str(&format!("{},{},{},{}\n", e.epoch, e.loss, e.invariance, e.decorrelation));
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}
