use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Edge;
use crate::linkpred::model::{DecoderGrads, LpModel};
use crate::nn::{bce_with_logits, DenseMatrix, GcnGrads, SparsePropagator};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    /// Use `(1 − α)` on the original-graph reconstruction term.
    pub ablation: bool,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.05,
            ablation: false,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite() && self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "loss weights alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// Weights on `(L_recon(A), L_recon(A_c))`.
    pub fn recon_weights(&self) -> (f64, f64) {
        if self.ablation {
            (1.0 - self.alpha, self.alpha)
        } else {
            (1.0, self.alpha)
        }
    }
}

/// Gradients of every model parameter, ordered like
/// [`LpModel::parameters_mut`].
#[derive(Debug, Clone, PartialEq)]
pub struct LpGrads<T> {
    pub encoder: GcnGrads<T>,
    pub decoder: DecoderGrads<T>,
}

impl<T: Scalar> LpGrads<T> {
    pub fn flat(&self) -> Vec<&[T]> {
        let mut f = self.encoder.flat();
        f.push(self.decoder.hidden.weight.as_slice());
        f.push(&self.decoder.hidden.bias);
        f.push(self.decoder.out.weight.as_slice());
        f.push(&self.decoder.out.bias);
        f
    }
}

#[derive(Debug, Clone)]
pub struct LossTerms<T> {
    pub total: T,
    pub recon_graph: T,
    pub recon_causal: T,
    pub consistency: T,
    pub grads: LpGrads<T>,
    /// Encodings under the causal view, before any update.
    pub z_causal: DenseMatrix<T>,
}

/// Labeled training pairs for one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBatch<T> {
    pub pairs: Vec<Edge>,
    pub targets: Vec<T>,
}

impl<T: Scalar> PairBatch<T> {
    pub fn new(pos: &[Edge], neg: &[Edge]) -> Self {
        let pairs: Vec<Edge> = pos.iter().chain(neg).copied().collect();
        let targets = pos
            .iter()
            .map(|_| T::one())
            .chain(neg.iter().map(|_| T::zero()))
            .collect();
        Self { pairs, targets }
    }
}

/// BCE of the decoder on one view and the gradients w.r.t. decoder
/// parameters and encodings.
fn reconstruction<T: Scalar>(
    model: &LpModel<T>,
    z: &DenseMatrix<T>,
    batch: &PairBatch<T>,
) -> Result<(T, DecoderGrads<T>, DenseMatrix<T>)> {
    let (logits, cache) = model.decoder.forward(z, &batch.pairs)?;
    let (loss, d_logits) = bce_with_logits(&logits, &batch.targets)?;
    let (grads, dz) = model.decoder.backward(z, &cache, &d_logits)?;
    Ok((loss, grads, dz))
}

/// `w_A·L_recon(A) + α·L_recon(A_c) + β·MSE(EN(A_c), EN(A))` with
/// `w_A = 1`, or `1 − α` in ablation mode.
pub fn total_loss<T: Scalar>(
    model: &LpModel<T>,
    graph_prop: &SparsePropagator<T>,
    causal_prop: &SparsePropagator<T>,
    x: &DenseMatrix<T>,
    batch: &PairBatch<T>,
    weights: &LossWeights,
) -> Result<LossTerms<T>> {
    weights.validate()?;
    if batch.pairs.is_empty() {
        return Err(Error::Empty("no training pairs".into()));
    }
    if graph_prop.n_nodes() != causal_prop.n_nodes() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} nodes in both views", graph_prop.n_nodes()),
            actual: format!("{}", causal_prop.n_nodes()),
        });
    }
    let (wa, wc) = weights.recon_weights();
    let (wa, wc, beta) = (T::of(wa), T::of(wc), T::of(weights.beta));

    let (z_a, cache_a) = model.encode(graph_prop, x)?;
    let (z_c, cache_c) = model.encode(causal_prop, x)?;
    let (recon_graph, dec_a, mut dz_a) = reconstruction(model, &z_a, batch)?;
    let (recon_causal, dec_c, mut dz_c) = reconstruction(model, &z_c, batch)?;

    let diff = z_c.zip_map(&z_a, |c, a| c - a)?;
    let count = T::of_usize(diff.rows() * diff.cols());
    let consistency = diff.frobenius_sq() / count;

    dz_a.scale(wa);
    dz_c.scale(wc);
    let mut d_cons = diff;
    d_cons.scale(beta * T::of(2.0) / count);
    dz_c.add_assign(&d_cons)?;
    d_cons.scale(-T::one());
    dz_a.add_assign(&d_cons)?;

    let mut encoder = model.encoder.backward(graph_prop, &cache_a, &dz_a, false)?;
    encoder.add_assign(&model.encoder.backward(causal_prop, &cache_c, &dz_c, false)?)?;
    let mut decoder = DecoderGrads::zeros_like(&model.decoder);
    decoder.add_scaled(&dec_a, wa)?;
    decoder.add_scaled(&dec_c, wc)?;

    Ok(LossTerms {
        total: wa * recon_graph + wc * recon_causal + beta * consistency,
        recon_graph,
        recon_causal,
        consistency,
        grads: LpGrads { encoder, decoder },
        z_causal: z_c,
    })
}
