//! Numerical stack: dense matrices, normalized sparse propagation, the
//! two-layer aggregation network with analytic gradients, Adam and losses.

mod adam;
mod gcn;
mod loss;
mod matrix;
pub mod params_io;
mod sparse;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gcn::{Gcn, GcnCache, GcnGrads, LayerGrads, LayerParams};
pub use loss::{bce_with_logits, sigmoid, softmax_cross_entropy};
pub use matrix::DenseMatrix;
pub use sparse::{normalize_adjacency, NormalizationMode, SparsePropagator};
