//! Link predictor `g = DE(EN(·))`: one encoder applied to both the original
//! graph and the causal structure, an MLP pair decoder, and the joint
//! reconstruction plus consistency objective.

mod auc;
mod loss;
mod model;
mod train;

pub use auc::auc;
pub use loss::{total_loss, LossTerms, LossWeights, LpGrads, PairBatch};
pub use model::{Decoder, DecoderCache, DecoderGrads, LpModel};
pub use train::{
    evaluate, init_linkpred, train_linkpred, train_phase, LabeledPairs, LinkData, LinkPredConfig,
    LinkPredMetrics, LpEpoch, PhaseOutcome,
};
