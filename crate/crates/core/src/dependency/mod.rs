//! Pairwise dependency estimation on intervention embeddings: KDE grids,
//! plug-in entropies, the conditional-entropy asymmetry score, mutual
//! information and `μ + λσ` thresholds.

mod entropy;
mod kde;
mod score;

pub use entropy::{conditional_entropies, entropy, GridEntropies};
pub use kde::{kde_joint_grid, Bandwidth, JointGrid, KdeOptions};
pub use score::{
    collect_pair_samples, compute_threshold, delta_h, mutual_information, score_edges,
    score_pairs_mi, DependencyScore, MiScore, PairSamples, ThresholdStats,
};
