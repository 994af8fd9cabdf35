//! Intervention-based causal structure learning for heterophilic graphs.
//!
//! A frozen self-supervised embedding network observes the graph under
//! repeated noise interventions on a few center nodes. For every edge at a
//! center, the asymmetry of the two conditional entropies of the endpoints'
//! embedding coordinates decides whether the edge keeps only its
//! cause→effect message; high mutual information between two neighbors of a
//! center adds the closing edge. A link predictor is trained jointly on the
//! original graph and the learned structure.
//!
//! The numerical core is generic over the scalar type; the aliases below fix
//! it to `f64`.

// negated comparisons below deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dependency;
pub mod embedding;
pub mod error;
pub mod graph;
pub mod intervention;
pub mod linkpred;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod structure;

pub use error::{Error, Result};
pub use graph::{canonical, Edge, EdgeStatus};
pub use pipeline::{run_causalmp, RunConfig, RunReport};
pub use scalar::Scalar;
pub use structure::{init_structure, CausalStructure};

pub type Matrix = nn::DenseMatrix<f64>;
pub type Propagator = nn::SparsePropagator<f64>;
pub type Dataset = graph::GraphDataset<f64>;
pub type Embedding = embedding::EmbeddingModel<f64>;
pub type LinkPredictor = linkpred::LpModel<f64>;
pub type Batch = intervention::InterventionBatch<f64>;
pub type Score = dependency::DependencyScore<f64>;
