use crate::error::Result;
use crate::graph::{split_edges, GraphDataset};
use crate::linkpred::{evaluate, init_linkpred, train_phase, LinkData};
use crate::pipeline::config::RunConfig;
use crate::rng::{derive_seed, rng_for, tag};
use crate::scalar::Scalar;
use crate::structure::CausalStructure;

/// Test AUC of a freshly initialized predictor pre-trained with both graph
/// slots set to `structure`. The split is the one `cfg.seed` produces; the
/// model and negatives draw from `seed`.
pub fn retrain_on_structure<T: Scalar>(
    ds: &GraphDataset<T>,
    structure: &CausalStructure,
    cfg: &RunConfig,
    seed: u64,
) -> Result<f64> {
    cfg.validate()?;
    let split = split_edges(ds, cfg.split, cfg.seed)?;
    let data = LinkData::from_split(ds, &split);
    let prop = structure.propagator::<T>()?;
    let fresh = derive_seed(seed, tag::RETRAIN);
    let mut g = init_linkpred(ds.n_features(), &cfg.linkpred, fresh);
    let mut rng = rng_for(fresh, tag::LINKPRED_NEGATIVES);
    train_phase(&mut g, ds.features(), &prop, &prop, &data, &cfg.linkpred, &cfg.weights(), &mut rng, 0)?;
    evaluate(&g, &prop, ds.features(), &data.test)
}
