use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dependency::score_edges;
use crate::embedding::EmbeddingModel;
use crate::error::{Error, Result};
use crate::graph::{edge_is_homophilic, Edge, GraphDataset};
use crate::intervention::{center_count, embed_interventions, InterventionPlan};
use crate::pipeline::config::RunConfig;
use crate::rng::{derive_seed, rng_for, tag};
use crate::scalar::Scalar;
use crate::structure::init_structure;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
}

impl GroupStats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                count: 0,
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            f64::NAN
        };
        Self { count: n, mean, std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    /// Positive when the first group has the larger mean.
    pub z: f64,
    /// Two-sided normal p-value.
    pub p_value: f64,
}

/// Unequal-variance two-sample z test with a normal reference.
pub fn welch_z_test(a: &[f64], b: &[f64]) -> Option<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (sa, sb) = (GroupStats::of(a), GroupStats::of(b));
    let se = (sa.std * sa.std / a.len() as f64 + sb.std * sb.std / b.len() as f64).sqrt();
    let diff = sa.mean - sb.mean;
    if se == 0.0 {
        return Some(if diff == 0.0 {
            WelchTest { z: 0.0, p_value: 1.0 }
        } else {
            WelchTest {
                z: diff.signum() * f64::INFINITY,
                p_value: 0.0,
            }
        });
    }
    let z = diff / se;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Some(WelchTest {
        z,
        p_value: (2.0 * normal.cdf(-z.abs())).min(1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeDelta {
    pub edge: Edge,
    pub delta: f64,
    pub homophilic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudy {
    pub homophilic: GroupStats,
    pub heterophilic: GroupStats,
    /// Heterophilic against homophilic; absent when a group has fewer than
    /// two edges.
    pub welch: Option<WelchTest>,
    pub applicable: bool,
    pub edges: Vec<EdgeDelta>,
}

impl CaseStudy {
    /// Heterophilic mean above homophilic at the given level.
    pub fn separates(&self, level: f64) -> bool {
        self.welch
            .is_some_and(|w| self.heterophilic.mean > self.homophilic.mean && w.p_value < level)
    }
}

/// Scores every edge of the graph. Nodes are visited as intervention
/// centers in shuffled batches of `round(r_c·N)` until all edges carry a
/// score; each edge is scored in the first batch that touches it.
pub fn case_study<T: Scalar>(
    ds: &GraphDataset<T>,
    f: &EmbeddingModel<T>,
    cfg: &RunConfig,
    seed: u64,
) -> Result<CaseStudy> {
    let labels = ds.labels().ok_or_else(|| Error::MissingLabels(ds.name.clone()))?;
    let structure = init_structure(ds);
    let prop = structure.propagator::<T>()?;
    let opts = cfg.kde();
    let mut rng = rng_for(seed, tag::CASE_STUDY);
    let mut order: Vec<usize> = (0..ds.n_nodes()).collect();
    order.shuffle(&mut rng);
    let batch_size = center_count(ds.n_nodes(), cfg.center_ratio);

    let mut done = BTreeSet::new();
    let mut edges = Vec::with_capacity(ds.edges().len());
    for (b, chunk) in order.chunks(batch_size).enumerate() {
        let mut centers = chunk.to_vec();
        centers.sort_unstable();
        let todo: Vec<Edge> = structure
            .scored_edges(&centers)
            .into_iter()
            .filter(|e| !done.contains(e))
            .collect();
        if todo.is_empty() {
            continue;
        }
        let noise_seed = derive_seed(derive_seed(seed, tag::CASE_STUDY), b as u64);
        let plan = InterventionPlan::new(centers, cfg.repetitions, cfg.noise_sigma, noise_seed)?;
        let batch = embed_interventions(f, &prop, ds.features(), &plan)?;
        for s in score_edges(&batch, &todo, &opts)? {
            done.insert(s.edge);
            edges.push(EdgeDelta {
                edge: s.edge,
                delta: s.delta.as_f64(),
                homophilic: edge_is_homophilic(s.edge, labels)?,
            });
        }
    }
    edges.sort_by_key(|e| e.edge);

    let hom: Vec<f64> = edges.iter().filter(|e| e.homophilic).map(|e| e.delta).collect();
    let het: Vec<f64> = edges.iter().filter(|e| !e.homophilic).map(|e| e.delta).collect();
    let welch = welch_z_test(&het, &hom);
    Ok(CaseStudy {
        homophilic: GroupStats::of(&hom),
        heterophilic: GroupStats::of(&het),
        applicable: welch.is_some(),
        welch,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::EmbeddingConfig;
    use crate::nn::DenseMatrix;

    #[test]
    fn welch_by_hand() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.0, 2.5, 3.0];
        // means 2.5, 2.5 → z = 0, p = 1
        let w = welch_z_test(&a, &b).unwrap();
        assert_eq!(w.z, 0.0);
        assert!((w.p_value - 1.0).abs() < 1e-15);
        // var(a) = 5/3, var(c) = 1; se = sqrt(5/12 + 1/3) = sqrt(0.75)
        let c = [4.0, 5.0, 6.0];
        let w = welch_z_test(&c, &a).unwrap();
        let z = 2.5 / 0.75f64.sqrt();
        assert!((w.z - z).abs() < 1e-12);
        // erfc(z/√2)
        assert!((w.p_value - 0.003892417122778627).abs() < 1e-12, "{}", w.p_value);
        assert!(welch_z_test(&a, &[1.0]).is_none());
    }

    #[test]
    fn uniform_labels_are_not_applicable() {
        let x = DenseMatrix::from_fn(12, 3, |r, c| ((r * 5 + c) % 7) as f64 * 0.3);
        let edges: Vec<_> = (0..11).map(|i| (i, i + 1)).collect();
        let ds = GraphDataset::new("g", x, edges, Some(vec![0; 12]), None).unwrap();
        let f = EmbeddingModel::init(3, &EmbeddingConfig { hidden: 6, dim: 4, ..Default::default() }, 1);
        let cs = case_study(&ds, &f, &RunConfig::default(), 3).unwrap();
        assert!(!cs.applicable);
        assert_eq!(cs.heterophilic.count, 0);
        assert_eq!(cs.edges.len(), 11);
        assert!(!cs.separates(0.05));
    }

    #[test]
    fn requires_labels() {
        let x = DenseMatrix::<f64>::zeros(3, 2);
        let ds = GraphDataset::new("g", x, [(0, 1)], None, None).unwrap();
        let f = EmbeddingModel::init(2, &EmbeddingConfig { hidden: 4, dim: 2, ..Default::default() }, 1);
        assert!(matches!(case_study(&ds, &f, &RunConfig::default(), 0), Err(Error::MissingLabels(_))));
    }
}
