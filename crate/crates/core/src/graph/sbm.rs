use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphDataset;
use crate::nn::DenseMatrix;
use crate::rng::rng_from;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub n: usize,
    pub classes: usize,
    /// Expected fraction of intra-class edges.
    pub target_rh: f64,
    pub avg_degree: f64,
    pub n_features: usize,
    pub seed: u64,
}

impl Default for SbmParams {
    fn default() -> Self {
        Self {
            n: 500,
            classes: 5,
            target_rh: 0.2,
            avg_degree: 10.0,
            n_features: 32,
            seed: 0,
        }
    }
}

/// Two-block-probability SBM: nodes get classes round-robin, intra-class
/// pairs connect with `p_in` and inter-class pairs with `p_out`, chosen so
/// the expected edge count is `n·avg_degree/2` and the expected intra-class
/// share is `target_rh`. Features are a per-class mean (standard normal
/// scaled by 2) plus standard normal noise per node.
pub fn generate_sbm<T: Scalar>(params: &SbmParams) -> Result<GraphDataset<T>> {
    let SbmParams {
        n,
        classes,
        target_rh,
        avg_degree,
        n_features,
        seed,
    } = *params;
    if classes < 2 || n < classes {
        return Err(Error::Infeasible(format!(
            "need n >= classes >= 2, got n={n} classes={classes}"
        )));
    }
    if !(0.0..=1.0).contains(&target_rh) || !(avg_degree > 0.0) || n_features == 0 {
        return Err(Error::InvalidArgument(format!(
            "target_rh={target_rh} avg_degree={avg_degree} n_features={n_features}"
        )));
    }

    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let mut class_size = vec![0usize; classes];
    for &l in &labels {
        class_size[l] += 1;
    }
    let pairs_total = (n * (n - 1) / 2) as f64;
    let pairs_in: f64 = class_size.iter().map(|&s| (s * s.saturating_sub(1) / 2) as f64).sum();
    let pairs_out = pairs_total - pairs_in;
    let expected_edges = n as f64 * avg_degree / 2.0;
    let p_in = if target_rh > 0.0 {
        target_rh * expected_edges / pairs_in
    } else {
        0.0
    };
    let p_out = if target_rh < 1.0 {
        (1.0 - target_rh) * expected_edges / pairs_out
    } else {
        0.0
    };
    if !(p_in <= 1.0 && p_out <= 1.0) {
        return Err(Error::Infeasible(format!(
            "expected edges exceed capacity (p_in={p_in:.3}, p_out={p_out:.3})"
        )));
    }

    let mut rng = rng_from(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }

    let means: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            (0..n_features)
                .map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let features = DenseMatrix::from_fn(n, n_features, |r, c| {
        T::of(means[labels[r]][c] + rng.sample::<f64, _>(StandardNormal))
    });

    GraphDataset::new(
        format!("sbm-n{n}-c{classes}-rh{target_rh}-s{seed}"),
        features,
        edges,
        Some(labels),
        Some(classes),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::homophily_ratio;

    fn measured(params: &SbmParams) -> f64 {
        let g: GraphDataset<f64> = generate_sbm(params).unwrap();
        homophily_ratio(g.edges(), g.labels().unwrap()).unwrap()
    }

    #[test]
    fn fully_homophilic_target() {
        let p = SbmParams {
            n: 100,
            target_rh: 1.0,
            ..Default::default()
        };
        assert_eq!(measured(&p), 1.0);
    }

    #[test]
    fn measured_ratio_near_target() {
        let p = SbmParams {
            n: 1000,
            classes: 5,
            target_rh: 0.2,
            avg_degree: 10.0,
            seed: 7,
            ..Default::default()
        };
        let r = measured(&p);
        assert!((0.15..=0.25).contains(&r), "{r}");
    }

    #[test]
    fn converges_at_larger_n() {
        for (seed, rh) in [(1, 0.1), (2, 0.5), (3, 0.8)] {
            let p = SbmParams {
                n: 2000,
                target_rh: rh,
                seed,
                n_features: 2,
                ..Default::default()
            };
            let r = measured(&p);
            assert!((r - rh).abs() <= 0.03, "rh={rh} measured {r}");
        }
    }

    #[test]
    fn infeasible_inputs() {
        let p = SbmParams {
            n: 1,
            classes: 2,
            ..Default::default()
        };
        assert!(matches!(generate_sbm::<f64>(&p), Err(Error::Infeasible(_))));
        let dense = SbmParams {
            n: 10,
            classes: 2,
            avg_degree: 50.0,
            ..Default::default()
        };
        assert!(matches!(generate_sbm::<f64>(&dense), Err(Error::Infeasible(_))));
    }

    #[test]
    fn deterministic_by_seed() {
        let p = SbmParams {
            n: 60,
            seed: 5,
            ..Default::default()
        };
        assert_eq!(generate_sbm::<f64>(&p).unwrap(), generate_sbm::<f64>(&p).unwrap());
    }
}
