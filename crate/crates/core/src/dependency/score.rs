use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dependency::{kde_joint_grid, GridEntropies, KdeOptions};
use crate::error::{Error, Result};
use crate::graph::{canonical, Edge};
use crate::intervention::InterventionBatch;
use crate::scalar::Scalar;

/// Paired scalar observations of two nodes, pooled over repetitions and
/// embedding coordinates: sample `k = m·D + d` is `(B[m][i][d], B[m][j][d])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSamples<T> {
    pub edge: Edge,
    pub first: Vec<T>,
    pub second: Vec<T>,
}

pub fn collect_pair_samples<T: Scalar>(batch: &InterventionBatch<T>, (i, j): Edge) -> PairSamples<T> {
    let per = batch.len() * batch.dim();
    let mut first = Vec::with_capacity(per);
    let mut second = Vec::with_capacity(per);
    for snapshot in batch.snapshots() {
        first.extend_from_slice(snapshot.row(i));
        second.extend_from_slice(snapshot.row(j));
    }
    PairSamples {
        edge: (i, j),
        first,
        second,
    }
}

/// Conditional-entropy asymmetry of one edge.
///
/// `edge` is canonical. `cond` holds `(H(v|u), H(u|v))` for `edge = (u, v)`.
/// The cause is the endpoint whose conditioning leaves the larger residual
/// entropy in its partner, i.e. `H(effect|cause) ≥ H(cause|effect)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependencyScore<T = f64> {
    pub edge: Edge,
    pub delta: T,
    pub direction: Option<(usize, usize)>,
    pub cond: Option<(T, T)>,
}

impl<T: Scalar> DependencyScore<T> {
    pub fn cause(&self) -> Option<usize> {
        self.direction.map(|d| d.0)
    }

    pub fn effect(&self) -> Option<usize> {
        self.direction.map(|d| d.1)
    }
}

/// Pair entropies, or `None` when either side has zero spread.
fn pair_entropies<T: Scalar>(
    batch: &InterventionBatch<T>,
    edge: Edge,
    opts: &KdeOptions,
) -> Result<Option<GridEntropies<T>>> {
    let s = collect_pair_samples(batch, edge);
    match kde_joint_grid(&s.first, &s.second, opts) {
        Ok(grid) => Ok(Some(GridEntropies::of(&grid))),
        Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// δH for the pair `(i, j)`. Computed on the canonical orientation so the
/// result does not depend on argument order.
pub fn delta_h<T: Scalar>(
    batch: &InterventionBatch<T>,
    (i, j): Edge,
    opts: &KdeOptions,
) -> Result<DependencyScore<T>> {
    let edge = canonical(i, j);
    let Some(h) = pair_entropies(batch, edge, opts)? else {
        return Ok(DependencyScore {
            edge,
            delta: T::zero(),
            direction: None,
            cond: None,
        });
    };
    let (v_given_u, u_given_v) = (h.second_given_first(), h.first_given_second());
    let (u, v) = edge;
    let direction = if v_given_u > u_given_v {
        Some((u, v))
    } else if u_given_v > v_given_u {
        Some((v, u))
    } else {
        None
    };
    Ok(DependencyScore {
        edge,
        delta: (v_given_u - u_given_v).abs(),
        direction,
        cond: Some((v_given_u, u_given_v)),
    })
}

/// Plug-in mutual information of the pair, clamped at zero. Zero-spread
/// pairs score 0.
pub fn mutual_information<T: Scalar>(
    batch: &InterventionBatch<T>,
    (i, j): Edge,
    opts: &KdeOptions,
) -> Result<T> {
    Ok(pair_entropies(batch, canonical(i, j), opts)?
        .map_or(T::zero(), |h| h.mutual_information().max(T::zero())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiScore<T = f64> {
    pub pair: Edge,
    pub mi: T,
}

/// Scores every edge in parallel; output order follows `edges`.
pub fn score_edges<T: Scalar>(
    batch: &InterventionBatch<T>,
    edges: &[Edge],
    opts: &KdeOptions,
) -> Result<Vec<DependencyScore<T>>> {
    edges.par_iter().map(|&e| delta_h(batch, e, opts)).collect()
}

pub fn score_pairs_mi<T: Scalar>(
    batch: &InterventionBatch<T>,
    pairs: &[Edge],
    opts: &KdeOptions,
) -> Result<Vec<MiScore<T>>> {
    pairs
        .par_iter()
        .map(|&p| {
            Ok(MiScore {
                pair: canonical(p.0, p.1),
                mi: mutual_information(batch, p, opts)?,
            })
        })
        .collect()
}

/// `μ + λσ` selection rule with a strict inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdStats {
    pub mean: f64,
    pub std: f64,
    pub lambda: f64,
    pub threshold: f64,
}

impl ThresholdStats {
    pub fn selects(&self, score: f64) -> bool {
        score > self.threshold
    }
}

/// Mean and population standard deviation of `scores`.
pub fn compute_threshold(scores: &[f64], lambda: f64) -> Result<ThresholdStats> {
    if scores.is_empty() {
        return Err(Error::Empty("threshold over zero scores".into()));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let threshold = mean + lambda * std;
    if !threshold.is_finite() {
        return Err(Error::NonFinite("threshold".into()));
    }
    Ok(ThresholdStats {
        mean,
        std,
        lambda,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::DenseMatrix;
    use crate::rng::rng_from;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn batch_from_rows(rows: Vec<Vec<Vec<f64>>>) -> InterventionBatch<f64> {
        let snaps = rows
            .into_iter()
            .map(|r| DenseMatrix::from_rows(&r).unwrap())
            .collect();
        InterventionBatch::from_snapshots(snaps, vec![0]).unwrap()
    }

    fn random_batch(n: usize, m: usize, d: usize, seed: u64) -> InterventionBatch<f64> {
        let mut rng = rng_from(seed);
        let snaps = (0..m)
            .map(|_| DenseMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        InterventionBatch::from_snapshots(snaps, vec![0]).unwrap()
    }

    #[test]
    fn sample_count_and_swap() {
        let b = random_batch(3, 8, 16, 1);
        let s = collect_pair_samples(&b, (0, 2));
        assert_eq!(s.first.len(), 128);
        assert_eq!(s.first[16 + 3], b.snapshots()[1][(0, 3)]);
        let t = collect_pair_samples(&b, (2, 0));
        assert_eq!(s.first, t.second);
        assert_eq!(s.second, t.first);
    }

    #[test]
    fn constant_embeddings_score_zero() {
        let b = batch_from_rows(vec![vec![vec![1.0; 4], vec![1.0; 4]]; 3]);
        let s = collect_pair_samples(&b, (0, 1));
        assert!(s.first.iter().zip(&s.second).all(|(a, c)| a == c));
        let d = delta_h(&b, (0, 1), &KdeOptions::default()).unwrap();
        assert_eq!(d.delta, 0.0);
        assert!(d.direction.is_none());
        assert_eq!(mutual_information(&b, (0, 1), &KdeOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn identical_nodes_give_zero_delta() {
        let mut rng = rng_from(2);
        let rows: Vec<Vec<Vec<f64>>> = (0..4)
            .map(|_| {
                let r: Vec<f64> = (0..16).map(|_| rng.random::<f64>()).collect();
                vec![r.clone(), r]
            })
            .collect();
        let b = batch_from_rows(rows);
        let d = delta_h(&b, (0, 1), &KdeOptions::default()).unwrap();
        assert!(d.delta.abs() < 1e-12);
    }

    #[test]
    fn endpoint_order_does_not_matter() {
        let b = random_batch(4, 8, 16, 3);
        let opts = KdeOptions::default();
        let a = delta_h(&b, (1, 3), &opts).unwrap();
        let c = delta_h(&b, (3, 1), &opts).unwrap();
        assert_eq!(a, c);
        assert_eq!(
            mutual_information(&b, (1, 3), &opts).unwrap(),
            mutual_information(&b, (3, 1), &opts).unwrap()
        );
    }

    #[test]
    fn direction_follows_larger_residual_entropy() {
        let b = random_batch(5, 8, 16, 8);
        for e in [(0, 1), (2, 4), (1, 3)] {
            let s = delta_h(&b, e, &KdeOptions::default()).unwrap();
            let (v_given_u, u_given_v) = s.cond.unwrap();
            let (c, eff) = s.direction.unwrap();
            let h_eff_given_cause = if c == s.edge.0 { v_given_u } else { u_given_v };
            let h_cause_given_eff = if c == s.edge.0 { u_given_v } else { v_given_u };
            assert!(h_eff_given_cause >= h_cause_given_eff);
            assert_eq!(s.delta, h_eff_given_cause - h_cause_given_eff);
            assert_ne!(c, eff);
        }
    }

    #[test]
    fn independent_samples_have_small_mi() {
        // histogram oracle on the same draws: MI of two independent variables
        // computed on a coarse 32x32 histogram is near zero as well
        let mut rng = rng_from(17);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        let ys: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        let snaps = vec![
            DenseMatrix::from_vec(2, 10_000, [xs.clone(), ys.clone()].concat()).unwrap(),
        ];
        let b = InterventionBatch::from_snapshots(snaps, vec![0]).unwrap();
        let mi = mutual_information(&b, (0, 1), &KdeOptions::default()).unwrap();
        assert!(mi <= 0.02, "kde mi {mi}");
    }

    #[test]
    fn identical_samples_give_marginal_entropy() {
        // on a histogram-equivalent grid, s_j = s_i puts all mass on the diagonal
        let mut rng = rng_from(23);
        let xs: Vec<f64> = (0..500).map(|_| f64::from(rng.random_range(0..16u8))).collect();
        let snaps = vec![DenseMatrix::from_vec(2, 500, [xs.clone(), xs.clone()].concat()).unwrap()];
        let b = InterventionBatch::from_snapshots(snaps, vec![0]).unwrap();
        let opts = KdeOptions::histogram_like(16, -0.5, 15.5);
        let s = collect_pair_samples(&b, (0, 1));
        let h = GridEntropies::of(&kde_joint_grid(&s.first, &s.second, &opts).unwrap());
        let mi = mutual_information(&b, (0, 1), &opts).unwrap();
        assert!((mi - h.first).abs() < 1e-12);

        // with smoothing, the identical pair still carries more information
        // than a noisy copy
        let noisy: Vec<f64> = xs.iter().map(|x| x + 4.0 * rng.random::<f64>()).collect();
        let snaps = vec![DenseMatrix::from_vec(3, 500, [xs.clone(), xs, noisy].concat()).unwrap()];
        let b = InterventionBatch::from_snapshots(snaps, vec![0]).unwrap();
        let opts = KdeOptions::default();
        assert!(
            mutual_information(&b, (0, 1), &opts).unwrap()
                > mutual_information(&b, (0, 2), &opts).unwrap()
        );
    }

    #[test]
    fn threshold_examples() {
        let t = compute_threshold(&[1.0, 2.0, 3.0], 0.0).unwrap();
        assert_eq!(t.threshold, 2.0);
        let picked: Vec<f64> = [1.0, 2.0, 3.0].into_iter().filter(|&s| t.selects(s)).collect();
        assert_eq!(picked, vec![3.0]);

        let t = compute_threshold(&[0.7; 5], 2.0).unwrap();
        assert_eq!(t.std, 0.0);
        assert!(!t.selects(0.7));

        let t = compute_threshold(&[0.0, 0.0, 0.0, 4.0], 1.0).unwrap();
        assert!((t.threshold - (1.0 + 3f64.sqrt())).abs() < 1e-12);
        assert!(t.selects(4.0));

        assert!(compute_threshold(&[], 1.0).is_err());
    }
}
