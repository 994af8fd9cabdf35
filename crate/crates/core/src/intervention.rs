//! Noise interventions: rescale the features of a random set of center
//! nodes by `Normal(1, σ²)` factors, `M` times, and embed every intervened
//! graph with the frozen embedding network.

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::embedding::EmbeddingModel;
use crate::error::{Error, Result};
use crate::nn::{DenseMatrix, SparsePropagator};
use crate::rng::rng_for;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct InterventionPlan {
    pub centers: Vec<usize>,
    pub repetitions: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl InterventionPlan {
    pub fn new(centers: Vec<usize>, repetitions: usize, noise_sigma: f64, seed: u64) -> Result<Self> {
        if repetitions == 0 {
            return Err(Error::InvalidArgument("zero intervention repetitions".into()));
        }
        if !(noise_sigma > 0.0) || !noise_sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("noise sigma {noise_sigma}")));
        }
        let mut sorted = centers.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != centers.len() || centers.is_empty() {
            return Err(Error::InvalidArgument("centers must be distinct and nonempty".into()));
        }
        Ok(Self {
            centers,
            repetitions,
            noise_sigma,
            seed,
        })
    }
}

/// `max(1, round(r_c · n))`, capped at `n`.
pub fn center_count(n_nodes: usize, ratio: f64) -> usize {
    ((ratio * n_nodes as f64).round() as usize).max(1).min(n_nodes)
}

/// Uniform sample of centers without replacement, returned sorted.
pub fn sample_centers<R: Rng + ?Sized>(n_nodes: usize, ratio: f64, rng: &mut R) -> Result<Vec<usize>> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!("center ratio {ratio} outside (0, 1]")));
    }
    if n_nodes == 0 {
        return Err(Error::Empty("no nodes to intervene on".into()));
    }
    let mut centers = sample(rng, n_nodes, center_count(n_nodes, ratio)).into_vec();
    centers.sort_unstable();
    Ok(centers)
}

/// Multiplies each feature of each center row by an independent
/// `Normal(1, σ²)` draw. Other rows are copied unchanged.
pub fn apply_noise<T: Scalar, R: Rng + ?Sized>(
    features: &DenseMatrix<T>,
    centers: &[usize],
    sigma: f64,
    rng: &mut R,
) -> Result<DenseMatrix<T>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("noise sigma {sigma}")));
    }
    let mut out = features.clone();
    for &c in centers {
        if c >= features.rows() {
            return Err(Error::NodeOutOfRange {
                index: c,
                n_nodes: features.rows(),
            });
        }
        for v in out.row_mut(c) {
            let eps = 1.0 + sigma * rng.sample::<f64, _>(StandardNormal);
            *v *= T::of(eps);
        }
    }
    Ok(out)
}

/// `M` embedding snapshots of the graph under independent interventions.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionBatch<T> {
    snapshots: Vec<DenseMatrix<T>>,
    centers: Vec<usize>,
}

impl<T: Scalar> InterventionBatch<T> {
    pub fn from_snapshots(snapshots: Vec<DenseMatrix<T>>, centers: Vec<usize>) -> Result<Self> {
        let Some(first) = snapshots.first() else {
            return Err(Error::Empty("intervention batch without snapshots".into()));
        };
        let shape = first.shape();
        for (m, s) in snapshots.iter().enumerate() {
            if s.shape() != shape {
                return Err(Error::ShapeMismatch {
                    expected: format!("{}x{}", shape.0, shape.1),
                    actual: format!("snapshot {m} is {}x{}", s.rows(), s.cols()),
                });
            }
            if !s.is_finite() {
                return Err(Error::NonFinite(format!("embedding snapshot {m}")));
            }
        }
        Ok(Self { snapshots, centers })
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Embedding width.
    pub fn dim(&self) -> usize {
        self.snapshots[0].cols()
    }

    pub fn n_nodes(&self) -> usize {
        self.snapshots[0].rows()
    }

    pub fn snapshots(&self) -> &[DenseMatrix<T>] {
        &self.snapshots
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    /// One CSV per snapshot, `snapshot_{m}.csv`, rows are nodes.
    pub fn dump_csv(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (m, s) in self.snapshots.iter().enumerate() {
            let mut body = String::new();
            for r in 0..s.rows() {
                let row: Vec<String> = s.row(r).iter().map(|v| v.to_string()).collect();
                body.push_str(&row.join(","));
                body.push('\n');
            }
            let p = dir.join(format!("snapshot_{m}.csv"));
            fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

/// Runs the plan: repetition `m` draws its noise from its own stream derived
/// from `(plan.seed, m)`, so the batch is identical however it is scheduled.
pub fn embed_interventions<T: Scalar>(
    model: &EmbeddingModel<T>,
    prop: &SparsePropagator<T>,
    features: &DenseMatrix<T>,
    plan: &InterventionPlan,
) -> Result<InterventionBatch<T>> {
    let snapshots = (0..plan.repetitions)
        .into_par_iter()
        .map(|m| {
            let mut rng = rng_for(plan.seed, m as u64);
            let noisy = apply_noise(features, &plan.centers, plan.noise_sigma, &mut rng)?;
            let b = model.embed(prop, &noisy)?;
            if !b.is_finite() {
                return Err(Error::NonFinite(format!("embedding of intervention {m}")));
            }
            Ok(b)
        })
        .collect::<Result<Vec<_>>>()?;
    InterventionBatch::from_snapshots(snapshots, plan.centers.clone())
}
