use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dependency::KdeOptions;
use crate::embedding::EmbeddingConfig;
use crate::error::{Error, Result};
use crate::graph::SplitRatios;
use crate::linkpred::{LinkPredConfig, LossWeights};

/// Every knob of a run. All fields are optional in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Fraction of nodes intervened on per iteration.
    pub center_ratio: f64,
    /// Interventions per iteration (`M`).
    pub repetitions: usize,
    /// Structure-learning iterations (`T`).
    pub iterations: usize,
    pub noise_sigma: f64,
    /// `λ` of the dependency-score threshold.
    pub lambda_delta: f64,
    /// `λ` of the mutual-information threshold.
    pub lambda_mi: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Weight the original-graph reconstruction by `1 − α`.
    pub ablation: bool,
    pub bins: usize,
    pub embedding: EmbeddingConfig,
    pub linkpred: LinkPredConfig,
    pub seed: u64,
    pub split: SplitRatios,
    /// Write every intervention batch under `interventions/`.
    pub dump_interventions: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            center_ratio: 0.05,
            repetitions: 8,
            iterations: 5,
            noise_sigma: 0.5,
            lambda_delta: 1.0,
            lambda_mi: 1.0,
            alpha: 0.5,
            beta: 0.05,
            ablation: false,
            bins: 32,
            embedding: EmbeddingConfig::default(),
            linkpred: LinkPredConfig::default(),
            seed: 0,
            split: SplitRatios::default(),
            dump_interventions: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            alpha: self.alpha,
            beta: self.beta,
            ablation: self.ablation,
        }
    }

    pub fn kde(&self) -> KdeOptions {
        KdeOptions::with_bins(self.bins)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.center_ratio > 0.0 && self.center_ratio <= 1.0) {
            return bad("center_ratio must lie in (0, 1]");
        }
        if self.repetitions < 1 {
            return bad("repetitions must be at least 1");
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be positive");
        }
        if !(self.lambda_delta.is_finite() && self.lambda_mi.is_finite()) {
            return bad("threshold coefficients must be finite");
        }
        if self.bins < 2 {
            return bad("bins must be at least 2");
        }
        self.weights().validate()?;
        let e = &self.embedding;
        if e.hidden == 0 || e.dim < 2 || !(e.lr >= 0.0) || !(0.0..1.0).contains(&e.edge_drop) || !(0.0..1.0).contains(&e.feature_mask) {
            return bad("embedding config out of range");
        }
        let l = &self.linkpred;
        if l.hidden == 0 || l.dim == 0 || !(l.lr >= 0.0) || !(l.weight_decay >= 0.0) {
            return bad("linkpred config out of range");
        }
        Ok(())
    }
}
