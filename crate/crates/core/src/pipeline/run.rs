use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dependency::{compute_threshold, score_edges, score_pairs_mi, DependencyScore, MiScore, ThresholdStats};
use crate::embedding::{train_embedding, write_embedding_curve, EmbeddingEpoch, EmbeddingModel};
use crate::error::{Error, Result};
use crate::graph::{edge_is_homophilic, save_split, split_edges, EdgeSplit, GraphDataset};
use crate::intervention::{embed_interventions, sample_centers, InterventionPlan};
use crate::linkpred::{evaluate, init_linkpred, train_phase, LinkData, LpEpoch, LpModel};
use crate::nn::{DenseMatrix, NormalizationMode};
use crate::pipeline::config::RunConfig;
use crate::rng::{derive_seed, rng_for, tag, Rng};
use crate::scalar::Scalar;
use crate::structure::{init_structure, CausalStructure, EditKind, StructureCounts};

/// What one structure-learning iteration did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub iteration: usize,
    pub centers: usize,
    pub scored_edges: usize,
    pub candidates: usize,
    pub delta_stats: Option<ThresholdStats>,
    pub mi_stats: Option<ThresholdStats>,
    pub pruned: usize,
    pub added: usize,
    /// Pruned edges whose endpoints carry different labels, when labeled.
    pub pruned_heterophilic: Option<usize>,
    pub counts: StructureCounts,
}

#[derive(Debug, Clone)]
pub struct StepOutput<T> {
    pub record: StepRecord,
    pub scores: Vec<DependencyScore<T>>,
    pub mi: Vec<MiScore<T>>,
}

/// One structure-learning round: intervene, embed, score, threshold, edit.
pub struct StructureLearner<'a, T> {
    pub embedding: &'a EmbeddingModel<T>,
    pub features: &'a DenseMatrix<T>,
    pub labels: Option<&'a [usize]>,
    pub config: &'a RunConfig,
}

impl<T: Scalar> StructureLearner<'_, T> {
    pub fn step(
        &self,
        structure: &mut CausalStructure,
        iteration: usize,
        center_rng: &mut Rng,
        dump: Option<&Path>,
    ) -> Result<StepOutput<T>> {
        let cfg = self.config;
        let centers = sample_centers(structure.n_nodes(), cfg.center_ratio, center_rng)?;
        let noise_seed = derive_seed(derive_seed(cfg.seed, tag::NOISE), iteration as u64);
        let plan = InterventionPlan::new(centers, cfg.repetitions, cfg.noise_sigma, noise_seed)?;
        let prop = structure.propagator::<T>()?;
        let batch = embed_interventions(self.embedding, &prop, self.features, &plan)?;
        if let Some(dir) = dump {
            batch.dump_csv(&dir.join(format!("iter_{iteration}")))?;
        }
        let opts = cfg.kde();

        let edges = structure.scored_edges(&plan.centers);
        let scores = score_edges(&batch, &edges, &opts)?;
        let deltas: Vec<f64> = scores.iter().map(|s| s.delta.as_f64()).collect();
        let delta_stats = match deltas.is_empty() {
            true => None,
            false => Some(compute_threshold(&deltas, cfg.lambda_delta)?),
        };
        let pruned = match &delta_stats {
            Some(st) => structure.apply_direction_prunes(iteration, &scores, st)?,
            None => 0,
        };

        let candidates = structure.triangle_candidates(&plan.centers);
        let mi = score_pairs_mi(&batch, &candidates, &opts)?;
        let mis: Vec<f64> = mi.iter().map(|s| s.mi.as_f64()).collect();
        let mi_stats = match mis.is_empty() {
            true => None,
            false => Some(compute_threshold(&mis, cfg.lambda_mi)?),
        };
        let added = match &mi_stats {
            Some(st) => structure.apply_edge_additions(iteration, &mi, st)?,
            None => 0,
        };

        let pruned_heterophilic = match self.labels {
            Some(labels) => {
                let mut het = 0;
                for r in structure.log() {
                    if r.iteration == iteration && r.kind == EditKind::Directed && !edge_is_homophilic((r.u, r.v), labels)? {
                        het += 1;
                    }
                }
                Some(het)
            }
            None => None,
        };
        Ok(StepOutput {
            record: StepRecord {
                iteration,
                centers: plan.centers.len(),
                scored_edges: edges.len(),
                candidates: candidates.len(),
                delta_stats,
                mi_stats,
                pruned,
                added,
                pruned_heterophilic,
                counts: structure.counts(),
            },
            scores,
            mi,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub phase: usize,
    pub val_auc: f64,
    pub test_auc: f64,
    pub epochs_run: usize,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IterationTiming {
    pub iteration: usize,
    pub structure_secs: f64,
    pub training_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub embedding_secs: f64,
    pub pretrain_secs: f64,
    pub iterations: Vec<IterationTiming>,
    pub total_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub seed: u64,
    pub iterations: Vec<StepRecord>,
    /// Phase 0 is pre-training; phase `t` follows iteration `t`.
    pub phases: Vec<PhaseSummary>,
    pub final_counts: StructureCounts,
    pub structure_file: String,
    pub timings: Timings,
}

/// The byte-reproducible summary written as `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub train_loss_curve: String,
    pub val_auc: f64,
    pub test_auc: f64,
    pub epochs_run: usize,
    pub seed: u64,
}

pub struct RunOutput<T> {
    pub report: RunReport,
    pub metrics: Metrics,
    pub structure: CausalStructure,
    pub split: EdgeSplit,
    pub embedding: EmbeddingModel<T>,
    pub embedding_curve: Vec<EmbeddingEpoch>,
    pub linkpred: LpModel<T>,
    pub train_curve: Vec<LpEpoch>,
    pub dependency_scores: Vec<(usize, DependencyScore<T>)>,
    pub mi_scores: Vec<(usize, MiScore<T>)>,
}

/// The whole loop: split, learn `f` on the training graph, pre-train `g`,
/// then `T` rounds of structure learning each followed by optimizing `g`.
///
/// `structure` is kept current so a caller can flush it after a failure.
pub fn run_causalmp_with<T: Scalar>(
    ds: &GraphDataset<T>,
    cfg: &RunConfig,
    structure: &mut Option<CausalStructure>,
    dump: Option<&Path>,
) -> Result<RunOutput<T>> {
    cfg.validate()?;
    let started = Instant::now();
    let mut timings = Timings::default();
    let split = split_edges(ds, cfg.split, cfg.seed)?;
    let train_graph = split.train_graph(ds)?;
    *structure = Some(init_structure(&train_graph));

    let t0 = Instant::now();
    let (f, embedding_curve) = train_embedding(&train_graph, &cfg.embedding, cfg.seed)?;
    timings.embedding_secs = t0.elapsed().as_secs_f64();

    let x = ds.features();
    let data = LinkData::from_split(ds, &split);
    let graph_prop = CausalStructure::from_edges(ds.n_nodes(), data.train_pos.iter().copied())?
        .to_propagator::<T>(NormalizationMode::Symmetric)?;
    let weights = cfg.weights();
    let mut g = init_linkpred(ds.n_features(), &cfg.linkpred, cfg.seed);
    let mut neg_rng = rng_for(cfg.seed, tag::LINKPRED_NEGATIVES);
    let mut phases = Vec::new();
    let mut train_curve = Vec::new();

    let mut optimize = |g: &mut LpModel<T>, s: &CausalStructure, phase: usize| -> Result<PhaseSummary> {
        let causal_prop = s.propagator::<T>()?;
        let out = train_phase(g, x, &graph_prop, &causal_prop, &data, &cfg.linkpred, &weights, &mut neg_rng, phase)?;
        let test_auc = evaluate(g, &causal_prop, x, &data.test)?;
        train_curve.extend(out.curve);
        Ok(PhaseSummary {
            phase,
            val_auc: out.best_val_auc,
            test_auc,
            epochs_run: out.epochs_run,
            best_epoch: out.best_epoch,
        })
    };

    let t0 = Instant::now();
    phases.push(optimize(&mut g, structure.as_ref().expect("set above"), 0)?);
    timings.pretrain_secs = t0.elapsed().as_secs_f64();

    let learner = StructureLearner {
        embedding: &f,
        features: x,
        labels: ds.labels(),
        config: cfg,
    };
    let mut center_rng = rng_for(cfg.seed, tag::CENTERS);
    let mut records = Vec::new();
    let mut dependency_scores = Vec::new();
    let mut mi_scores = Vec::new();
    for t in 1..=cfg.iterations {
        let s = structure.as_mut().expect("set above");
        let t0 = Instant::now();
        let step = learner.step(s, t, &mut center_rng, dump)?;
        let structure_secs = t0.elapsed().as_secs_f64();
        log::info!(
            "iteration {t}: {} pruned, {} added over {} scored edges",
            step.record.pruned,
            step.record.added,
            step.record.scored_edges
        );
        dependency_scores.extend(step.scores.into_iter().map(|d| (t, d)));
        mi_scores.extend(step.mi.into_iter().map(|m| (t, m)));
        records.push(step.record);

        let t0 = Instant::now();
        phases.push(optimize(&mut g, s, t)?);
        timings.iterations.push(IterationTiming {
            iteration: t,
            structure_secs,
            training_secs: t0.elapsed().as_secs_f64(),
        });
    }
    timings.total_secs = started.elapsed().as_secs_f64();

    let last = *phases.last().expect("pre-training phase");
    let structure = structure.clone().expect("set above");
    let metrics = Metrics {
        train_loss_curve: "train_loss.csv".into(),
        val_auc: last.val_auc,
        test_auc: last.test_auc,
        epochs_run: phases.iter().map(|p| p.epochs_run).sum(),
        seed: cfg.seed,
    };
    let report = RunReport {
        dataset: ds.name.clone(),
        seed: cfg.seed,
        iterations: records,
        phases,
        final_counts: structure.counts(),
        structure_file: "causal_structure.csv".into(),
        timings,
    };
    Ok(RunOutput {
        report,
        metrics,
        structure,
        split,
        embedding: f,
        embedding_curve,
        linkpred: g,
        train_curve,
        dependency_scores,
        mi_scores,
    })
}

pub fn run_causalmp<T: Scalar>(ds: &GraphDataset<T>, cfg: &RunConfig) -> Result<RunOutput<T>> {
    run_causalmp_with(ds, cfg, &mut None, None)
}

fn write(path: &Path, body: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write(path, s)
}

pub fn write_dependency_scores<T: Scalar>(path: &Path, rows: &[(usize, DependencyScore<T>)]) -> Result<()> {
    let mut out = String::from("iteration,i,j,delta,cause,effect\n");
    for (t, s) in rows {
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{t},{},{},{},{},{}\n",
            s.edge.0,
            s.edge.1,
            s.delta.as_f64(),
            opt(s.cause()),
            opt(s.effect())
        ));
    }
    write(path, out)
}

pub fn write_mi_scores<T: Scalar>(path: &Path, rows: &[(usize, MiScore<T>)]) -> Result<()> {
    let mut out = String::from("iteration,i,j,mi\n");
    for (t, s) in rows {
        out.push_str(&format!("{t},{},{},{}\n", s.pair.0, s.pair.1, s.mi.as_f64()));
    }
    write(path, out)
}

pub fn write_train_curve(path: &Path, curve: &[LpEpoch]) -> Result<()> {
    let mut out = String::from("phase,epoch,loss,recon_graph,recon_causal,consistency,val_auc\n");
    for e in curve {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.phase, e.epoch, e.loss, e.recon_graph, e.recon_causal, e.consistency, e.val_auc
        ));
    }
    write(path, out)
}

/// Failure marker left in an output directory.
pub fn write_failure(out: &Path, err: &Error) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_json(
        &out.join("FAILED.json"),
        &serde_json::json!({ "error": err.kind(), "message": err.to_string() }),
    )
}

/// Runs and writes every artifact under `out`. On failure the structure
/// reached so far is flushed next to `FAILED.json`.
pub fn run_to_dir<T: Scalar>(ds: &GraphDataset<T>, cfg: &RunConfig, out: &Path) -> Result<RunOutput<T>> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let _ = fs::remove_file(out.join("FAILED.json"));
    write(&out.join("config_used.json"), cfg.to_json()? + "\n")?;
    let mut partial = None;
    let dump = cfg.dump_interventions.then(|| out.join("interventions"));
    match run_causalmp_with(ds, cfg, &mut partial, dump.as_deref()) {
        Ok(res) => {
            write_outputs(out, &res)?;
            Ok(res)
        }
        Err(err) => {
            if let Some(s) = partial {
                s.write_csv(&out.join("causal_structure.csv"))?;
                s.write_edits(&out.join("edits.jsonl"))?;
            }
            write_failure(out, &err)?;
            Err(err)
        }
    }
}

pub fn write_outputs<T: Scalar>(out: &Path, res: &RunOutput<T>) -> Result<()> {
    res.structure.write_csv(&out.join("causal_structure.csv"))?;
    res.structure.write_edits(&out.join("edits.jsonl"))?;
    write_json(&out.join("metrics.json"), &res.metrics)?;
    write_json(&out.join("report.json"), &res.report)?;
    write_dependency_scores(&out.join("dependency_scores.csv"), &res.dependency_scores)?;
    write_mi_scores(&out.join("mi_scores.csv"), &res.mi_scores)?;
    write_train_curve(&out.join("train_loss.csv"), &res.train_curve)?;
    write_embedding_curve(&out.join("embedding_loss.csv"), &res.embedding_curve)?;
    save_split(out.join("split.json"), &res.split)?;
    res.embedding.save(&out.join("embedding.bin"))?;
    res.linkpred.save(&out.join("linkpred.bin"))?;
    Ok(())
}
