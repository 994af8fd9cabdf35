use causalmp::embedding::EmbeddingConfig;
use causalmp::graph::{generate_sbm, split_edges, SbmParams};
use causalmp::linkpred::LinkPredConfig;
use causalmp::pipeline::{eval_node_classification, retrain_on_structure, run_causalmp, run_to_dir, NodeClassConfig, RunConfig};
use causalmp::structure::CausalStructure;
use causalmp::{init_structure, Dataset};

fn sbm(n: usize, seed: u64) -> Dataset {
    generate_sbm(&SbmParams {
        n,
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn quick(iterations: usize, seed: u64) -> RunConfig {
    RunConfig {
        iterations,
        seed,
        embedding: EmbeddingConfig {
            epochs: 150,
            lr: 1e-3,
            ..Default::default()
        },
        linkpred: LinkPredConfig {
            epochs: 30,
            lr: 1e-3,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn zero_iterations_is_pretraining_only() {
    let ds = sbm(120, 1);
    let cfg = quick(0, 3);
    let out = run_causalmp(&ds, &cfg).unwrap();
    let split = split_edges(&ds, cfg.split, cfg.seed).unwrap();
    let original = init_structure(&split.train_graph(&ds).unwrap());
    assert_eq!(out.structure, original);
    assert!(out.structure.log().is_empty());
    assert!(out.report.iterations.is_empty());
    assert_eq!(out.report.phases.len(), 1);
    assert!(out.dependency_scores.is_empty());
}

#[test]
fn heterophilic_sbm_run_prunes_directions() {
    let ds = sbm(500, 0);
    let cfg = quick(5, 0);
    let out = run_causalmp(&ds, &cfg).unwrap();
    assert_eq!(out.report.iterations.len(), 5);
    let pruned: usize = out.report.iterations.iter().map(|r| r.pruned).sum();
    assert!(pruned >= 1);
    assert_eq!(out.structure.counts().directed, pruned);
    assert!(out.report.iterations.iter().all(|r| r.pruned_heterophilic.is_some()));
    let t = &out.report.timings;
    assert!(t.total_secs >= 0.0 && t.embedding_secs >= 0.0 && t.pretrain_secs >= 0.0);
    assert_eq!(t.iterations.len(), 5);
    // the log replays to the final structure
    let split = split_edges(&ds, cfg.split, cfg.seed).unwrap();
    let replayed = init_structure(&split.train_graph(&ds).unwrap())
        .replay(out.structure.log())
        .unwrap();
    assert_eq!(replayed, out.structure);
}

#[test]
fn written_artifacts_are_deterministic() {
    let ds = sbm(150, 2);
    let cfg = quick(2, 5);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_to_dir(&ds, &cfg, a.path()).unwrap();
    run_to_dir(&ds, &cfg, b.path()).unwrap();
    for file in [
        "causal_structure.csv",
        "edits.jsonl",
        "metrics.json",
        "dependency_scores.csv",
        "mi_scores.csv",
        "config_used.json",
        "train_loss.csv",
        "split.json",
        "embedding.bin",
        "linkpred.bin",
    ] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert!(x == y, "{file} differs");
    }
    assert!(!a.path().join("FAILED.json").exists());
}

#[test]
fn failure_leaves_a_marker() {
    let ds = sbm(60, 0);
    let mut cfg = quick(1, 0);
    cfg.embedding.lr = f64::NAN;
    let dir = tempfile::tempdir().unwrap();
    assert!(run_to_dir(&ds, &cfg, dir.path()).is_err());
    let marker: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("FAILED.json")).unwrap()).unwrap();
    assert!(marker["error"].is_string());
    assert!(dir.path().join("config_used.json").exists());
}

#[test]
fn identical_structures_classify_identically() {
    let ds = sbm(150, 4);
    let s = CausalStructure::from_edges(ds.n_nodes(), ds.edges().iter().copied()).unwrap();
    let cfg = NodeClassConfig {
        epochs: 40,
        ..Default::default()
    };
    let r = eval_node_classification(&ds, &s, &s, 5, &[0, 1, 2], &cfg).unwrap();
    assert_eq!(r.original, r.causal);
    assert_eq!(r.difference, 0.0);
}

#[test]
fn unedited_structure_retrains_like_the_original() {
    let ds = sbm(150, 6);
    let cfg = quick(0, 1);
    let split = split_edges(&ds, cfg.split, cfg.seed).unwrap();
    let s = init_structure(&split.train_graph(&ds).unwrap());
    let copy = CausalStructure::from_edges(ds.n_nodes(), s.edges().map(|(e, _)| e)).unwrap();
    let a = retrain_on_structure(&ds, &s, &cfg, 9).unwrap();
    let b = retrain_on_structure(&ds, &copy, &cfg, 9).unwrap();
    assert_eq!(a, b);
    assert!((0.0..=1.0).contains(&a));
}
