use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use causalmp::embedding::{train_embedding, EmbeddingModel};
use causalmp::graph::{generate_sbm, load_dataset, save_dataset, save_split, split_edges, SbmParams};
use causalmp::pipeline::{
    case_study, eval_node_classification, retrain_on_structure, run_to_dir, write_failure, NodeClassConfig,
};
use causalmp::{init_structure, CausalStructure, Dataset, Error, Result, RunConfig};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "causalmp", version, about = "Causal structure learning and link prediction on heterophilic graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Dataset directory (manifest.json, features.csv, edges.csv, labels.csv).
    #[arg(long)]
    data: PathBuf,
    /// JSON run configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Full structure learning and link prediction run.
    Run(Common),
    /// Writes the edge split as split.json.
    Split(Common),
    /// Scores every edge and compares homophilic with heterophilic edges.
    Casestudy {
        #[command(flatten)]
        common: Common,
        /// Trained embedding network (embedding.bin of a run); trained on the
        /// full graph when omitted.
        #[arg(long)]
        embedding: Option<PathBuf>,
    },
    /// K-shot node classification on the original and a learned structure.
    Nodeclass {
        #[command(flatten)]
        common: Common,
        /// Learned structure (causal_structure.csv).
        #[arg(long)]
        structure: PathBuf,
        /// Baseline structure; the full input graph when omitted.
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        shots: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
    },
    /// Fresh link predictor pre-trained with both graph slots set to a structure.
    Retrain {
        #[command(flatten)]
        common: Common,
        /// Structure file; the training graph of the split when omitted.
        #[arg(long)]
        structure: Option<PathBuf>,
    },
    /// Generates a stochastic block model dataset directory.
    GenSbm {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        classes: usize,
        /// Target homophily ratio.
        #[arg(long, default_value_t = 0.2)]
        rh: f64,
        #[arg(long, default_value_t = 10.0)]
        degree: f64,
        #[arg(long, default_value_t = 32)]
        features: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

impl Command {
    fn out(&self) -> &Path {
        match self {
            Command::Run(c) | Command::Split(c) => &c.out,
            Command::Casestudy { common, .. } | Command::Nodeclass { common, .. } | Command::Retrain { common, .. } => {
                &common.out
            }
            Command::GenSbm { out, .. } => out,
        }
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let body = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, body).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn create_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.into(),
        source: e,
    })
}

/// Loads the dataset and configuration and records the configuration used.
fn prepare(c: &Common) -> Result<(Dataset, RunConfig)> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let ds = load_dataset(&c.data)?;
    create_dir(&c.out)?;
    fs::write(c.out.join("config_used.json"), cfg.to_json()? + "\n").map_err(|e| Error::Io {
        path: c.out.join("config_used.json"),
        source: e,
    })?;
    Ok((ds, cfg))
}

fn execute(command: &Command) -> Result<serde_json::Value> {
    match command {
        Command::Run(c) => {
            let (ds, cfg) = prepare(c)?;
            let out = run_to_dir(&ds, &cfg, &c.out)?;
            Ok(serde_json::to_value(&out.metrics)?)
        }
        Command::Split(c) => {
            let (ds, cfg) = prepare(c)?;
            let split = split_edges(&ds, cfg.split, cfg.seed)?;
            save_split(c.out.join("split.json"), &split)?;
            Ok(json!({
                "train": split.train_pos.len(),
                "val": split.val_pos.len(),
                "test": split.test_pos.len(),
            }))
        }
        Command::Casestudy { common, embedding } => {
            let (ds, cfg) = prepare(common)?;
            let f = match embedding {
                Some(p) => EmbeddingModel::load(p, &cfg.embedding)?,
                None => {
                    let (f, _) = train_embedding(&ds, &cfg.embedding, cfg.seed)?;
                    f.save(&common.out.join("embedding.bin"))?;
                    f
                }
            };
            let study = case_study(&ds, &f, &cfg, cfg.seed)?;
            let mut csv = String::from("u,v,delta,homophilic\n");
            for e in &study.edges {
                csv.push_str(&format!("{},{},{},{}\n", e.edge.0, e.edge.1, e.delta, e.homophilic));
            }
            let path = common.out.join("edge_deltas.csv");
            fs::write(&path, csv).map_err(|e| Error::Io { path, source: e })?;
            let summary = json!({
                "homophilic": study.homophilic,
                "heterophilic": study.heterophilic,
                "welch": study.welch,
                "applicable": study.applicable,
            });
            write_json(&common.out.join("case_study.json"), &summary)?;
            Ok(summary)
        }
        Command::Nodeclass {
            common,
            structure,
            baseline,
            shots,
            seeds,
        } => {
            let (ds, _) = prepare(common)?;
            let n = ds.n_nodes();
            let causal = CausalStructure::read_csv(structure, n)?;
            let original = match baseline {
                Some(p) => CausalStructure::read_csv(p, n)?,
                None => init_structure(&ds),
            };
            let report = eval_node_classification(&ds, &original, &causal, *shots, seeds, &NodeClassConfig::default())?;
            let value = serde_json::to_value(&report)?;
            write_json(&common.out.join("nodeclass.json"), &value)?;
            Ok(value)
        }
        Command::Retrain { common, structure } => {
            let (ds, cfg) = prepare(common)?;
            let s = match structure {
                Some(p) => CausalStructure::read_csv(p, ds.n_nodes())?,
                None => init_structure(&split_edges(&ds, cfg.split, cfg.seed)?.train_graph(&ds)?),
            };
            let test_auc = retrain_on_structure(&ds, &s, &cfg, cfg.seed)?;
            let value = json!({
                "seed": cfg.seed,
                "structure": structure.as_ref().map(|p| p.display().to_string()),
                "counts": s.counts(),
                "test_auc": test_auc,
            });
            write_json(&common.out.join("retrain.json"), &value)?;
            Ok(value)
        }
        Command::GenSbm {
            n,
            classes,
            rh,
            degree,
            features,
            seed,
            out,
        } => {
            let params = SbmParams {
                n: *n,
                classes: *classes,
                target_rh: *rh,
                avg_degree: *degree,
                n_features: *features,
                seed: *seed,
            };
            let ds: Dataset = generate_sbm(&params)?;
            save_dataset(out, &ds)?;
            Ok(json!({ "nodes": ds.n_nodes(), "edges": ds.edges().len() }))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", json!({ "error": err.kind(), "message": err.to_string() }));
            if let Err(e) = write_failure(cli.command.out(), &err) {
                log::warn!("could not write failure marker: {e}");
            }
            ExitCode::FAILURE
        }
    }
}
