//! End-to-end orchestration and the diagnostics built on top of it.

mod case_study;
mod config;
mod nodeclass;
mod retrain;
mod run;

pub use case_study::{case_study, welch_z_test, CaseStudy, EdgeDelta, GroupStats, WelchTest};
pub use config::RunConfig;
pub use nodeclass::{accuracy, eval_node_classification, kshot_split, train_classifier, NodeClassConfig, NodeClassReport};
pub use retrain::retrain_on_structure;
pub use run::{
    run_causalmp, run_causalmp_with, run_to_dir, write_dependency_scores, write_failure, write_mi_scores,
    write_outputs, write_train_curve, IterationTiming, Metrics, PhaseSummary, RunOutput, RunReport, StepOutput,
    StepRecord, StructureLearner, Timings,
};
