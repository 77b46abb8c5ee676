//! Evaluation: datasets, method runners, metrics, result files, and
//! synthetic benchmark models.

mod dataset;
mod metrics;
mod report;
mod runner;
pub mod synthetic;

pub use dataset::{dataset_to_string, load_dataset, parse_dataset, ProblemRecord};
pub use metrics::{auroc, pass_at_k, pass_at_k_exact, percentile};
pub use report::{
    auroc_csv, load_reports, parse_reports_jsonl, passk_csv, reports_to_jsonl, write_csvs, write_report_files,
    AUROC_FILE, PASSK_FILE, REPORT_FILE,
};
pub use runner::{
    calibrate_thresholds, decode_problem_tree, run_ablation, run_entropy_tree, run_multi_chain, Ablation, EvalReport, Method,
    SampleRecord, Thresholds, METRIC_LEXICAL, METRIC_LN_PE, METRIC_PE,
};
