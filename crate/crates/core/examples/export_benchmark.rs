//! Writes a small fork-task benchmark as files the command-line tool can
//! read: a scripted model, a problem set, a calibration split, an n-gram
//! corpus and an experiment config.
//!
//! cargo run --example export_benchmark -- crates/core/data

use std::fs;
use std::path::PathBuf;

use entropy_tree::eval::dataset_to_string;
use entropy_tree::eval::synthetic::{ForkTaskModel, TaskKind};

const CONFIG: &str = r#"seed = 7
output_dir = "out"

[model]
kind = "scripted"
path = "bench.model"

[dataset]
path = "problems.jsonl"

[calibration]
dataset = "calib.jsonl"
percentile = 60

[tree]
b = 2
n_tree = 16
max_tokens = 32

[run]
methods = ["entropy_tree", "multi_chain", "ablation_late_percentile", "ablation_random_branch"]
n = 16
"#;

const CORPUS: &str = "\
two plus two is four </s>
two plus three is five </s>
three plus three is six </s>
two times three is six </s>
three times three is nine </s>
";

fn main() -> entropy_tree::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    fs::create_dir_all(&dir)?;

    let mut tasks = vec![TaskKind::Hard { correct: 0.1 }; 12];
    tasks.extend(vec![TaskKind::Easy { slip: 0.05 }; 8]);
    let model = ForkTaskModel::new(tasks, 1, 3)?;
    let scripted = model.to_scripted()?;
    scripted.save(dir.join("bench.model"))?;

    let problems = model.problems();
    let write = |name: &str, text: &str| fs::write(dir.join(name), text);
    write("problems.jsonl", &dataset_to_string(&problems)?)?;
    write("calib.jsonl", &dataset_to_string(&problems[..6])?)?;
    write("corpus.txt", CORPUS)?;
    write("experiment.toml", CONFIG)?;
    println!("wrote {} problems and a {}-prefix model to {}", problems.len(), scripted.len(), dir.display());
    Ok(())
}
