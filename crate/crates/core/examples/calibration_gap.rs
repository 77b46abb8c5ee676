//! How well does predictive entropy separate wrong from right answers?
//! A mixed set of 20 hard tasks (gold behind a 5% branch) and 40 easy ones
//! (a 3% slip on the final answer), averaged over 20 seeds.
//!
//! cargo run --release --example calibration_gap

use std::collections::BTreeMap;

use entropy_tree::eval::synthetic::{ForkTaskModel, TaskKind};
use entropy_tree::eval::{run_entropy_tree, run_multi_chain};
use entropy_tree::sampling::SamplerConfig;
use entropy_tree::tree::BranchConfig;
use entropy_tree::uncertainty::ExtractionRule;

fn main() -> entropy_tree::Result<()> {
    let mut tasks = vec![TaskKind::Hard { correct: 0.05 }; 20];
    tasks.extend(vec![TaskKind::Easy { slip: 0.03 }; 40]);
    let model = ForkTaskModel::new(tasks, 2, 4)?;
    let problems = model.problems();
    let rule = ExtractionRule::default();
    let mut cfg = BranchConfig::new(0.15, 0.0, 2, 20);
    cfg.max_tokens = 64;

    let seeds = 20;
    let mut sums: BTreeMap<(String, String), f64> = BTreeMap::new();
    for seed in 0..seeds {
        let tree = run_entropy_tree(&problems, &model, &cfg, &rule, seed)?;
        let chains = run_multi_chain(&problems, &model, 20, &SamplerConfig::default(), 64, &rule, seed)?;
        for r in [&tree, &chains] {
            for (metric, v) in &r.auroc {
                *sums.entry((r.method.to_string(), metric.clone())).or_default() += v;
            }
        }
    }
    println!("{:<14} {:<20} {:>8}", "method", "metric", "AUROC");
    for ((method, metric), sum) in sums {
        println!("{method:<14} {metric:<20} {:>8.4}", sum / seeds as f64);
    }
    Ok(())
}
