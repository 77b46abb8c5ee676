//! 500 tasks whose gold answer hides behind a 5% branch at one uncertain
//! step. Twenty independent chains find it with probability 1 - 0.95^20; a
//! tree that forks at the uncertain step always does.
//!
//! cargo run --release --example fork_benchmark

use entropy_tree::eval::synthetic::ForkTaskModel;
use entropy_tree::eval::{run_entropy_tree, run_multi_chain};
use entropy_tree::sampling::SamplerConfig;
use entropy_tree::tree::BranchConfig;
use entropy_tree::uncertainty::ExtractionRule;

fn main() -> entropy_tree::Result<()> {
    let q = 0.05;
    let model = ForkTaskModel::uniform_hard(500, q, 2, 4)?;
    let problems = model.problems();
    let rule = ExtractionRule::default();

    let mut cfg = BranchConfig::new(0.15, 0.0, 2, 20);
    cfg.max_tokens = 64;
    let tree = run_entropy_tree(&problems, &model, &cfg, &rule, 1)?;
    let chains = run_multi_chain(&problems, &model, 20, &SamplerConfig::default(), 64, &rule, 1)?;

    println!("closed form for chains: {:.4}", 1.0 - (1.0 - q).powi(20));
    println!("{:<14} {:>8} {:>8} {:>8}", "method", "pass@1", "pass@10", "pass@20");
    for r in [&chains, &tree] {
        let at = |k| r.pass_at(k).map_or("-".into(), |v| format!("{v:.4}"));
        println!("{:<14} {:>8} {:>8} {:>8}", r.method.as_str(), at(1), at(10), at(20));
    }
    let steps: usize = tree.records.iter().map(|r| r.steps).sum();
    let chain_steps: usize = chains.records.iter().map(|r| r.steps).sum();
    println!("scoring calls: tree {steps}, chains {chain_steps}");
    Ok(())
}
