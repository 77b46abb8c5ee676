//! Two ablations. Forking at random positions with the same overall rate as
//! the entropy gate, and calibrating the entropy threshold at a later
//! percentile, which pushes forks deeper into the generation.
//!
//! cargo run --release --example ablations

use entropy_tree::eval::synthetic::{rising_entropy_model, ForkTaskModel};
use entropy_tree::eval::{calibrate_thresholds, run_ablation, run_entropy_tree, Ablation};
use entropy_tree::sampling::SamplerConfig;
use entropy_tree::tree::BranchConfig;
use entropy_tree::uncertainty::ExtractionRule;

fn main() -> entropy_tree::Result<()> {
    let rule = ExtractionRule::default();

    let model = ForkTaskModel::uniform_hard(500, 0.05, 2, 4)?;
    let problems = model.problems();
    let mut cfg = BranchConfig::new(0.15, 0.0, 2, 20);
    cfg.max_tokens = 64;
    let guided = run_entropy_tree(&problems, &model, &cfg, &rule, 3)?;
    let random = run_ablation(&problems, &model, &cfg, Ablation::RandomBranch { paired: Some(&guided) }, &rule, 3)?;
    println!("fork rate per scoring call: {:.4}", guided.branch_rate());
    println!("share of tasks with a correct leaf: entropy-guided {:.4}, random {:.4}", guided.success_rate(), random.success_rate());

    // Entropy rises along the greedy path, so a higher percentile moves the
    // first fork later.
    let alt: Vec<f64> = (0..20).map(|t| 0.02 + 0.02 * t as f64).collect();
    let (rising, problem) = rising_entropy_model(&alt)?;
    let prompts = vec![problem];
    let greedy = SamplerConfig::greedy();
    for q in [80.0, 90.0] {
        let th = calibrate_thresholds(&rising, &prompts, &greedy, q, 64, 0)?;
        let mut cfg = BranchConfig::new(th.tau, th.delta, 2, 32);
        cfg.sampler = greedy.clone();
        let r = run_entropy_tree(&prompts, &rising, &cfg, &rule, 0)?;
        println!(
            "q{q}: tau={:.4}, forks={}, mean branch depth={:?}",
            th.tau,
            r.records[0].branches,
            r.mean_branch_depth()
        );
    }
    Ok(())
}
