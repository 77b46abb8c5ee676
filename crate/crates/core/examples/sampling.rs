//! Truncation and temperature on one distribution, then empirical draw
//! frequencies from the combined sampler.
//!
//! cargo run --example sampling

use entropy_tree::model::TokenDistribution;
use entropy_tree::sampling::{
    apply_temperature, greedy_select, token_entropy, truncate_top_k, truncate_top_p, SamplerConfig, Strategy,
};
use entropy_tree::seed::rng_from_seed;

fn fmt(d: &TokenDistribution) -> String {
    d.probs().iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(" ")
}

fn main() -> entropy_tree::Result<()> {
    let d = TokenDistribution::new(vec![0.45, 0.25, 0.15, 0.1, 0.05])?;
    println!("model        {}  H={:.4} nats, greedy={}", fmt(&d), token_entropy(&d), greedy_select(&d));
    println!("top-k 3      {}", fmt(&truncate_top_k(&d, 3)?));
    println!("top-p 0.8    {}", fmt(&truncate_top_p(&d, 0.8)?));
    for t in [0.5, 2.0] {
        println!("temp {t:<7} {}", fmt(&apply_temperature(&d, t)?));
    }

    let cfg = SamplerConfig {
        strategy: Strategy::TopKThenTopP,
        k: Some(4),
        p: 0.9,
        temperature: 0.8,
        seed: 0,
    };
    let prepared = cfg.prepare(&d)?;
    let mut rng = rng_from_seed(7);
    let mut counts = vec![0usize; d.len()];
    let draws = 20_000;
    for _ in 0..draws {
        counts[cfg.select(&d, &mut rng)?] += 1;
    }
    println!("\ncombined k=4 p=0.9 T=0.8");
    println!("expected     {}", fmt(&prepared));
    let observed: Vec<String> = counts.iter().map(|&c| format!("{:.3}", c as f64 / draws as f64)).collect();
    println!("observed     {}", observed.join(" "));
    Ok(())
}
