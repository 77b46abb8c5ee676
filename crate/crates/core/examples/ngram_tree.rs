//! Train a trigram model on a tiny corpus, calibrate the entropy threshold
//! on it, and grow a tree from a short prompt. Each line ends in the end
//! token so the model learns where sentences stop.
//!
//! cargo run --example ngram_tree

use entropy_tree::eval::{calibrate_thresholds, ProblemRecord};
use entropy_tree::model::{train_ngram, LanguageModel};
use entropy_tree::sampling::SamplerConfig;
use entropy_tree::tree::{decode_tree, BranchConfig};

fn main() -> entropy_tree::Result<()> {
    let corpus = [
        "two plus two is four </s>",
        "two plus three is five </s>",
        "three plus three is six </s>",
        "two times three is six </s>",
        "three times three is nine </s>",
    ];
    let model = train_ngram(&corpus, 3, 0.01)?;
    let sampler = SamplerConfig { k: Some(4), ..SamplerConfig::default() };
    let prompts: Vec<ProblemRecord> = ["two", "three", "two plus"]
        .iter()
        .enumerate()
        .map(|(i, p)| ProblemRecord::new(format!("c{i}"), *p, ""))
        .collect();
    let th = calibrate_thresholds(&model, &prompts, &sampler, 80.0, 12, 5)?;
    println!("calibrated tau={:.4} from {} steps", th.tau, th.entropy_samples);

    let mut cfg = BranchConfig::new(th.tau, 0.0, 3, 8);
    cfg.max_tokens = 12;
    cfg.sampler = sampler;
    let prompt = model.vocab().encode("two")?;
    let tree = decode_tree(&model, &prompt, &cfg, 5)?;
    for leaf in tree.collect_leaves(model.vocab()) {
        println!("  two {:<28} logp={:.3}", leaf.text, leaf.cum_logprob);
    }
    Ok(())
}
