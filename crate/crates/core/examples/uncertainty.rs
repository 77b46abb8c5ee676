//! Answer extraction, majority vote and the uncertainty scores computed
//! from a handful of generations.
//!
//! cargo run --example uncertainty

use entropy_tree::tree::{FinishReason, LeafSequence};
use entropy_tree::uncertainty::{
    answer_distribution, extract_answer, lexical_similarity_uncertainty, ln_predictive_entropy, majority_vote,
    predictive_entropy, ExtractionRule, Fallback, MatchPolicy,
};

// Token ids only matter for lexical similarity, so intern words as we go.
fn leaf(words: &mut Vec<String>, text: &str, cum_logprob: f64) -> LeafSequence {
    let tokens: Vec<usize> = text
        .split_whitespace()
        .map(|w| match words.iter().position(|x| x == w) {
            Some(i) => i,
            None => {
                words.push(w.to_string());
                words.len() - 1
            }
        })
        .collect();
    let n = tokens.len();
    LeafSequence {
        tokens,
        text: text.to_string(),
        cum_logprob,
        length: n,
        branch_positions: Vec::new(),
        finish: FinishReason::Eos,
    }
}

fn main() -> entropy_tree::Result<()> {
    let mut words = Vec::new();
    let leaves = [
        leaf(&mut words, "so x = 6 ANSWER: 42", -1.2),
        leaf(&mut words, "try 5 then ANSWER: 42", -2.0),
        leaf(&mut words, "guess ANSWER: 17", -3.1),
        leaf(&mut words, "I am not sure , maybe 17", -4.4),
    ];

    let strict = ExtractionRule::default();
    let lenient = ExtractionRule::new(r"ANSWER:\s*(\S+)", MatchPolicy::LastMatch, Fallback::LastNumber)?;
    for (name, rule) in [("strict", &strict), ("lenient", &lenient)] {
        let answers: Vec<_> = leaves.iter().map(|l| extract_answer(&l.text, rule)).collect();
        let dist = answer_distribution(&answers)?;
        let shown: Vec<String> = answers.iter().map(ToString::to_string).collect();
        println!(
            "{name:<8} answers [{}] vote={} PE={:.4}",
            shown.join(", "),
            majority_vote(&answers)?,
            predictive_entropy(&dist)
        );
    }
    println!("LN-PE                 {:.4}", ln_predictive_entropy(&leaves)?);
    println!("lexical uncertainty   {:.4}", lexical_similarity_uncertainty(&leaves)?);
    Ok(())
}
