//! The three reference backends side by side: a scripted table, an add-alpha
//! n-gram model trained on a toy corpus, and a one-layer attention model.
//!
//! cargo run --example backends

use entropy_tree::model::{train_ngram, LanguageModel, ScriptedModel, ToyAttentionLayer, Vocabulary};
use entropy_tree::sampling::token_entropy;

fn show(name: &str, model: &dyn LanguageModel, prefix: &str) -> entropy_tree::Result<()> {
    let vocab = model.vocab();
    let out = model.score_next(&vocab.encode(prefix)?)?;
    let top: Vec<String> = out
        .dist
        .ranked()
        .into_iter()
        .take(3)
        .map(|id| format!("{}={:.3}", vocab.token(id).unwrap_or("?"), out.dist.prob(id)))
        .collect();
    println!(
        "{name:<10} after {prefix:?}: H={:.4} importance={:?} top: {}",
        token_entropy(&out.dist),
        out.importance,
        top.join(" ")
    );
    Ok(())
}

fn main() -> entropy_tree::Result<()> {
    let vocab = Vocabulary::new(["Q", "yes", "no", "EOS"], "EOS")?;
    let mut scripted = ScriptedModel::new(vocab);
    scripted.insert_sparse("Q", &[("yes", 0.7), ("no", 0.3)], Some(0.9))?;
    show("scripted", &scripted, "Q")?;
    show("scripted", &scripted, "Q yes")?;

    let corpus = ["the cat sat on the mat", "the dog sat on the rug", "a cat ran"];
    let ngram = train_ngram(&corpus, 2, 0.1)?;
    show("bigram", &ngram, "the")?;
    show("bigram", &ngram, "sat")?;
    println!("bigram file is {} bytes of JSON", ngram.to_file_string()?.len());

    let vocab = Vocabulary::new(["x", "y", "z", "EOS"], "EOS")?;
    let layer = ToyAttentionLayer::new(
        vocab,
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.7, 0.7], vec![-1.0, 0.2]],
        vec![vec![1.2, 0.0], vec![0.0, 1.2]],
        vec![vec![1.0, 0.3], vec![-0.3, 1.0]],
    )?;
    show("attention", &layer, "x y")?;
    show("attention", &layer, "z z x")?;
    Ok(())
}
