//! Attention weights of a one-layer model and the importance signal read
//! from them: the largest weight a position puts on any earlier position.
//!
//! cargo run --example attention_importance

use entropy_tree::model::{importance_score, LanguageModel, ToyAttentionLayer, Vocabulary};

fn main() -> entropy_tree::Result<()> {
    let vocab = Vocabulary::new(["the", "cat", "sat", "EOS"], "EOS")?;
    let layer = ToyAttentionLayer::new(
        vocab,
        vec![vec![0.2, 1.0, 0.0], vec![1.0, 0.1, 0.5], vec![0.4, 0.4, 1.0], vec![0.0, 0.0, 0.1]],
        vec![vec![1.5, 0.0], vec![0.0, 1.5], vec![0.5, 0.5]],
        vec![vec![1.0, 0.2], vec![0.3, 1.0], vec![0.0, 0.8]],
    )?;
    let prefix = layer.vocab().encode("the cat sat")?;
    let a = layer.attention_matrix(&prefix)?;
    println!("attention (row attends to column):");
    for (t, row) in a.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|w| format!("{w:.3}")).collect();
        let imp = importance_score(&row[..=t]).map_or("-".to_string(), |i| format!("{i:.3}"));
        println!("  {:<4} [{}]  importance {imp}", layer.vocab().token(prefix[t]).unwrap_or("?"), cells.join(" "));
    }
    let out = layer.score_next(&prefix)?;
    let next = out.dist.ranked()[0];
    println!(
        "next token {:?} with p={:.3}, importance {:?}",
        layer.vocab().token(next),
        out.dist.prob(next),
        out.importance
    );
    Ok(())
}
