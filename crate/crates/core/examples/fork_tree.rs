//! Grow a decoding tree on a scripted model with one uncertain step and
//! print its structure, leaves and dump.
//!
//! cargo run --example fork_tree

use entropy_tree::model::{LanguageModel, ScriptedModel, Vocabulary};
use entropy_tree::tree::{decode_chain, decode_tree, BranchConfig, DecodingTree, NodeId};

fn print_node(tree: &DecodingTree, vocab: &Vocabulary, id: NodeId, indent: usize) {
    let node = tree.node(id);
    let label = node.token.and_then(|t| vocab.token(t)).unwrap_or("<root>");
    let mark = if node.branched { "  <- fork" } else { "" };
    println!(
        "{:indent$}{label} (H={:.3}, logp={:.3}){mark}",
        "",
        node.entropy,
        node.logprob,
        indent = indent
    );
    for &c in &node.children {
        print_node(tree, vocab, c, indent + 2);
    }
}

fn main() -> entropy_tree::Result<()> {
    let vocab = Vocabulary::new(["Q", "think", "L", "R", "ANSWER:", "17", "42", "EOS"], "EOS")?;
    let mut m = ScriptedModel::new(vocab);
    m.insert_sparse("Q", &[("think", 1.0)], Some(1.0))?;
    m.insert_sparse("Q think", &[("L", 0.55), ("R", 0.45)], Some(0.8))?;
    m.insert_sparse("Q think L", &[("ANSWER:", 1.0)], Some(1.0))?;
    m.insert_sparse("Q think L ANSWER:", &[("17", 1.0)], Some(1.0))?;
    m.insert_sparse("Q think R", &[("ANSWER:", 1.0)], Some(1.0))?;
    m.insert_sparse("Q think R ANSWER:", &[("42", 0.9), ("17", 0.1)], Some(1.0))?;

    let prompt = m.vocab().encode("Q")?;
    let cfg = BranchConfig::new(0.5, 0.5, 2, 4);
    let tree = decode_tree(&m, &prompt, &cfg, 2024)?;
    print_node(&tree, m.vocab(), DecodingTree::ROOT, 0);

    println!("\n{} leaves, {} scoring calls", tree.leaf_count(), tree.steps);
    for leaf in tree.collect_leaves(m.vocab()) {
        println!("  {:<20} logp={:.4} forks at {:?}", leaf.text, leaf.cum_logprob, leaf.branch_positions);
    }

    let chain = decode_chain(&m, &prompt, &cfg.sampler, cfg.max_tokens, 2024)?;
    println!("single chain with the same seed: {}", chain.text);

    let dump = tree.to_dump_string(Some(m.vocab()))?;
    println!("\ndump: {} bytes, round-trips: {}", dump.len(), DecodingTree::from_dump_str(&dump)? == tree);
    Ok(())
}
