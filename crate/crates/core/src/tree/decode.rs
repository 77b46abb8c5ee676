use rand::Rng;
use rayon::prelude::*;

use super::{
    allowed_children, branch_tokens, should_branch, BranchConfig, DecodingTree, FinishReason,
    LeafSequence, NodeId, TreeNode,
};
use crate::error::{Error, Result};
use crate::model::{LanguageModel, StepOutput, TokenId};
use crate::sampling::token_entropy;
use crate::seed::{path_seed, rng_from_seed, DecodeRng};

/// Decides whether a position may fork.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchGate {
    /// Entropy and importance thresholds from the [`BranchConfig`].
    Entropy,
    /// Fork with a fixed probability per position, ignoring both signals.
    /// The draw comes from the path's own generator and is only made while
    /// the leaf budget still allows a fork.
    Random { rate: f64 },
}

struct ActivePath {
    node: NodeId,
    generated: Vec<TokenId>,
    /// Child indices from the root; keys the path's generator.
    id: Vec<usize>,
    rng: DecodeRng,
}

/// Entropy-gated tree decode with the thresholds in `config`.
pub fn decode_tree<M: LanguageModel + ?Sized>(
    model: &M,
    prompt: &[TokenId],
    config: &BranchConfig,
    master_seed: u64,
) -> Result<DecodingTree> {
    decode_tree_with(model, prompt, config, BranchGate::Entropy, master_seed)
}

/// Tree decode with an explicit gate.
///
/// All active paths are scored concurrently on the current rayon pool; the
/// fork decisions are then applied one path at a time in queue order, so the
/// resulting tree does not depend on the number of worker threads.
pub fn decode_tree_with<M: LanguageModel + ?Sized>(
    model: &M,
    prompt: &[TokenId],
    config: &BranchConfig,
    gate: BranchGate,
    master_seed: u64,
) -> Result<DecodingTree> {
    let vocab = model.vocab();
    config.validate(vocab.len())?;
    vocab.check_ids(prompt)?;
    if let BranchGate::Random { rate } = gate {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::input(format!("random branch rate {rate} is outside [0, 1]")));
        }
    }
    let eos = vocab.eos();

    let mut tree = DecodingTree {
        prompt: prompt.to_vec(),
        nodes: vec![TreeNode {
            parent: None,
            token: None,
            entropy: 0.0,
            importance: None,
            logprob: 0.0,
            children: Vec::new(),
            branched: false,
            finish: None,
        }],
        steps: 0,
    };
    let mut leaves = 1usize;
    let mut frontier = vec![ActivePath {
        node: DecodingTree::ROOT,
        generated: Vec::new(),
        id: Vec::new(),
        rng: rng_from_seed(path_seed(master_seed, &[])),
    }];

    while !frontier.is_empty() {
        let score = |path: &ActivePath| -> Result<StepOutput> {
            let mut prefix = Vec::with_capacity(prompt.len() + path.generated.len());
            prefix.extend_from_slice(prompt);
            prefix.extend_from_slice(&path.generated);
            model.score_next(&prefix).map_err(|e| Error::Path {
                path: path.id.clone(),
                source: Box::new(e),
            })
        };
        let outputs: Vec<Result<StepOutput>> = if frontier.len() > 1 {
            frontier.par_iter().map(score).collect()
        } else {
            frontier.iter().map(score).collect()
        };

        let mut next = Vec::with_capacity(frontier.len());
        for (mut path, out) in frontier.into_iter().zip(outputs) {
            let out = out?;
            tree.steps += 1;
            let entropy = token_entropy(&out.dist);
            let budget = allowed_children(leaves, config.b, config.n_tree);
            let fork = budget >= 2
                && match gate {
                    BranchGate::Entropy => should_branch(entropy, out.importance, config.tau, config.delta),
                    BranchGate::Random { rate } => rate > 0.0 && path.rng.random::<f64>() < rate,
                };
            let choices = if fork { branch_tokens(&out.dist, budget) } else { Vec::new() };

            if choices.len() >= 2 {
                tree.nodes[path.node].branched = true;
                leaves += choices.len() - 1;
                for (i, (token, logprob)) in choices.into_iter().enumerate() {
                    let mut id = path.id.clone();
                    id.push(i);
                    let rng = rng_from_seed(path_seed(master_seed, &id));
                    let mut generated = path.generated.clone();
                    generated.push(token);
                    let child = push_child(&mut tree, path.node, token, entropy, out.importance, logprob);
                    let child_path = ActivePath {
                        node: child,
                        generated,
                        id,
                        rng,
                    };
                    advance(&mut tree, child_path, eos, config.max_tokens, &mut next);
                }
            } else {
                let token = config.sampler.select(&out.dist, &mut path.rng)?;
                let logprob = out.dist.prob(token).ln();
                path.node = push_child(&mut tree, path.node, token, entropy, out.importance, logprob);
                path.generated.push(token);
                advance(&mut tree, path, eos, config.max_tokens, &mut next);
            }
        }
        frontier = next;
    }
    Ok(tree)
}

fn push_child(
    tree: &mut DecodingTree,
    parent: NodeId,
    token: TokenId,
    entropy: f64,
    importance: Option<f64>,
    logprob: f64,
) -> NodeId {
    let id = tree.nodes.len();
    tree.nodes.push(TreeNode {
        parent: Some(parent),
        token: Some(token),
        entropy,
        importance,
        logprob,
        children: Vec::new(),
        branched: false,
        finish: None,
    });
    tree.nodes[parent].children.push(id);
    id
}

/// Marks the path finished or requeues it.
fn advance(tree: &mut DecodingTree, path: ActivePath, eos: TokenId, max_tokens: usize, queue: &mut Vec<ActivePath>) {
    let last = *path.generated.last().expect("advanced paths hold a token");
    if last == eos {
        tree.nodes[path.node].finish = Some(FinishReason::Eos);
    } else if path.generated.len() >= max_tokens {
        tree.nodes[path.node].finish = Some(FinishReason::MaxTokens);
    } else {
        queue.push(path);
    }
}

/// One sampled generation. Identical to the single leaf of [`decode_tree`]
/// with a leaf budget of 1 and the same seed.
pub fn decode_chain<M: LanguageModel + ?Sized>(
    model: &M,
    prompt: &[TokenId],
    sampler: &crate::sampling::SamplerConfig,
    max_tokens: usize,
    seed: u64,
) -> Result<LeafSequence> {
    let config = chain_config(sampler, max_tokens);
    let tree = decode_tree(model, prompt, &config, seed)?;
    let mut leaves = tree.collect_leaves(model.vocab());
    debug_assert_eq!(leaves.len(), 1);
    Ok(leaves.remove(0))
}

pub(crate) fn chain_config(sampler: &crate::sampling::SamplerConfig, max_tokens: usize) -> BranchConfig {
    BranchConfig {
        tau: 0.0,
        delta: 0.0,
        b: 2,
        n_tree: 1,
        max_tokens,
        sampler: sampler.clone(),
    }
}
