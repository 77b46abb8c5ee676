//! Entropy-gated tree decoding.
//!
//! Every active path is scored once per round. A position whose next-token
//! entropy reaches `tau` and whose argmax importance reaches `delta` forks
//! into the most likely tokens, as many as the leaf budget still allows;
//! every other position is sampled. Rounds advance all active paths by one
//! token in queue order, so shallower nodes are always expanded before deeper
//! ones. Once the tree holds `n_tree` leaves, every path samples to the end.

mod decode;
mod dump;

use serde::{Deserialize, Serialize};

pub use decode::{decode_chain, decode_tree, decode_tree_with, BranchGate};
pub(crate) use decode::chain_config;
pub use dump::LeafSequence;

use crate::error::{Error, Result};
use crate::model::{TokenDistribution, TokenId};
use crate::sampling::SamplerConfig;

pub const DEFAULT_MAX_TOKENS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    /// Entropy threshold in nats.
    pub tau: f64,
    /// Importance threshold.
    pub delta: f64,
    /// Branching factor.
    pub b: usize,
    /// Leaf budget.
    pub n_tree: usize,
    pub max_tokens: usize,
    #[serde(default)]
    pub sampler: SamplerConfig,
}

impl BranchConfig {
    pub fn new(tau: f64, delta: f64, b: usize, n_tree: usize) -> Self {
        Self {
            tau,
            delta,
            b,
            n_tree,
            max_tokens: DEFAULT_MAX_TOKENS,
            sampler: SamplerConfig::default(),
        }
    }

    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        if self.tau.is_nan() || self.tau < 0.0 {
            return Err(Error::input(format!("tau must be >= 0, got {}", self.tau)));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::input(format!("delta must lie in [0, 1], got {}", self.delta)));
        }
        if self.b < 2 {
            return Err(Error::input(format!("branching factor must be >= 2, got {}", self.b)));
        }
        if self.n_tree < 1 || self.max_tokens < 1 {
            return Err(Error::input("n_tree and max_tokens must be >= 1"));
        }
        self.sampler.validate(vocab_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Eos,
    MaxTokens,
}

pub type NodeId = usize;

/// One generated token. The root holds the prompt and no token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub parent: Option<NodeId>,
    pub token: Option<TokenId>,
    /// Entropy of the step distribution that produced this token.
    pub entropy: f64,
    /// Importance reported for that step, if any.
    pub importance: Option<f64>,
    /// Log-probability of this token under the step distribution.
    pub logprob: f64,
    pub children: Vec<NodeId>,
    /// This position was expanded into several children.
    pub branched: bool,
    /// Set on leaves.
    pub finish: Option<FinishReason>,
}

/// Prefix-sharing tree of generations. Node ids follow creation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingTree {
    pub prompt: Vec<TokenId>,
    pub nodes: Vec<TreeNode>,
    /// Number of model scoring calls (one per generated position per path).
    pub steps: usize,
}

impl DecodingTree {
    pub const ROOT: NodeId = 0;

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    /// Leaf ids in depth-first order, children visited in rank order.
    pub fn leaf_ids(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![Self::ROOT];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.children.is_empty() {
                if id != Self::ROOT {
                    out.push(id);
                }
            } else {
                stack.extend(node.children.iter().rev());
            }
        }
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_ids().len()
    }

    /// Number of generated tokens on the path ending at `id`.
    pub fn depth(&self, mut id: NodeId) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[id].parent {
            d += 1;
            id = p;
        }
        d
    }

    pub fn branched_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().enumerate().filter(|(_, n)| n.branched).map(|(i, _)| i)
    }

    pub fn branch_events(&self) -> usize {
        self.branched_ids().count()
    }

    /// Entropy and importance that triggered the fork at a branched node,
    /// as recorded on its children.
    pub fn fork_signal(&self, id: NodeId) -> Option<(f64, Option<f64>)> {
        let node = &self.nodes[id];
        if !node.branched {
            return None;
        }
        let first = &self.nodes[node.children[0]];
        Some((first.entropy, first.importance))
    }

    /// Tokens from the root down to `id`, excluding the prompt.
    pub fn path_tokens(&self, id: NodeId) -> Vec<TokenId> {
        let mut tokens = Vec::new();
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            tokens.extend(self.nodes[cur].token);
            cur = p;
        }
        tokens.reverse();
        tokens
    }
}

/// First gate: the step is uncertain enough to consider forking.
pub fn is_branch_candidate(entropy: f64, tau: f64) -> bool {
    entropy >= tau
}

/// Both gates. A backend that reports no importance passes the second gate.
pub fn should_branch(entropy: f64, importance: Option<f64>, tau: f64, delta: f64) -> bool {
    is_branch_candidate(entropy, tau) && importance.is_none_or(|i| i >= delta)
}

/// Children a fork may create with `leaves` leaves already in the tree.
/// Splitting one path into `c` children adds `c - 1` leaves, so the result
/// never pushes the tree past `n_tree`; 1 means no fork.
pub fn allowed_children(leaves: usize, b: usize, n_tree: usize) -> usize {
    b.min((n_tree + 1).saturating_sub(leaves)).max(1)
}

/// The `c` most likely tokens with their log-probabilities, descending, ties
/// to the lowest id. Zero-probability tokens are never returned, so a
/// degenerate distribution may yield fewer than `c`.
pub fn branch_tokens(dist: &TokenDistribution, c: usize) -> Vec<(TokenId, f64)> {
    dist.ranked()
        .into_iter()
        .filter(|&id| dist.prob(id) > 0.0)
        .take(c)
        .map(|id| (id, dist.prob(id).ln()))
        .collect()
}
