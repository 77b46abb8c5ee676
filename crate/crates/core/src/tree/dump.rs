use serde::{Deserialize, Serialize};

use super::{DecodingTree, FinishReason};
use crate::error::{Error, Result};
use crate::model::{TokenId, Vocabulary};

/// A finished root-to-leaf generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafSequence {
    pub tokens: Vec<TokenId>,
    /// Space-joined tokens, end-of-sequence omitted.
    pub text: String,
    pub cum_logprob: f64,
    pub length: usize,
    /// Indices into `tokens` that were produced by a fork.
    pub branch_positions: Vec<usize>,
    pub finish: FinishReason,
}

impl DecodingTree {
    /// One sequence per leaf, in depth-first order.
    pub fn collect_leaves(&self, vocab: &Vocabulary) -> Vec<LeafSequence> {
        self.leaf_ids()
            .into_iter()
            .map(|leaf| {
                let mut chain = Vec::new();
                let mut cur = leaf;
                while let Some(p) = self.nodes[cur].parent {
                    chain.push(cur);
                    cur = p;
                }
                chain.reverse();
                let tokens: Vec<TokenId> = chain.iter().filter_map(|&n| self.nodes[n].token).collect();
                let cum_logprob = chain.iter().map(|&n| self.nodes[n].logprob).sum();
                let branch_positions = chain
                    .iter()
                    .enumerate()
                    .filter(|(_, &n)| self.nodes[n].parent.is_some_and(|p| self.nodes[p].branched))
                    .map(|(i, _)| i)
                    .collect();
                LeafSequence {
                    text: vocab.decode(&tokens),
                    length: tokens.len(),
                    tokens,
                    cum_logprob,
                    branch_positions,
                    finish: self.nodes[leaf].finish.unwrap_or(FinishReason::MaxTokens),
                }
            })
            .collect()
    }

    /// Mean generated depth at which forks happened.
    pub fn mean_branch_depth(&self) -> Option<f64> {
        let depths: Vec<usize> = self.branched_ids().map(|id| self.depth(id)).collect();
        if depths.is_empty() {
            None
        } else {
            Some(depths.iter().sum::<usize>() as f64 / depths.len() as f64)
        }
    }

    /// JSON dump: `{"prompt", "steps", "nodes": [{parent, token, entropy,
    /// importance, logprob, children, branched, finish}]}`, plus the
    /// vocabulary when given so the file can be read on its own.
    pub fn to_dump_string(&self, vocab: Option<&Vocabulary>) -> Result<String> {
        let dump = TreeDump {
            vocabulary: vocab.map(|v| v.tokens().to_vec()),
            tree: self.clone(),
        };
        let mut s = serde_json::to_string_pretty(&dump)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_dump_str(text: &str) -> Result<Self> {
        let dump: TreeDump = serde_json::from_str(text)?;
        let tree = dump.tree;
        let ok = !tree.nodes.is_empty()
            && tree.nodes[0].parent.is_none()
            && tree.nodes.iter().enumerate().all(|(i, n)| {
                n.children.iter().all(|&c| c < tree.nodes.len() && tree.nodes[c].parent == Some(i))
            });
        if !ok {
            return Err(Error::input("tree dump has inconsistent parent/child links"));
        }
        Ok(tree)
    }
}

#[derive(Serialize, Deserialize)]
struct TreeDump {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vocabulary: Option<Vec<String>>,
    #[serde(flatten)]
    tree: DecodingTree,
}
