//! Autoregressive model abstraction and the reference backends.
//!
//! A backend maps a token prefix (prompt followed by generated tokens) to a
//! [`StepOutput`]: the next-token distribution plus an optional importance
//! score for the distribution's most likely token. Backends are immutable
//! once built, so a single instance can be scored from many threads.

mod attention;
mod ngram;
mod scripted;

use std::collections::HashMap;

pub use attention::{importance_score, ToyAttentionLayer};
pub use ngram::{train_ngram, NGramModel, BOS_TOKEN};
pub use scripted::{load_scripted, ScriptedModel};

use crate::error::{Error, Result};

pub type TokenId = usize;

/// Distributions loaded from disk may drift this far from 1 before being
/// renormalized; anything beyond is rejected.
pub const FILE_SUM_TOLERANCE: f64 = 1e-6;

/// Tolerance of the in-memory distribution invariant.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    eos: TokenId,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>, eos: &str) -> Result<Self> {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.len() < 2 {
            return Err(Error::input(format!(
                "vocabulary needs at least 2 tokens, got {}",
                tokens.len()
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, tok) in tokens.iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::input(format!(
                    "token {tok:?} is empty or contains whitespace"
                )));
            }
            if index.insert(tok.clone(), id).is_some() {
                return Err(Error::input(format!("duplicate token {tok:?}")));
            }
        }
        let eos = *index
            .get(eos)
            .ok_or_else(|| Error::input(format!("eos token {eos:?} is not in the vocabulary")))?;
        Ok(Self { tokens, eos, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn eos(&self) -> TokenId {
        self.eos
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    /// Whitespace tokenization against this vocabulary.
    pub fn encode(&self, text: &str) -> Result<Vec<TokenId>> {
        text.split_whitespace()
            .map(|t| self.id(t).ok_or_else(|| Error::UnknownToken(t.to_string())))
            .collect()
    }

    /// Space-joined rendering. The end-of-sequence token is not rendered.
    pub fn decode(&self, ids: &[TokenId]) -> String {
        ids.iter()
            .filter(|&&id| id != self.eos)
            .filter_map(|&id| self.token(id))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn check_ids(&self, ids: &[TokenId]) -> Result<()> {
        match ids.iter().find(|&&id| id >= self.len()) {
            Some(&id) => Err(Error::UnknownTokenId {
                id,
                size: self.len(),
            }),
            None => Ok(()),
        }
    }
}

/// Probability vector over a vocabulary for one decoding step.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDistribution {
    probs: Vec<f64>,
}

impl TokenDistribution {
    /// Wraps an already-normalized vector; entries must lie in [0, 1] and sum
    /// to 1 within [`SUM_TOLERANCE`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_entries(&probs)?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!("invalid weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 || !sum.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {sum}, cannot normalize"
            )));
        }
        let probs = weights.into_iter().map(|w| w / sum).collect();
        Ok(Self { probs })
    }

    pub fn uniform(size: usize) -> Self {
        Self {
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn one_hot(size: usize, id: TokenId) -> Self {
        let mut probs = vec![0.0; size];
        probs[id] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, id: TokenId) -> f64 {
        self.probs[id]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    /// Token ids ordered by descending probability, ties by lowest id.
    pub fn ranked(&self) -> Vec<TokenId> {
        let mut ids: Vec<TokenId> = (0..self.probs.len()).collect();
        ids.sort_by(|&a, &b| self.probs[b].total_cmp(&self.probs[a]).then(a.cmp(&b)));
        ids
    }

    /// Accepts a vector whose sum is within [`FILE_SUM_TOLERANCE`] of 1 and
    /// renormalizes it when it misses the tighter in-memory tolerance.
    pub(crate) fn from_file_probs(probs: Vec<f64>) -> Result<Self> {
        check_entries(&probs)?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > FILE_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {sum}, expected 1 within {FILE_SUM_TOLERANCE}"
            )));
        }
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            Self::from_weights(probs)
        } else {
            Ok(Self { probs })
        }
    }
}

fn check_entries(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty probability vector".into()));
    }
    match probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
        Some(i) => Err(Error::InvalidDistribution(format!(
            "entry {i} = {} is outside [0, 1]",
            probs[i]
        ))),
        None => Ok(()),
    }
}

/// Result of scoring one prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub dist: TokenDistribution,
    /// Importance of the distribution's argmax token; `None` when the
    /// backend cannot provide one.
    pub importance: Option<f64>,
}

impl StepOutput {
    pub fn new(dist: TokenDistribution, importance: Option<f64>) -> Result<Self> {
        if let Some(i) = importance {
            if !(0.0..=1.0).contains(&i) {
                return Err(Error::input(format!("importance {i} is outside [0, 1]")));
            }
        }
        Ok(Self { dist, importance })
    }
}

/// A next-token scorer. Implementations must be pure functions of the prefix.
pub trait LanguageModel: Send + Sync {
    fn vocab(&self) -> &Vocabulary;

    fn score_next(&self, prefix: &[TokenId]) -> Result<StepOutput>;
}

impl<M: LanguageModel + ?Sized> LanguageModel for &M {
    fn vocab(&self) -> &Vocabulary {
        (**self).vocab()
    }

    fn score_next(&self, prefix: &[TokenId]) -> Result<StepOutput> {
        (**self).score_next(prefix)
    }
}

impl<M: LanguageModel + ?Sized> LanguageModel for Box<M> {
    fn vocab(&self) -> &Vocabulary {
        (**self).vocab()
    }

    fn score_next(&self, prefix: &[TokenId]) -> Result<StepOutput> {
        (**self).score_next(prefix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_rejects_duplicates_and_missing_eos() {
        assert!(Vocabulary::new(["a", "a", "EOS"], "EOS").is_err());
        assert!(Vocabulary::new(["a", "b"], "EOS").is_err());
        assert!(Vocabulary::new(["EOS"], "EOS").is_err());
        let v = Vocabulary::new(["a", "b", "EOS"], "EOS").unwrap();
        assert_eq!(v.eos(), 2);
        assert_eq!(v.encode("b a").unwrap(), vec![1, 0]);
        assert!(matches!(v.encode("c"), Err(Error::UnknownToken(_))));
        assert_eq!(v.decode(&[0, 1, 2]), "a b");
    }

    #[test]
    fn distribution_invariants() {
        assert!(TokenDistribution::new(vec![0.6, 0.5]).is_err());
        assert!(TokenDistribution::new(vec![1.2, -0.2]).is_err());
        assert!(TokenDistribution::new(vec![0.5, 0.5]).is_ok());
        let d = TokenDistribution::from_weights(vec![1.0, 3.0]).unwrap();
        assert_eq!(d.probs(), &[0.25, 0.75]);
        assert!(TokenDistribution::from_weights(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn ranking_breaks_ties_by_lowest_id() {
        let d = TokenDistribution::new(vec![0.2, 0.4, 0.4]).unwrap();
        assert_eq!(d.ranked(), vec![1, 2, 0]);
    }

    #[test]
    fn step_output_rejects_out_of_range_importance() {
        let d = TokenDistribution::uniform(2);
        assert!(StepOutput::new(d.clone(), Some(1.5)).is_err());
        assert!(StepOutput::new(d, None).is_ok());
    }
}
