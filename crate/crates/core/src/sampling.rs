//! Token-selection primitives: entropy, greedy choice, top-k / top-p
//! truncation, temperature, and seeded categorical sampling.
//!
//! Combined truncation always runs top-k, then top-p, then temperature.
//! Entropy is measured on the untruncated model distribution.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{TokenDistribution, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Greedy,
    TopK,
    TopP,
    TopKThenTopP,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub strategy: Strategy,
    /// `None` keeps the whole vocabulary.
    pub k: Option<usize>,
    pub p: f64,
    pub temperature: f64,
    /// Carried for serialization only. Decoders take their seed as an
    /// argument and never read this field.
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::TopKThenTopP,
            k: None,
            p: 1.0,
            temperature: 1.0,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn greedy() -> Self {
        Self {
            strategy: Strategy::Greedy,
            ..Self::default()
        }
    }

    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        if let Some(k) = self.k {
            if k == 0 || k > vocab_size {
                return Err(Error::input(format!(
                    "top-k requires 1 <= k <= {vocab_size}, got {k}"
                )));
            }
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::input(format!("top-p requires p in (0, 1], got {}", self.p)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::input(format!(
                "temperature must be > 0, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    /// The distribution actually sampled from under this configuration.
    pub fn prepare(&self, dist: &TokenDistribution) -> Result<TokenDistribution> {
        let k = self.k.unwrap_or(dist.len());
        let truncated = match self.strategy {
            Strategy::Greedy => return Ok(TokenDistribution::one_hot(dist.len(), greedy_select(dist))),
            Strategy::TopK => truncate_top_k(dist, k)?,
            Strategy::TopP => truncate_top_p(dist, self.p)?,
            Strategy::TopKThenTopP => truncate_top_p(&truncate_top_k(dist, k)?, self.p)?,
        };
        apply_temperature(&truncated, self.temperature)
    }

    /// Picks the next token. Greedy selection does not touch `rng`.
    pub fn select<R: Rng + ?Sized>(&self, dist: &TokenDistribution, rng: &mut R) -> Result<TokenId> {
        match self.strategy {
            Strategy::Greedy => Ok(greedy_select(dist)),
            _ => Ok(sample(&self.prepare(dist)?, rng)),
        }
    }
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn token_entropy(dist: &TokenDistribution) -> f64 {
    let h: f64 = dist
        .probs()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    h.max(0.0)
}

/// Argmax, ties to the lowest id.
pub fn greedy_select(dist: &TokenDistribution) -> TokenId {
    let mut best = 0;
    for (i, &p) in dist.probs().iter().enumerate() {
        if p > dist.probs()[best] {
            best = i;
        }
    }
    best
}

fn keep_and_renormalize(dist: &TokenDistribution, keep: &[TokenId]) -> Result<TokenDistribution> {
    let mut weights = vec![0.0; dist.len()];
    for &id in keep {
        weights[id] = dist.prob(id);
    }
    TokenDistribution::from_weights(weights)
}

/// Zeroes everything outside the `k` most likely tokens and renormalizes.
pub fn truncate_top_k(dist: &TokenDistribution, k: usize) -> Result<TokenDistribution> {
    if k == 0 || k > dist.len() {
        return Err(Error::input(format!(
            "top-k requires 1 <= k <= {}, got {k}",
            dist.len()
        )));
    }
    if k == dist.len() {
        return Ok(dist.clone());
    }
    keep_and_renormalize(dist, &dist.ranked()[..k])
}

/// Slack on the cumulative-mass comparison of [`truncate_top_p`], absorbing
/// rounding in the running sum.
pub const TOP_P_SLACK: f64 = 1e-12;

/// Keeps the shortest descending-probability prefix whose mass reaches `p`
/// (up to [`TOP_P_SLACK`]).
pub fn truncate_top_p(dist: &TokenDistribution, p: f64) -> Result<TokenDistribution> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::input(format!("top-p requires p in (0, 1], got {p}")));
    }
    if p == 1.0 {
        return Ok(dist.clone());
    }
    let ranked = dist.ranked();
    let mut mass = 0.0;
    let mut m = ranked.len();
    for (i, &id) in ranked.iter().enumerate() {
        mass += dist.prob(id);
        if mass >= p - TOP_P_SLACK {
            m = i + 1;
            break;
        }
    }
    if m == ranked.len() {
        return Ok(dist.clone());
    }
    keep_and_renormalize(dist, &ranked[..m])
}

/// `p_i^(1/T)` renormalized, evaluated in log space.
pub fn apply_temperature(dist: &TokenDistribution, temperature: f64) -> Result<TokenDistribution> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::input(format!("temperature must be > 0, got {temperature}")));
    }
    if temperature == 1.0 {
        return Ok(dist.clone());
    }
    let scaled: Vec<f64> = dist
        .probs()
        .iter()
        .map(|&p| if p > 0.0 { p.ln() / temperature } else { f64::NEG_INFINITY })
        .collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    TokenDistribution::from_weights(scaled.iter().map(|s| (s - max).exp()).collect())
}

/// Draws one token; consumes randomness from `rng` only.
pub fn sample<R: Rng + ?Sized>(dist: &TokenDistribution, rng: &mut R) -> TokenId {
    let index = WeightedIndex::new(dist.probs()).expect("valid distribution has positive mass");
    index.sample(rng)
}
