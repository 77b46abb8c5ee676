use super::{LanguageModel, StepOutput, TokenDistribution, TokenId, Vocabulary};
use crate::error::{Error, Result};

/// Single-head causal self-attention over fixed token embeddings.
///
/// Used both as a tiny language model (tied-embedding readout of the attended
/// context) and as the reference implementation of the importance signal:
/// the largest attention weight a position puts on any earlier position.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyAttentionLayer {
    vocab: Vocabulary,
    /// One row of `d_model` values per token.
    embed: Vec<Vec<f64>>,
    /// `d_model x d_k`
    w_q: Vec<Vec<f64>>,
    /// `d_model x d_k`
    w_k: Vec<Vec<f64>>,
    d_k: usize,
}

impl ToyAttentionLayer {
    pub fn new(
        vocab: Vocabulary,
        embed: Vec<Vec<f64>>,
        w_q: Vec<Vec<f64>>,
        w_k: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if embed.len() != vocab.len() {
            return Err(Error::input(format!(
                "{} embeddings for a vocabulary of {}",
                embed.len(),
                vocab.len()
            )));
        }
        let d_model = embed[0].len();
        if d_model == 0 || embed.iter().any(|e| e.len() != d_model) {
            return Err(Error::input("embeddings must share a positive width"));
        }
        let d_k = w_q.first().map_or(0, Vec::len);
        let shape_ok = |w: &Vec<Vec<f64>>| w.len() == d_model && w.iter().all(|r| r.len() == d_k);
        if d_k == 0 || !shape_ok(&w_q) || !shape_ok(&w_k) {
            return Err(Error::input(format!(
                "projection matrices must be {d_model} x d_k with d_k > 0"
            )));
        }
        let finite = |m: &Vec<Vec<f64>>| m.iter().flatten().all(|x| x.is_finite());
        if !finite(&embed) || !finite(&w_q) || !finite(&w_k) {
            return Err(Error::input("layer parameters must be finite"));
        }
        Ok(Self {
            vocab,
            embed,
            w_q,
            w_k,
            d_k,
        })
    }

    pub fn d_model(&self) -> usize {
        self.embed[0].len()
    }

    pub fn d_k(&self) -> usize {
        self.d_k
    }

    pub fn embedding(&self, id: TokenId) -> &[f64] {
        &self.embed[id]
    }

    pub fn w_q(&self) -> &[Vec<f64>] {
        &self.w_q
    }

    pub fn w_k(&self) -> &[Vec<f64>] {
        &self.w_k
    }

    fn project(&self, x: &[f64], w: &[Vec<f64>]) -> Vec<f64> {
        (0..self.d_k)
            .map(|c| x.iter().zip(w).map(|(xi, row)| xi * row[c]).sum())
            .collect()
    }

    /// Row-softmax of the causally masked scaled scores `Q K^T / sqrt(d_k)`.
    /// Row `t` is zero beyond column `t`.
    pub fn attention_matrix(&self, prefix: &[TokenId]) -> Result<Vec<Vec<f64>>> {
        if prefix.is_empty() {
            return Err(Error::input("attention needs a non-empty prefix"));
        }
        self.vocab.check_ids(prefix)?;
        let queries: Vec<Vec<f64>> = prefix.iter().map(|&id| self.project(&self.embed[id], &self.w_q)).collect();
        let keys: Vec<Vec<f64>> = prefix.iter().map(|&id| self.project(&self.embed[id], &self.w_k)).collect();
        let scale = (self.d_k as f64).sqrt();
        let n = prefix.len();
        let mut a = vec![vec![0.0; n]; n];
        for (t, row) in a.iter_mut().enumerate() {
            let scores: Vec<f64> = (0..=t)
                .map(|j| dot(&queries[t], &keys[j]) / scale)
                .collect();
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            for (j, e) in exps.into_iter().enumerate() {
                row[j] = e / z;
            }
        }
        Ok(a)
    }

    /// Tied-embedding readout: logits are the dot products of every token
    /// embedding with the attention-weighted mean of the prefix embeddings
    /// as seen from the last position. The empty prefix scores uniformly.
    fn next_distribution(&self, prefix: &[TokenId]) -> Result<TokenDistribution> {
        if prefix.is_empty() {
            return Ok(TokenDistribution::uniform(self.vocab.len()));
        }
        let a = self.attention_matrix(prefix)?;
        let last = &a[prefix.len() - 1];
        let mut ctx = vec![0.0; self.d_model()];
        for (w, &id) in last.iter().zip(prefix) {
            for (c, e) in ctx.iter_mut().zip(&self.embed[id]) {
                *c += w * e;
            }
        }
        let logits: Vec<f64> = self.embed.iter().map(|e| dot(e, &ctx)).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        TokenDistribution::from_weights(logits.iter().map(|l| (l - max).exp()).collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximum attention weight on any strictly earlier position.
///
/// `row` holds the weights of one position over itself and its predecessors
/// (the last entry is self-attention). A single-entry row has no predecessor.
pub fn importance_score(row: &[f64]) -> Result<f64> {
    match row.split_last() {
        Some((_, preds)) if !preds.is_empty() => {
            Ok(preds.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        }
        _ => Err(Error::UndefinedImportance),
    }
}

impl LanguageModel for ToyAttentionLayer {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Importance is measured for the argmax token: it is appended to the
    /// prefix and its attention row is scored. With an empty prefix there is
    /// nothing to attend to and importance is absent.
    fn score_next(&self, prefix: &[TokenId]) -> Result<StepOutput> {
        self.vocab.check_ids(prefix)?;
        let dist = self.next_distribution(prefix)?;
        let importance = if prefix.is_empty() {
            None
        } else {
            let mut extended = prefix.to_vec();
            extended.push(dist.ranked()[0]);
            let a = self.attention_matrix(&extended)?;
            let t = extended.len() - 1;
            Some(importance_score(&a[t][..=t])?)
        };
        StepOutput::new(dist, importance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab3() -> Vocabulary {
        Vocabulary::new(["x", "y", "EOS"], "EOS").unwrap()
    }

    fn zero_layer() -> ToyAttentionLayer {
        ToyAttentionLayer::new(
            vocab3(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]],
            vec![vec![0.0; 2]; 2],
            vec![vec![0.0; 2]; 2],
        )
        .unwrap()
    }

    #[test]
    fn zero_projections_give_uniform_causal_rows() {
        let a = zero_layer().attention_matrix(&[0, 1, 2, 0]).unwrap();
        for (t, row) in a.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                let expected = if j <= t { 1.0 / (t + 1) as f64 } else { 0.0 };
                assert!((w - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_position_matrix() {
        assert_eq!(zero_layer().attention_matrix(&[1]).unwrap(), vec![vec![1.0]]);
    }

    #[test]
    fn empty_prefix_is_rejected() {
        assert!(zero_layer().attention_matrix(&[]).is_err());
    }

    #[test]
    fn importance_examples() {
        assert_eq!(importance_score(&[0.25; 4]).unwrap(), 0.25);
        assert_eq!(importance_score(&[0.1, 0.7, 0.2]).unwrap(), 0.7);
        assert_eq!(importance_score(&[0.05, 0.05, 0.9]).unwrap(), 0.05);
        assert!(matches!(importance_score(&[1.0]), Err(Error::UndefinedImportance)));
    }

    #[test]
    fn shape_validation() {
        assert!(ToyAttentionLayer::new(vocab3(), vec![vec![1.0]; 2], vec![vec![1.0]], vec![vec![1.0]]).is_err());
        assert!(ToyAttentionLayer::new(vocab3(), vec![vec![1.0]; 3], vec![vec![1.0, 2.0]], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn score_next_reports_importance_after_first_token() {
        let layer = zero_layer();
        assert_eq!(layer.score_next(&[]).unwrap().importance, None);
        // Uniform rows: the appended token at position 3 sees 1/3 everywhere.
        let out = layer.score_next(&[0, 1]).unwrap();
        assert!((out.importance.unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let sum: f64 = out.dist.probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}
