use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LanguageModel, StepOutput, TokenDistribution, TokenId, Vocabulary};
use crate::error::{Error, Result};

/// Reserved left-padding symbol. It never appears in the scoring vocabulary.
pub const BOS_TOKEN: &str = "<s>";

/// Default end-of-sequence symbol added by [`train_ngram`] when the corpus
/// does not contain it.
pub const DEFAULT_EOS: &str = "</s>";

/// Context position: `None` is the reserved beginning-of-sequence pad.
type Context = Vec<Option<TokenId>>;

/// Add-alpha smoothed n-gram model.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    alpha: f64,
    vocab: Vocabulary,
    counts: BTreeMap<Context, Vec<u64>>,
}

/// Counts sliding-window n-grams over whitespace-tokenized sequences.
///
/// The vocabulary is the corpus tokens in order of first appearance followed
/// by [`DEFAULT_EOS`] if it was not already present. Sequences are not
/// terminated implicitly; include the end token in the corpus to learn it.
pub fn train_ngram<S: AsRef<str>>(corpus: &[S], order: usize, alpha: f64) -> Result<NGramModel> {
    if order < 1 {
        return Err(Error::input("n-gram order must be at least 1"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::input(format!("smoothing alpha must be > 0, got {alpha}")));
    }
    let sequences: Vec<Vec<&str>> = corpus
        .iter()
        .map(|line| line.as_ref().split_whitespace().collect::<Vec<_>>())
        .filter(|toks| !toks.is_empty())
        .collect();
    if sequences.is_empty() {
        return Err(Error::input("corpus contains no tokens"));
    }
    let mut tokens: Vec<String> = Vec::new();
    for tok in sequences.iter().flatten() {
        if *tok == BOS_TOKEN {
            return Err(Error::input(format!("{BOS_TOKEN} is reserved")));
        }
        if !tokens.iter().any(|t| t == tok) {
            tokens.push(tok.to_string());
        }
    }
    if !tokens.iter().any(|t| t == DEFAULT_EOS) {
        tokens.push(DEFAULT_EOS.to_string());
    }
    let vocab = Vocabulary::new(tokens, DEFAULT_EOS)?;
    let v = vocab.len();

    let mut counts: BTreeMap<Context, Vec<u64>> = BTreeMap::new();
    for seq in &sequences {
        let ids: Vec<TokenId> = seq.iter().map(|t| vocab.id(t).expect("token interned")).collect();
        for pos in 0..ids.len() {
            let ctx = context_at(&ids[..pos], order);
            counts.entry(ctx).or_insert_with(|| vec![0; v])[ids[pos]] += 1;
        }
    }
    Ok(NGramModel {
        order,
        alpha,
        vocab,
        counts,
    })
}

/// The last `order - 1` tokens of `history`, left-padded with BOS.
fn context_at(history: &[TokenId], order: usize) -> Context {
    let width = order - 1;
    let take = history.len().min(width);
    let mut ctx: Context = vec![None; width - take];
    ctx.extend(history[history.len() - take..].iter().map(|&id| Some(id)));
    ctx
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Raw counts following `history`'s context, zeros when unseen.
    pub fn counts_after(&self, history: &[TokenId]) -> Vec<u64> {
        self.counts
            .get(&context_at(history, self.order))
            .cloned()
            .unwrap_or_else(|| vec![0; self.vocab.len()])
    }

    pub fn to_file_string(&self) -> Result<String> {
        let name = |c: &Option<TokenId>| match c {
            None => BOS_TOKEN.to_string(),
            Some(id) => self.vocab.token(*id).unwrap_or_default().to_string(),
        };
        let file = NGramFile {
            order: self.order,
            alpha: self.alpha,
            tokens: self.vocab.tokens().to_vec(),
            eos: self.vocab.token(self.vocab.eos()).unwrap_or_default().to_string(),
            contexts: self
                .counts
                .iter()
                .map(|(ctx, counts)| ContextCounts {
                    context: ctx.iter().map(name).collect(),
                    counts: counts.clone(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file)?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_atomic(path.as_ref(), self.to_file_string()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let invalid = |message: String| Error::Validation {
            path: path.to_path_buf(),
            message,
        };
        let file: NGramFile = serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))?;
        if file.order < 1 || file.alpha.is_nan() || file.alpha <= 0.0 {
            return Err(invalid("order must be >= 1 and alpha > 0".into()));
        }
        let vocab = Vocabulary::new(file.tokens, &file.eos).map_err(|e| invalid(e.to_string()))?;
        let mut counts = BTreeMap::new();
        for entry in file.contexts {
            if entry.context.len() != file.order - 1 || entry.counts.len() != vocab.len() {
                return Err(invalid(format!("malformed context entry {:?}", entry.context)));
            }
            let ctx = entry
                .context
                .iter()
                .map(|t| match t.as_str() {
                    BOS_TOKEN => Ok(None),
                    tok => vocab.id(tok).map(Some).ok_or_else(|| invalid(format!("unknown token {tok:?}"))),
                })
                .collect::<Result<Context>>()?;
            counts.insert(ctx, entry.counts);
        }
        Ok(Self {
            order: file.order,
            alpha: file.alpha,
            vocab,
            counts,
        })
    }
}

impl LanguageModel for NGramModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// `(count + alpha) / (context_total + alpha * V)`; importance is always 1
    /// because the model has no attention to report.
    fn score_next(&self, prefix: &[TokenId]) -> Result<StepOutput> {
        self.vocab.check_ids(prefix)?;
        let counts = self.counts_after(prefix);
        let total: u64 = counts.iter().sum();
        let denom = total as f64 + self.alpha * self.vocab.len() as f64;
        let probs = counts
            .iter()
            .map(|&c| (c as f64 + self.alpha) / denom)
            .collect();
        Ok(StepOutput {
            dist: TokenDistribution::new(probs)?,
            importance: Some(1.0),
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct NGramFile {
    order: usize,
    alpha: f64,
    tokens: Vec<String>,
    eos: String,
    contexts: Vec<ContextCounts>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ContextCounts {
    context: Vec<String>,
    counts: Vec<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bigram_counts_and_probability() {
        let m = train_ngram(&["a b a b"], 2, 1.0).unwrap();
        let a = m.vocab().id("a").unwrap();
        let b = m.vocab().id("b").unwrap();
        assert_eq!(m.vocab().len(), 3);
        assert_eq!(m.counts_after(&[a])[b], 2);
        let out = m.score_next(&[a]).unwrap();
        assert!((out.dist.prob(b) - 0.6).abs() < 1e-15);
        assert_eq!(out.importance, Some(1.0));
    }

    #[test]
    fn unigram_single_token() {
        let m = train_ngram(&["a"], 1, 0.5).unwrap();
        assert_eq!(m.counts_after(&[]), vec![1, 0]);
        assert_eq!(m.counts_after(&[0, 0, 1]), vec![1, 0]);
    }

    #[test]
    fn short_context_is_bos_padded() {
        let m = train_ngram(&["a b c"], 3, 1.0).unwrap();
        // (BOS, BOS) -> a, (BOS, a) -> b, (a, b) -> c
        assert_eq!(m.counts_after(&[])[0], 1);
        assert_eq!(m.counts_after(&[0])[1], 1);
        assert_eq!(m.counts_after(&[0, 1])[2], 1);
    }

    #[test]
    fn empty_corpus_and_bad_parameters() {
        let empty: [&str; 0] = [];
        assert!(train_ngram(&empty, 2, 1.0).is_err());
        assert!(train_ngram(&["  "], 2, 1.0).is_err());
        assert!(train_ngram(&["a"], 0, 1.0).is_err());
        assert!(train_ngram(&["a"], 1, 0.0).is_err());
        assert!(train_ngram(&["<s> a"], 1, 1.0).is_err());
    }

    #[test]
    fn unseen_context_is_uniform() {
        let m = train_ngram(&["a b"], 2, 2.0).unwrap();
        let b = m.vocab().id("b").unwrap();
        let out = m.score_next(&[b]).unwrap();
        for p in out.dist.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }
}
