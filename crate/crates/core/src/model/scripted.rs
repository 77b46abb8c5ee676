use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LanguageModel, StepOutput, TokenDistribution, TokenId, Vocabulary};
use crate::error::{Error, Result};

/// Table-driven backend: exact prefixes map to scripted step outputs, every
/// other prefix gets the fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedModel {
    vocab: Vocabulary,
    table: HashMap<Vec<TokenId>, StepOutput>,
    default: StepOutput,
}

impl ScriptedModel {
    /// Empty table whose fallback is one-hot on the end-of-sequence token
    /// with importance 1.
    pub fn new(vocab: Vocabulary) -> Self {
        let default = StepOutput {
            dist: TokenDistribution::one_hot(vocab.len(), vocab.eos()),
            importance: Some(1.0),
        };
        Self {
            vocab,
            table: HashMap::new(),
            default,
        }
    }

    pub fn with_default(mut self, default: StepOutput) -> Result<Self> {
        self.check_len(&default.dist)?;
        self.default = default;
        Ok(self)
    }

    pub fn insert(
        &mut self,
        prefix: Vec<TokenId>,
        dist: TokenDistribution,
        importance: Option<f64>,
    ) -> Result<()> {
        self.vocab.check_ids(&prefix)?;
        self.check_len(&dist)?;
        self.table.insert(prefix, StepOutput::new(dist, importance)?);
        Ok(())
    }

    /// Like [`insert`](Self::insert) with a whitespace-separated prefix and a
    /// sparse `(token, probability)` list.
    pub fn insert_sparse(
        &mut self,
        prefix: &str,
        entries: &[(&str, f64)],
        importance: Option<f64>,
    ) -> Result<()> {
        let ids = self.vocab.encode(prefix)?;
        let mut probs = vec![0.0; self.vocab.len()];
        for &(tok, p) in entries {
            let id = self
                .vocab
                .id(tok)
                .ok_or_else(|| Error::UnknownToken(tok.to_string()))?;
            probs[id] += p;
        }
        let dist = TokenDistribution::new(probs)?;
        self.insert(ids, dist, importance)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn default_output(&self) -> &StepOutput {
        &self.default
    }

    fn check_len(&self, dist: &TokenDistribution) -> Result<()> {
        if dist.len() != self.vocab.len() {
            return Err(Error::InvalidDistribution(format!(
                "distribution has {} entries, vocabulary has {}",
                dist.len(),
                self.vocab.len()
            )));
        }
        Ok(())
    }

    /// Serializes to the scripted-model text format. Records are sorted by
    /// prefix so the output is stable.
    pub fn to_file_string(&self) -> Result<String> {
        let mut entries: Vec<(&Vec<TokenId>, &StepOutput)> = self.table.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        let file = ScriptFile {
            tokens: self.vocab.tokens().to_vec(),
            eos: self.vocab.token(self.vocab.eos()).unwrap_or_default().to_string(),
            default: Some(self.default.dist.probs().to_vec()),
            default_importance: self.default.importance,
            record: entries
                .into_iter()
                .map(|(prefix, out)| {
                    toml::Value::try_from(ScriptRecord {
                        prefix: self.vocab.decode_all(prefix),
                        probs: out.dist.probs().to_vec(),
                        importance: out.importance,
                    })
                    .map_err(|e| Error::input(e.to_string()))
                })
                .collect::<Result<_>>()?,
        };
        toml::to_string(&file).map_err(|e| Error::input(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_atomic(path.as_ref(), self.to_file_string()?.as_bytes())
    }

    /// Parses the scripted-model text format. `origin` is only used in error
    /// messages.
    pub fn from_file_str(text: &str, origin: &Path) -> Result<Self> {
        let file: ScriptFile = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            record: "header".into(),
            message: e.to_string(),
        })?;
        let invalid = |record: String, message: String| Error::Parse {
            path: origin.to_path_buf(),
            record,
            message,
        };
        let vocab = Vocabulary::new(file.tokens.iter().cloned(), &file.eos)
            .map_err(|e| invalid("header".into(), e.to_string()))?;
        let mut model = ScriptedModel::new(vocab);
        if let Some(probs) = file.default {
            let dist = TokenDistribution::from_file_probs(probs).map_err(|e| Error::Validation {
                path: origin.to_path_buf(),
                message: format!("default: {e}"),
            })?;
            let importance = file.default_importance.or(Some(1.0));
            model = model
                .with_default(StepOutput::new(dist, importance)?)
                .map_err(|e| invalid("default".into(), e.to_string()))?;
        }
        for (i, raw) in file.record.into_iter().enumerate() {
            let rec: ScriptRecord = raw
                .try_into()
                .map_err(|e: toml::de::Error| invalid(format!("#{}", i + 1), e.message().to_string()))?;
            let label = format!("#{} (prefix {:?})", i + 1, rec.prefix);
            let prefix = model
                .vocab
                .encode(&rec.prefix)
                .map_err(|e| invalid(label.clone(), e.to_string()))?;
            if rec.probs.len() != model.vocab.len() {
                return Err(invalid(
                    label,
                    format!(
                        "probs has {} entries, vocabulary has {}",
                        rec.probs.len(),
                        model.vocab.len()
                    ),
                ));
            }
            let dist = TokenDistribution::from_file_probs(rec.probs).map_err(|e| Error::Validation {
                path: origin.to_path_buf(),
                message: format!("record {label}: {e}"),
            })?;
            if model.table.contains_key(&prefix) {
                return Err(invalid(label, "duplicate prefix".into()));
            }
            model
                .insert(prefix, dist, Some(rec.importance.unwrap_or(1.0)))
                .map_err(|e| invalid(label, e.to_string()))?;
        }
        Ok(model)
    }
}

impl Vocabulary {
    /// Space-joined rendering that keeps the end-of-sequence token.
    fn decode_all(&self, ids: &[TokenId]) -> String {
        ids.iter()
            .filter_map(|&id| self.token(id))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl LanguageModel for ScriptedModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn score_next(&self, prefix: &[TokenId]) -> Result<StepOutput> {
        self.vocab.check_ids(prefix)?;
        Ok(self.table.get(prefix).unwrap_or(&self.default).clone())
    }
}

/// Reads a scripted model from disk.
pub fn load_scripted(path: impl AsRef<Path>) -> Result<ScriptedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    ScriptedModel::from_file_str(&text, path)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptFile {
    tokens: Vec<String>,
    eos: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default_importance: Option<f64>,
    #[serde(default)]
    record: Vec<toml::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptRecord {
    prefix: String,
    probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    importance: Option<f64>,
}
