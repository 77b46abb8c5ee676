use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One evaluation problem. The prompt is whitespace-tokenized against the
/// model vocabulary at run time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemRecord {
    pub id: String,
    pub prompt: String,
    /// Gold answer.
    pub answer: String,
}

impl ProblemRecord {
    pub fn new(id: impl Into<String>, prompt: impl Into<String>, answer: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            prompt: prompt.into(),
            answer: answer.into(),
        }
    }
}

/// Parses a JSON-lines dataset (`{"id", "prompt", "answer"}` per line).
/// Blank lines are skipped; errors cite the 1-based line number.
pub fn parse_dataset(text: &str, origin: &Path) -> Result<Vec<ProblemRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            record: format!("line {}", i + 1),
            message,
        };
        let rec: ProblemRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if !seen.insert(rec.id.clone()) {
            return Err(err(format!("duplicate problem id {:?}", rec.id)));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<ProblemRecord>> {
    let path = path.as_ref();
    parse_dataset(&fs::read_to_string(path)?, path)
}

pub fn dataset_to_string(problems: &[ProblemRecord]) -> Result<String> {
    let mut s = String::new();
    for p in problems {
        s.push_str(&serde_json::to_string(p)?);
        s.push('\n');
    }
    Ok(s)
}
