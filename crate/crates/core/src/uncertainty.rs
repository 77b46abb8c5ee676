//! Answer extraction and the answer-level uncertainty scores: predictive
//! entropy over the answer distribution, majority vote, length-normalized
//! predictive entropy, and lexical-similarity uncertainty.

use std::collections::BTreeMap;
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::LeafSequence;

/// An extracted answer. Extraction failure is a value of its own.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Answer {
    Text(String),
    NoAnswer,
}

impl Answer {
    pub fn text(s: impl Into<String>) -> Self {
        Answer::Text(s.into())
    }

    pub fn is_answer(&self) -> bool {
        matches!(self, Answer::Text(_))
    }

    /// Exact match after trimming.
    pub fn matches(&self, gold: &str) -> bool {
        matches!(self, Answer::Text(a) if a.trim() == gold.trim())
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Text(s) => f.write_str(s),
            Answer::NoAnswer => f.write_str("NO_ANSWER"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchPolicy {
    LastMatch,
    FirstMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    LastNumber,
    None,
}

pub const DEFAULT_ANSWER_PATTERN: &str = r"ANSWER:\s*(\S+)";

#[derive(Debug, Clone)]
pub struct ExtractionRule {
    pattern: Regex,
    pub policy: MatchPolicy,
    pub fallback: Fallback,
}

impl ExtractionRule {
    pub fn new(pattern: &str, policy: MatchPolicy, fallback: Fallback) -> Result<Self> {
        let pattern = Regex::new(pattern).map_err(|e| Error::input(format!("bad answer pattern: {e}")))?;
        // captures_len counts the implicit whole-match group.
        if pattern.captures_len() != 2 {
            return Err(Error::input(format!(
                "answer pattern must have exactly one capture group, found {}",
                pattern.captures_len() - 1
            )));
        }
        Ok(Self {
            pattern,
            policy,
            fallback,
        })
    }

    pub fn pattern(&self) -> &str {
        self.pattern.as_str()
    }
}

impl Default for ExtractionRule {
    fn default() -> Self {
        Self::new(DEFAULT_ANSWER_PATTERN, MatchPolicy::LastMatch, Fallback::None)
            .expect("default pattern is valid")
    }
}

pub fn extract_answer(text: &str, rule: &ExtractionRule) -> Answer {
    let mut captures = rule
        .pattern
        .captures_iter(text)
        .filter_map(|c| c.get(1).map(|m| m.as_str().trim().to_string()));
    let hit = match rule.policy {
        MatchPolicy::FirstMatch => captures.next(),
        MatchPolicy::LastMatch => captures.last(),
    };
    let hit = hit.or_else(|| match rule.fallback {
        Fallback::LastNumber => last_number(text),
        Fallback::None => None,
    });
    match hit {
        Some(s) if !s.is_empty() => Answer::Text(s),
        _ => Answer::NoAnswer,
    }
}

fn last_number(text: &str) -> Option<String> {
    static NUMBER: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    let re = NUMBER.get_or_init(|| Regex::new(r"-?\d+(?:\.\d+)?").expect("valid"));
    re.find_iter(text).last().map(|m| m.as_str().to_string())
}

/// Empirical distribution of answers; `NoAnswer` is its own bucket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerDistribution {
    counts: BTreeMap<Answer, usize>,
    total: usize,
}

impl AnswerDistribution {
    pub fn counts(&self) -> &BTreeMap<Answer, usize> {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn probability(&self, answer: &Answer) -> f64 {
        self.counts.get(answer).copied().unwrap_or(0) as f64 / self.total as f64
    }
}

pub fn answer_distribution(answers: &[Answer]) -> Result<AnswerDistribution> {
    if answers.is_empty() {
        return Err(Error::input("answer list is empty"));
    }
    let mut counts = BTreeMap::new();
    for a in answers {
        *counts.entry(a.clone()).or_insert(0) += 1;
    }
    Ok(AnswerDistribution {
        counts,
        total: answers.len(),
    })
}

/// Entropy of the answer distribution, in nats.
pub fn predictive_entropy(dist: &AnswerDistribution) -> f64 {
    let n = dist.total as f64;
    let h: f64 = dist
        .counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}

/// Most frequent real answer; ties go to the answer seen first. `NoAnswer`
/// never wins unless nothing else was extracted.
pub fn majority_vote(answers: &[Answer]) -> Result<Answer> {
    if answers.is_empty() {
        return Err(Error::input("answer list is empty"));
    }
    // (count, first index) per answer, in order of first appearance
    let mut tally: Vec<(&Answer, usize)> = Vec::new();
    for a in answers.iter().filter(|a| a.is_answer()) {
        match tally.iter_mut().find(|(seen, _)| *seen == a) {
            Some((_, c)) => *c += 1,
            None => tally.push((a, 1)),
        }
    }
    let mut best: Option<(&Answer, usize)> = None;
    for (a, c) in tally {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((a, c));
        }
    }
    Ok(best.map_or(Answer::NoAnswer, |(a, _)| a.clone()))
}

/// Mean length-normalized negative log-likelihood of the sequences.
pub fn ln_predictive_entropy(leaves: &[LeafSequence]) -> Result<f64> {
    if leaves.is_empty() {
        return Err(Error::input("no sequences"));
    }
    if leaves.iter().any(|l| l.length == 0) {
        return Err(Error::input("sequence of length 0"));
    }
    let sum: f64 = leaves.iter().map(|l| l.cum_logprob / l.length as f64).sum();
    Ok((-sum / leaves.len() as f64).max(0.0))
}

/// One minus the mean pairwise token-LCS similarity,
/// `|LCS(u, v)| / max(|u|, |v|)`.
pub fn lexical_similarity_uncertainty(leaves: &[LeafSequence]) -> Result<f64> {
    if leaves.len() < 2 {
        return Err(Error::input("lexical similarity needs at least two sequences"));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..leaves.len() {
        for j in i + 1..leaves.len() {
            total += sequence_similarity(&leaves[i].tokens, &leaves[j].tokens);
            pairs += 1;
        }
    }
    Ok((1.0 - total / pairs as f64).clamp(0.0, 1.0))
}

fn sequence_similarity<T: PartialEq>(u: &[T], v: &[T]) -> f64 {
    let longest = u.len().max(v.len());
    if longest == 0 {
        return 1.0;
    }
    lcs_len(u, v) as f64 / longest as f64
}

fn lcs_len<T: PartialEq>(u: &[T], v: &[T]) -> usize {
    let mut prev = vec![0usize; v.len() + 1];
    let mut cur = vec![0usize; v.len() + 1];
    for x in u {
        for (j, y) in v.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[v.len()]
}
