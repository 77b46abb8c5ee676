//! Procedural benchmark models with known answer statistics.
//!
//! A task prompt is a single token `q{i}`. The model then emits a fixed
//! preamble of `step` tokens, one decision token, a run of filler tokens,
//! `ANSWER:`, the answer and EOS:
//!
//! ```text
//! q3 step step m1 f0 f1 f1 f0 ANSWER: 42 EOS
//! ```
//!
//! Only the decision (and, for easy tasks, a small slip on the answer
//! token) decides correctness. Each filler position is a fair coin between
//! `f0` and `f1`, which gives a tree room to spend its whole leaf budget.

use super::dataset::ProblemRecord;
use crate::error::{Error, Result};
use crate::model::{LanguageModel, ScriptedModel, StepOutput, TokenDistribution, TokenId, Vocabulary};

pub const GOLD_ANSWER: &str = "42";
pub const WRONG_ANSWER: &str = "24";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TaskKind {
    /// The decision picks the correct branch `m1` with probability
    /// `correct`, otherwise `m0`, which always answers wrong.
    Hard { correct: f64 },
    /// The decision is always `m1`; the answer token is wrong with
    /// probability `slip`.
    Easy { slip: f64 },
}

#[derive(Debug, Clone)]
pub struct ForkTaskModel {
    vocab: Vocabulary,
    tasks: Vec<TaskKind>,
    preamble: usize,
    fillers: usize,
    ids: Ids,
}

#[derive(Debug, Clone, Copy)]
struct Ids {
    step: TokenId,
    m0: TokenId,
    m1: TokenId,
    f0: TokenId,
    f1: TokenId,
    answer_tag: TokenId,
    gold: TokenId,
    wrong: TokenId,
    eos: TokenId,
}

impl ForkTaskModel {
    pub fn new(tasks: Vec<TaskKind>, preamble: usize, fillers: usize) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::input("fork task model needs at least one task"));
        }
        for t in &tasks {
            let p = match *t {
                TaskKind::Hard { correct } => correct,
                TaskKind::Easy { slip } => slip,
            };
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::input(format!("task probability {p} is outside [0, 1]")));
            }
        }
        let fixed = ["step", "m0", "m1", "f0", "f1", "ANSWER:", GOLD_ANSWER, WRONG_ANSWER, "EOS"];
        let tokens: Vec<String> = (0..tasks.len())
            .map(|i| format!("q{i}"))
            .chain(fixed.iter().map(|s| s.to_string()))
            .collect();
        let vocab = Vocabulary::new(tokens, "EOS")?;
        let id = |s: &str| vocab.id(s).expect("fixed token");
        let ids = Ids {
            step: id("step"),
            m0: id("m0"),
            m1: id("m1"),
            f0: id("f0"),
            f1: id("f1"),
            answer_tag: id("ANSWER:"),
            gold: id(GOLD_ANSWER),
            wrong: id(WRONG_ANSWER),
            eos: id("EOS"),
        };
        Ok(Self {
            vocab,
            tasks,
            preamble,
            fillers,
            ids,
        })
    }

    /// `n` hard tasks sharing one success probability.
    pub fn uniform_hard(n: usize, correct: f64, preamble: usize, fillers: usize) -> Result<Self> {
        Self::new(vec![TaskKind::Hard { correct }; n], preamble, fillers)
    }

    pub fn tasks(&self) -> &[TaskKind] {
        &self.tasks
    }

    /// Tokens in every complete generation, EOS included.
    pub fn generation_length(&self) -> usize {
        self.preamble + self.fillers + 4
    }

    /// One problem per task, ids `t0`, `t1`, ...
    pub fn problems(&self) -> Vec<ProblemRecord> {
        (0..self.tasks.len())
            .map(|i| ProblemRecord::new(format!("t{i}"), format!("q{i}"), GOLD_ANSWER))
            .collect()
    }

    fn weights(&self, pairs: &[(TokenId, f64)]) -> Result<TokenDistribution> {
        let mut w = vec![0.0; self.vocab.len()];
        for &(id, p) in pairs {
            w[id] += p;
        }
        TokenDistribution::from_weights(w)
    }

    /// Tabulates every reachable prefix into a [`ScriptedModel`] with the
    /// same outputs, e.g. to save the benchmark as a model file.
    pub fn to_scripted(&self) -> Result<ScriptedModel> {
        let mut table = ScriptedModel::new(self.vocab.clone());
        let mut stack: Vec<Vec<TokenId>> = (0..self.tasks.len()).map(|q| vec![q]).collect();
        while let Some(prefix) = stack.pop() {
            let out = self.score_next(&prefix)?;
            for (id, &p) in out.dist.probs().iter().enumerate() {
                if p > 0.0 && id != self.ids.eos {
                    let mut next = prefix.clone();
                    next.push(id);
                    stack.push(next);
                }
            }
            table.insert(prefix, out.dist, out.importance)?;
        }
        Ok(table)
    }
}

impl LanguageModel for ForkTaskModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn score_next(&self, prefix: &[TokenId]) -> Result<StepOutput> {
        let ids = self.ids;
        let task = prefix
            .first()
            .and_then(|&q| self.tasks.get(q))
            .copied()
            .ok_or_else(|| Error::input("prefix must start with a task prompt token"))?;
        let generated = &prefix[1..];
        let t = generated.len();
        let p = self.preamble;
        let dist = if t < p {
            TokenDistribution::one_hot(self.vocab.len(), ids.step)
        } else if t == p {
            match task {
                TaskKind::Hard { correct } => self.weights(&[(ids.m0, 1.0 - correct), (ids.m1, correct)])?,
                TaskKind::Easy { .. } => TokenDistribution::one_hot(self.vocab.len(), ids.m1),
            }
        } else if t <= p + self.fillers {
            self.weights(&[(ids.f0, 0.5), (ids.f1, 0.5)])?
        } else if t == p + self.fillers + 1 {
            TokenDistribution::one_hot(self.vocab.len(), ids.answer_tag)
        } else if t == p + self.fillers + 2 {
            match (generated[p] == ids.m1, task) {
                (false, _) => TokenDistribution::one_hot(self.vocab.len(), ids.wrong),
                (true, TaskKind::Hard { .. }) => TokenDistribution::one_hot(self.vocab.len(), ids.gold),
                (true, TaskKind::Easy { slip }) => self.weights(&[(ids.gold, 1.0 - slip), (ids.wrong, slip)])?,
            }
        } else {
            TokenDistribution::one_hot(self.vocab.len(), ids.eos)
        };
        StepOutput::new(dist, Some(1.0))
    }
}

/// A single-prompt model whose next-token entropy rises along the greedy
/// path: after `t` copies of `go` it puts `alt_probs[t]` on `alt` and the
/// rest on `go`. After `alt_probs.len()` copies it emits EOS, and so does
/// every prefix containing `alt`.
pub fn rising_entropy_model(alt_probs: &[f64]) -> Result<(ScriptedModel, ProblemRecord)> {
    let vocab = Vocabulary::new(["q0", "go", "alt", "EOS"], "EOS")?;
    let mut model = ScriptedModel::new(vocab);
    let mut prefix = String::from("q0");
    for &e in alt_probs {
        model.insert_sparse(&prefix, &[("go", 1.0 - e), ("alt", e)], Some(1.0))?;
        prefix.push_str(" go");
    }
    Ok((model, ProblemRecord::new("r0", "q0", "go")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::token_entropy;
    use crate::tree::{decode_tree, BranchConfig};

    #[test]
    fn hard_task_tree_fills_budget_with_both_outcomes() {
        let m = ForkTaskModel::uniform_hard(1, 0.05, 2, 4).unwrap();
        let prompt = m.vocab().encode("q0").unwrap();
        let tree = decode_tree(&m, &prompt, &BranchConfig::new(0.15, 0.0, 2, 20), 7).unwrap();
        let leaves = tree.collect_leaves(m.vocab());
        assert_eq!(leaves.len(), 20);
        assert!(leaves.iter().all(|l| l.length == m.generation_length()));
        let gold = leaves.iter().filter(|l| l.text.ends_with("ANSWER: 42")).count();
        assert!(gold > 0 && gold < 20, "{gold}");
    }

    #[test]
    fn easy_task_decision_is_certain() {
        let m = ForkTaskModel::new(vec![TaskKind::Easy { slip: 0.03 }], 2, 4).unwrap();
        let ids = m.vocab().encode("q0 step step").unwrap();
        let out = m.score_next(&ids).unwrap();
        assert_eq!(token_entropy(&out.dist), 0.0);
    }

    #[test]
    fn tabulated_model_matches() {
        let m = ForkTaskModel::new(vec![TaskKind::Hard { correct: 0.3 }, TaskKind::Easy { slip: 0.1 }], 1, 2).unwrap();
        let table = m.to_scripted().unwrap();
        let cfg = BranchConfig::new(0.1, 0.0, 2, 8);
        for q in ["q0", "q1"] {
            let prompt = m.vocab().encode(q).unwrap();
            assert_eq!(decode_tree(&m, &prompt, &cfg, 3).unwrap(), decode_tree(&table, &prompt, &cfg, 3).unwrap());
        }
    }

    #[test]
    fn rising_entropy_is_monotone() {
        let eps: Vec<f64> = (0..20).map(|t| 0.02 + 0.02 * t as f64).collect();
        let (m, p) = rising_entropy_model(&eps).unwrap();
        let mut prefix = m.vocab().encode(&p.prompt).unwrap();
        let mut last = -1.0;
        for _ in 0..20 {
            let h = token_entropy(&m.score_next(&prefix).unwrap().dist);
            assert!(h > last);
            last = h;
            prefix.push(m.vocab().id("go").unwrap());
        }
        assert_eq!(token_entropy(&m.score_next(&prefix).unwrap().dist), 0.0);
    }
}
