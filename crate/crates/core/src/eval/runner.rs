use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::ProblemRecord;
use super::metrics::{auroc, pass_at_k, percentile};
use crate::error::{Error, Result};
use crate::model::LanguageModel;
use crate::sampling::SamplerConfig;
use crate::seed::{problem_seed, SeedKey};
use crate::tree::{decode_tree, decode_tree_with, BranchConfig, BranchGate, DecodingTree, LeafSequence};
use crate::uncertainty::{
    answer_distribution, extract_answer, lexical_similarity_uncertainty, ln_predictive_entropy,
    majority_vote, predictive_entropy, Answer, ExtractionRule,
};

pub const METRIC_PE: &str = "pe";
pub const METRIC_LN_PE: &str = "ln_pe";
pub const METRIC_LEXICAL: &str = "lexical_similarity";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    EntropyTree,
    MultiChain,
    AblationLatePercentile,
    AblationRandomBranch,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::EntropyTree => "entropy_tree",
            Method::MultiChain => "multi_chain",
            Method::AblationLatePercentile => "ablation_late_percentile",
            Method::AblationRandomBranch => "ablation_random_branch",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Method::EntropyTree,
            Method::MultiChain,
            Method::AblationLatePercentile,
            Method::AblationRandomBranch,
        ]
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// Per-problem outcome of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub problem_id: String,
    pub method: Method,
    /// Leaves or samples produced.
    pub n: usize,
    /// How many of them carry the gold answer.
    pub c: usize,
    /// Predictive entropy of the answer distribution.
    pub uncertainty: f64,
    /// Every uncertainty score computed for this problem, by metric name.
    pub scores: BTreeMap<String, f64>,
    pub voted: Answer,
    pub voted_correct: bool,
    /// Forks taken while decoding.
    pub branches: usize,
    /// Model scoring calls while decoding.
    pub steps: usize,
    pub mean_branch_depth: Option<f64>,
}

/// Aggregated result of one method over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: Method,
    pub master_seed: u64,
    /// Effective parameters of the run.
    pub config: serde_json::Value,
    pub records: Vec<SampleRecord>,
    /// Mean pass@k over problems; entry `k - 1` holds pass@k.
    pub pass_at_k: Vec<f64>,
    /// AUROC by metric, for metrics where both outcomes occur.
    pub auroc: BTreeMap<String, f64>,
    pub vote_accuracy: f64,
}

impl EvalReport {
    /// Builds aggregates from per-problem records.
    ///
    /// pass@k is averaged over problems. A problem with fewer than `k`
    /// generations contributes pass@n (all of its samples), which only
    /// happens when a tree finishes below its leaf budget.
    pub fn from_records(
        method: Method,
        master_seed: u64,
        config: serde_json::Value,
        records: Vec<SampleRecord>,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::input("cannot aggregate an empty record set"));
        }
        let max_n = records.iter().map(|r| r.n).max().unwrap_or(0);
        let mut curve = Vec::with_capacity(max_n);
        for k in 1..=max_n {
            let mut sum = 0.0;
            for r in &records {
                sum += pass_at_k(r.n, r.c, k.min(r.n))?;
            }
            curve.push(sum / records.len() as f64);
        }
        let mut metrics: BTreeMap<&str, Vec<(f64, bool)>> = BTreeMap::new();
        for r in &records {
            for (name, &score) in &r.scores {
                metrics.entry(name).or_default().push((score, !r.voted_correct));
            }
        }
        let auroc = metrics
            .into_iter()
            .filter(|(_, pairs)| pairs.len() == records.len())
            .filter_map(|(name, pairs)| auroc(&pairs).ok().map(|a| (name.to_string(), a)))
            .collect();
        let vote_accuracy = records.iter().filter(|r| r.voted_correct).count() as f64 / records.len() as f64;
        Ok(Self {
            method,
            master_seed,
            config,
            records,
            pass_at_k: curve,
            auroc,
            vote_accuracy,
        })
    }

    pub fn pass_at(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.pass_at_k.get(i)).copied()
    }

    /// Share of problems with at least one correct generation, whatever
    /// the number of generations.
    pub fn success_rate(&self) -> f64 {
        self.records.iter().filter(|r| r.c > 0).count() as f64 / self.records.len() as f64
    }

    /// Forks per scoring call over the whole run.
    pub fn branch_rate(&self) -> f64 {
        let steps: usize = self.records.iter().map(|r| r.steps).sum();
        let branches: usize = self.records.iter().map(|r| r.branches).sum();
        if steps == 0 {
            0.0
        } else {
            branches as f64 / steps as f64
        }
    }

    /// Mean over problems that forked at least once.
    pub fn mean_branch_depth(&self) -> Option<f64> {
        let depths: Vec<f64> = self.records.iter().filter_map(|r| r.mean_branch_depth).collect();
        if depths.is_empty() {
            None
        } else {
            Some(depths.iter().sum::<f64>() / depths.len() as f64)
        }
    }
}

/// Scores a set of generations against the gold answer.
fn score_generations(
    problem: &ProblemRecord,
    method: Method,
    sequences: &[LeafSequence],
    rule: &ExtractionRule,
    branches: usize,
    steps: usize,
    mean_branch_depth: Option<f64>,
) -> Result<SampleRecord> {
    let answers: Vec<Answer> = sequences.iter().map(|s| extract_answer(&s.text, rule)).collect();
    let c = answers.iter().filter(|a| a.matches(&problem.answer)).count();
    let pe = predictive_entropy(&answer_distribution(&answers)?);
    let voted = majority_vote(&answers)?;
    let mut scores = BTreeMap::new();
    scores.insert(METRIC_PE.to_string(), pe);
    scores.insert(METRIC_LN_PE.to_string(), ln_predictive_entropy(sequences)?);
    if sequences.len() >= 2 {
        scores.insert(METRIC_LEXICAL.to_string(), lexical_similarity_uncertainty(sequences)?);
    }
    Ok(SampleRecord {
        problem_id: problem.id.clone(),
        method,
        n: sequences.len(),
        c,
        uncertainty: pe,
        scores,
        voted_correct: voted.matches(&problem.answer),
        voted,
        branches,
        steps,
        mean_branch_depth,
    })
}

fn require_problems(dataset: &[ProblemRecord]) -> Result<()> {
    if dataset.is_empty() {
        Err(Error::input("dataset is empty"))
    } else {
        Ok(())
    }
}

fn tree_records<M: LanguageModel + ?Sized>(
    dataset: &[ProblemRecord],
    model: &M,
    config: &BranchConfig,
    gate: BranchGate,
    method: Method,
    rule: &ExtractionRule,
    master_seed: u64,
) -> Result<Vec<SampleRecord>> {
    require_problems(dataset)?;
    config.validate(model.vocab().len())?;
    dataset
        .par_iter()
        .map(|problem| {
            let run = || -> Result<SampleRecord> {
                let tree = decode_problem_tree(model, problem, config, gate, master_seed)?;
                let leaves = tree.collect_leaves(model.vocab());
                score_generations(
                    problem,
                    method,
                    &leaves,
                    rule,
                    tree.branch_events(),
                    tree.steps,
                    tree.mean_branch_depth(),
                )
            };
            run().map_err(|e| e.in_problem(&problem.id))
        })
        .collect()
}

/// The tree a tree-based method grows for `problem`, seeded from
/// `(master_seed, problem id, 0)`.
pub fn decode_problem_tree<M: LanguageModel + ?Sized>(
    model: &M,
    problem: &ProblemRecord,
    config: &BranchConfig,
    gate: BranchGate,
    master_seed: u64,
) -> Result<DecodingTree> {
    let prompt = model.vocab().encode(&problem.prompt)?;
    decode_tree_with(model, &prompt, config, gate, problem_seed(master_seed, &problem.id, 0))
}

/// Decodes one tree per problem and scores its leaves.
pub fn run_entropy_tree<M: LanguageModel + ?Sized>(
    dataset: &[ProblemRecord],
    model: &M,
    config: &BranchConfig,
    rule: &ExtractionRule,
    master_seed: u64,
) -> Result<EvalReport> {
    let records = tree_records(dataset, model, config, BranchGate::Entropy, Method::EntropyTree, rule, master_seed)?;
    EvalReport::from_records(Method::EntropyTree, master_seed, config_value(config, rule)?, records)
}

/// `n` independent chains per problem; chain `i` is seeded from
/// `(master_seed, problem id, i)`.
pub fn run_multi_chain<M: LanguageModel + ?Sized>(
    dataset: &[ProblemRecord],
    model: &M,
    n: usize,
    sampler: &SamplerConfig,
    max_tokens: usize,
    rule: &ExtractionRule,
    master_seed: u64,
) -> Result<EvalReport> {
    require_problems(dataset)?;
    if n < 1 {
        return Err(Error::input("multi-chain needs at least one sample"));
    }
    let config = crate::tree::chain_config(sampler, max_tokens);
    config.validate(model.vocab().len())?;
    let records = dataset
        .par_iter()
        .map(|problem| {
            let run = || -> Result<SampleRecord> {
                let prompt = model.vocab().encode(&problem.prompt)?;
                let mut chains = Vec::with_capacity(n);
                let mut steps = 0;
                for i in 0..n {
                    let seed = problem_seed(master_seed, &problem.id, i as u64);
                    let tree = decode_tree(model, &prompt, &config, seed)?;
                    steps += tree.steps;
                    chains.extend(tree.collect_leaves(model.vocab()));
                }
                score_generations(problem, Method::MultiChain, &chains, rule, 0, steps, None)
            };
            run().map_err(|e| e.in_problem(&problem.id))
        })
        .collect::<Result<Vec<_>>>()?;
    let snapshot = serde_json::json!({
        "n": n,
        "max_tokens": max_tokens,
        "sampler": sampler,
        "answer_pattern": rule.pattern(),
    });
    EvalReport::from_records(Method::MultiChain, master_seed, snapshot, records)
}

fn config_value(config: &BranchConfig, rule: &ExtractionRule) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(config)?;
    v["answer_pattern"] = serde_json::Value::String(rule.pattern().to_string());
    Ok(v)
}

/// Thresholds calibrated from pooled per-token statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub tau: f64,
    pub delta: f64,
    pub percentile: f64,
    pub entropy_samples: usize,
    pub importance_samples: usize,
    pub entropy_min: f64,
    pub entropy_max: f64,
}

/// Chain-decodes every calibration prompt and returns the `q`-th percentile
/// of the pooled token entropies and of the pooled importances.
///
/// Pooling is global across prompts. Steps without an importance value do
/// not enter the importance pool; an empty importance pool yields delta 0.
pub fn calibrate_thresholds<M: LanguageModel + ?Sized>(
    model: &M,
    prompts: &[ProblemRecord],
    sampler: &SamplerConfig,
    q: f64,
    max_tokens: usize,
    master_seed: u64,
) -> Result<Thresholds> {
    if prompts.is_empty() {
        return Err(Error::Calibration("no calibration prompts".into()));
    }
    let config = crate::tree::chain_config(sampler, max_tokens);
    let trees: Vec<DecodingTree> = prompts
        .par_iter()
        .map(|p| {
            let prompt = model.vocab().encode(&p.prompt).map_err(|e| e.in_problem(&p.id))?;
            let seed = SeedKey::new(master_seed).str("calibrate").str(&p.id).finish();
            decode_tree(model, &prompt, &config, seed).map_err(|e| e.in_problem(&p.id))
        })
        .collect::<Result<_>>()?;
    let mut entropies = Vec::new();
    let mut importances = Vec::new();
    for tree in &trees {
        for node in tree.nodes.iter().skip(1) {
            entropies.push(node.entropy);
            importances.extend(node.importance);
        }
    }
    if entropies.is_empty() {
        return Err(Error::Calibration("calibration generated no tokens".into()));
    }
    let tau = percentile(&entropies, q)?;
    let delta = if importances.is_empty() {
        0.0
    } else {
        percentile(&importances, q)?
    };
    Ok(Thresholds {
        tau,
        delta,
        percentile: q,
        entropy_samples: entropies.len(),
        importance_samples: importances.len(),
        entropy_min: entropies.iter().copied().fold(f64::INFINITY, f64::min),
        entropy_max: entropies.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

pub enum Ablation<'a> {
    /// Re-calibrate on `calibration` at a later percentile, then run the
    /// entropy tree with those thresholds.
    LatePercentile {
        calibration: &'a [ProblemRecord],
        percentile: f64,
    },
    /// Replace both gates by a coin flip whose rate is the fork frequency of
    /// a paired entropy-guided run.
    RandomBranch { paired: Option<&'a EvalReport> },
}

pub fn run_ablation<M: LanguageModel + ?Sized>(
    dataset: &[ProblemRecord],
    model: &M,
    config: &BranchConfig,
    ablation: Ablation<'_>,
    rule: &ExtractionRule,
    master_seed: u64,
) -> Result<EvalReport> {
    match ablation {
        Ablation::LatePercentile {
            calibration,
            percentile,
        } => {
            let th = calibrate_thresholds(model, calibration, &config.sampler, percentile, config.max_tokens, master_seed)?;
            let tuned = BranchConfig {
                tau: th.tau,
                delta: th.delta,
                ..config.clone()
            };
            let records = tree_records(
                dataset,
                model,
                &tuned,
                BranchGate::Entropy,
                Method::AblationLatePercentile,
                rule,
                master_seed,
            )?;
            let mut snapshot = config_value(&tuned, rule)?;
            snapshot["calibration_percentile"] = serde_json::json!(percentile);
            EvalReport::from_records(Method::AblationLatePercentile, master_seed, snapshot, records)
        }
        Ablation::RandomBranch { paired } => {
            let paired = paired.ok_or_else(|| {
                Error::Config("random-branch ablation needs a paired entropy-tree run".into())
            })?;
            if paired.method != Method::EntropyTree {
                return Err(Error::Config(format!(
                    "random-branch ablation must pair with an entropy_tree run, got {}",
                    paired.method
                )));
            }
            let same_problems = paired.records.len() == dataset.len()
                && paired.records.iter().zip(dataset).all(|(r, p)| r.problem_id == p.id);
            if !same_problems {
                return Err(Error::Config("paired run covers a different dataset".into()));
            }
            let rate = paired.branch_rate();
            let records = tree_records(
                dataset,
                model,
                config,
                BranchGate::Random { rate },
                Method::AblationRandomBranch,
                rule,
                master_seed,
            )?;
            let mut snapshot = config_value(config, rule)?;
            snapshot["branch_rate"] = serde_json::json!(rate);
            EvalReport::from_records(Method::AblationRandomBranch, master_seed, snapshot, records)
        }
    }
}
