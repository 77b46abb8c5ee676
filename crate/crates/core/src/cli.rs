//! The `entropy-tree` command line.
//!
//! Experiments are described by a TOML file; flags override individual
//! values, and the merged configuration is written next to the results.
//! Relative paths inside the file resolve against the file's directory.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{
    calibrate_thresholds, decode_problem_tree, load_dataset, load_reports, run_ablation, run_entropy_tree,
    run_multi_chain, write_csvs, write_report_files, Ablation, EvalReport, Method, ProblemRecord, Thresholds,
};
use crate::io::write_atomic;
use crate::model::{load_scripted, train_ngram, LanguageModel, NGramModel};
use crate::sampling::SamplerConfig;
use crate::tree::{BranchConfig, BranchGate, DEFAULT_MAX_TOKENS};
use crate::uncertainty::{ExtractionRule, Fallback, MatchPolicy, DEFAULT_ANSWER_PATTERN};

/// Default output directory when neither a flag nor the config names one.
pub const OUTPUT_DIR_ENV: &str = "ENTROPY_TREE_OUT";
pub const THRESHOLDS_FILE: &str = "thresholds.toml";
pub const EFFECTIVE_CONFIG_FILE: &str = "effective_config.toml";
pub const TREES_DIR: &str = "trees";

#[derive(Debug, Parser)]
#[command(name = "entropy-tree", version, about = "Entropy-gated tree decoding experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate branching thresholds on the calibration split and write them
    /// to thresholds.toml.
    Calibrate(CalibrateArgs),
    /// Run the configured methods on the dataset and write report files.
    Run(RunArgs),
    /// Train an add-alpha n-gram model on a whitespace-tokenized corpus.
    TrainNgram(TrainNgramArgs),
    /// Re-render passk.csv and auroc.csv from a stored report.jsonl.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; overrides `output_dir` in the config. Falls back to
    /// $ENTROPY_TREE_OUT, then ./out.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Percentile in (0, 100]; overrides `calibration.percentile`.
    #[arg(long)]
    pub percentile: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Thresholds file from `calibrate`; overrides `calibration.thresholds`.
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
    /// Methods to run (comma separated); overrides `run.methods`.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    /// Also write one tree file per problem under trees/.
    #[arg(long)]
    pub dump_trees: bool,
}

#[derive(Debug, Args)]
pub struct TrainNgramArgs {
    /// Corpus with one whitespace-tokenized sequence per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Context length plus one; 1 is a unigram model.
    #[arg(long)]
    pub order: usize,
    /// Add-alpha smoothing constant.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Where to write the model file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A report.jsonl written by `run`.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for the CSV files; defaults to the report's directory.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Scripted,
    Ngram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionSection {
    pub pattern: String,
    pub policy: MatchPolicy,
    pub fallback: Fallback,
}

impl Default for ExtractionSection {
    fn default() -> Self {
        Self {
            pattern: DEFAULT_ANSWER_PATTERN.to_string(),
            policy: MatchPolicy::LastMatch,
            fallback: Fallback::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    /// Calibration split, same format as the dataset.
    pub dataset: Option<PathBuf>,
    pub percentile: f64,
    /// Percentile used by the late-percentile ablation.
    pub late_percentile: f64,
    /// Thresholds file read by `run`.
    pub thresholds: Option<PathBuf>,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            dataset: None,
            percentile: 80.0,
            late_percentile: 90.0,
            thresholds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeSection {
    pub b: usize,
    pub n_tree: usize,
    pub max_tokens: usize,
    /// Explicit thresholds; when both are set no thresholds file is needed.
    pub tau: Option<f64>,
    pub delta: Option<f64>,
}

impl Default for TreeSection {
    fn default() -> Self {
        Self {
            b: 2,
            n_tree: 20,
            max_tokens: DEFAULT_MAX_TOKENS,
            tau: None,
            delta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub methods: Vec<Method>,
    /// Samples per problem for multi-chain.
    pub n: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            methods: vec![Method::EntropyTree, Method::MultiChain],
            n: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub jobs: usize,
    pub model: ModelSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSection>,
    #[serde(default)]
    pub extraction: ExtractionSection,
    #[serde(default)]
    pub calibration: CalibrationSection,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub tree: TreeSection,
    #[serde(default)]
    pub run: RunSection,
}

impl RunConfig {
    /// Parses a config and resolves its relative paths against `base`.
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.model.path);
        if let Some(d) = cfg.dataset.as_mut() {
            resolve(&mut d.path);
        }
        if let Some(p) = cfg.calibration.dataset.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.calibration.thresholds.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.output_dir.as_mut() {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_toml_str(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn apply(&mut self, common: &CommonArgs) {
        if let Some(s) = common.seed {
            self.seed = s;
        }
        if let Some(d) = &common.output_dir {
            self.output_dir = Some(d.clone());
        }
        if let Some(j) = common.jobs {
            self.jobs = j;
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn extraction_rule(&self) -> Result<ExtractionRule> {
        let e = &self.extraction;
        ExtractionRule::new(&e.pattern, e.policy, e.fallback)
    }

    pub fn load_model(&self) -> Result<Box<dyn LanguageModel>> {
        let path = &self.model.path;
        require_file(path, "model.path")?;
        Ok(match self.model.kind {
            ModelKind::Scripted => Box::new(load_scripted(path)?),
            ModelKind::Ngram => Box::new(NGramModel::load(path)?),
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

fn require_file(path: &Path, key: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("{key}: {} does not exist", path.display())))
    }
}

fn load_split(path: &Path, key: &str) -> Result<Vec<ProblemRecord>> {
    require_file(path, key)?;
    let problems = load_dataset(path)?;
    if problems.is_empty() {
        return Err(Error::input(format!("{key}: {} holds no problems", path.display())));
    }
    Ok(problems)
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))
}

pub fn load_thresholds(path: &Path) -> Result<Thresholds> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Validation {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn thresholds_to_string(th: &Thresholds) -> Result<String> {
    toml::to_string(th).map_err(|e| Error::Config(e.to_string()))
}

/// Calibrates thresholds and writes them into the output directory.
pub fn cmd_calibrate(args: &CalibrateArgs, out: &mut dyn std::io::Write) -> Result<PathBuf> {
    let mut cfg = RunConfig::load(&args.common.config)?;
    cfg.apply(&args.common);
    if let Some(q) = args.percentile {
        cfg.calibration.percentile = q;
    }
    let split = cfg
        .calibration
        .dataset
        .clone()
        .ok_or_else(|| Error::Calibration("config names no calibration.dataset".into()))?;
    let prompts = load_split(&split, "calibration.dataset")
        .map_err(|e| match e {
            Error::InvalidInput(m) => Error::Calibration(m),
            other => other,
        })?;
    let model = cfg.load_model()?;
    cfg.sampler.validate(model.vocab().len())?;
    let pool = thread_pool(cfg.jobs)?;
    let th = pool.install(|| {
        calibrate_thresholds(
            &*model,
            &prompts,
            &cfg.sampler,
            cfg.calibration.percentile,
            cfg.tree.max_tokens,
            cfg.seed,
        )
    })?;
    let path = cfg.output_dir().join(THRESHOLDS_FILE);
    write_atomic(&path, thresholds_to_string(&th)?.as_bytes())?;
    writeln!(
        out,
        "pooled {} entropies (min {:.6}, max {:.6}) and {} importances at q={}",
        th.entropy_samples, th.entropy_min, th.entropy_max, th.importance_samples, th.percentile
    )?;
    writeln!(out, "tau = {}\ndelta = {}\nwrote {}", th.tau, th.delta, path.display())?;
    Ok(path)
}

/// Resolves the branching thresholds for `run`: explicit values in the
/// config win, then a thresholds file from the flag or the config.
fn resolve_thresholds(cfg: &RunConfig, flag: Option<&Path>) -> Result<(f64, f64)> {
    if let (Some(tau), Some(delta)) = (cfg.tree.tau, cfg.tree.delta) {
        return Ok((tau, delta));
    }
    let path = flag
        .map(Path::to_path_buf)
        .or_else(|| cfg.calibration.thresholds.clone())
        .ok_or_else(|| {
            Error::Config(
                "no branching thresholds: run `entropy-tree calibrate --config <file>` and pass the \
                 resulting thresholds.toml with --thresholds, or set tree.tau and tree.delta"
                    .into(),
            )
        })?;
    if !path.is_file() {
        return Err(Error::Config(format!(
            "thresholds file {} does not exist; create it with `entropy-tree calibrate`",
            path.display()
        )));
    }
    let th = load_thresholds(&path)?;
    Ok((cfg.tree.tau.unwrap_or(th.tau), cfg.tree.delta.unwrap_or(th.delta)))
}

/// Runs every configured method; nothing is written unless all succeed.
pub fn cmd_run(args: &RunArgs, out: &mut dyn std::io::Write) -> Result<Vec<EvalReport>> {
    let mut cfg = RunConfig::load(&args.common.config)?;
    cfg.apply(&args.common);
    if let Some(m) = &args.methods {
        cfg.run.methods = m.clone();
    }
    if cfg.run.methods.is_empty() {
        return Err(Error::Config("run.methods is empty".into()));
    }
    let dataset_path = cfg
        .dataset
        .as_ref()
        .map(|d| d.path.clone())
        .ok_or_else(|| Error::Config("config names no dataset.path".into()))?;
    let dataset = load_split(&dataset_path, "dataset.path")?;
    let model = cfg.load_model()?;
    let rule = cfg.extraction_rule()?;
    let needs_tree = cfg.run.methods.iter().any(|m| *m != Method::MultiChain);
    let needs_pair = cfg.run.methods.contains(&Method::AblationRandomBranch);
    if needs_pair && !cfg.run.methods.contains(&Method::EntropyTree) {
        return Err(Error::Config(
            "ablation_random_branch measures its rate on an entropy_tree run; add entropy_tree to run.methods".into(),
        ));
    }
    let mut branch = BranchConfig {
        tau: 0.0,
        delta: 0.0,
        b: cfg.tree.b,
        n_tree: cfg.tree.n_tree,
        max_tokens: cfg.tree.max_tokens,
        sampler: cfg.sampler.clone(),
    };
    let tree_methods_need_thresholds = cfg
        .run
        .methods
        .iter()
        .any(|m| matches!(m, Method::EntropyTree | Method::AblationRandomBranch));
    if tree_methods_need_thresholds {
        let (tau, delta) = resolve_thresholds(&cfg, args.thresholds.as_deref())?;
        branch.tau = tau;
        branch.delta = delta;
        cfg.tree.tau = Some(tau);
        cfg.tree.delta = Some(delta);
    }
    if needs_tree {
        branch.validate(model.vocab().len())?;
    }
    let calibration = if cfg.run.methods.contains(&Method::AblationLatePercentile) {
        let p = cfg.calibration.dataset.clone().ok_or_else(|| {
            Error::Config("ablation_late_percentile needs calibration.dataset".into())
        })?;
        Some(load_split(&p, "calibration.dataset")?)
    } else {
        None
    };

    let pool = thread_pool(cfg.jobs)?;
    let seed = cfg.seed;
    let (reports, trees) = pool.install(|| -> Result<_> {
        let mut reports: Vec<EvalReport> = Vec::new();
        // Ablations come last so the random-branch rate can be read off the
        // entropy-tree run.
        let mut order = cfg.run.methods.clone();
        order.sort();
        order.dedup();
        for method in order {
            let report = match method {
                Method::EntropyTree => run_entropy_tree(&dataset, &*model, &branch, &rule, seed)?,
                Method::MultiChain => run_multi_chain(
                    &dataset,
                    &*model,
                    cfg.run.n,
                    &cfg.sampler,
                    cfg.tree.max_tokens,
                    &rule,
                    seed,
                )?,
                Method::AblationLatePercentile => run_ablation(
                    &dataset,
                    &*model,
                    &branch,
                    Ablation::LatePercentile {
                        calibration: calibration.as_deref().unwrap_or_default(),
                        percentile: cfg.calibration.late_percentile,
                    },
                    &rule,
                    seed,
                )?,
                Method::AblationRandomBranch => {
                    let paired = reports.iter().find(|r| r.method == Method::EntropyTree);
                    run_ablation(&dataset, &*model, &branch, Ablation::RandomBranch { paired }, &rule, seed)?
                }
            };
            reports.push(report);
        }
        let mut trees = Vec::new();
        if args.dump_trees && cfg.run.methods.contains(&Method::EntropyTree) {
            for (i, p) in dataset.iter().enumerate() {
                let tree = decode_problem_tree(&*model, p, &branch, BranchGate::Entropy, seed)
                    .map_err(|e| e.in_problem(&p.id))?;
                trees.push((tree_file_name(i, &p.id), tree.to_dump_string(Some(model.vocab()))?));
            }
        }
        Ok((reports, trees))
    })?;

    let dir = cfg.output_dir();
    write_report_files(&dir, &reports)?;
    write_atomic(&dir.join(EFFECTIVE_CONFIG_FILE), cfg.to_toml_string()?.as_bytes())?;
    for (name, text) in &trees {
        write_atomic(&dir.join(TREES_DIR).join(name), text.as_bytes())?;
    }
    out.write_all(summary_table(&reports).as_bytes())?;
    writeln!(out, "wrote results to {}", dir.display())?;
    Ok(reports)
}

fn tree_file_name(index: usize, id: &str) -> String {
    let safe: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{index:04}-{safe}.json")
}

pub fn cmd_train_ngram(args: &TrainNgramArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let text = fs::read_to_string(&args.corpus)
        .map_err(|e| Error::input(format!("cannot read corpus {}: {e}", args.corpus.display())))?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.is_empty() {
        return Err(Error::input(format!("corpus {} is empty", args.corpus.display())));
    }
    let model = train_ngram(&lines, args.order, args.alpha)?;
    model.save(&args.out)?;
    writeln!(
        out,
        "trained order-{} model on {} lines, vocabulary {}; wrote {}",
        model.order(),
        lines.len(),
        model.vocab().len(),
        args.out.display()
    )?;
    Ok(())
}

pub fn cmd_report(args: &ReportArgs, out: &mut dyn std::io::Write) -> Result<Vec<PathBuf>> {
    let reports = load_reports(&args.input)?;
    if reports.is_empty() {
        return Err(Error::input(format!("{} holds no reports", args.input.display())));
    }
    let dir = args
        .output_dir
        .clone()
        .unwrap_or_else(|| args.input.parent().unwrap_or(Path::new(".")).to_path_buf());
    let written = write_csvs(&dir, &reports)?;
    out.write_all(summary_table(&reports).as_bytes())?;
    for p in &written {
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(written)
}

/// One row per method: pass@10, pass@20 and every AUROC.
pub fn summary_table(reports: &[EvalReport]) -> String {
    let metrics: std::collections::BTreeSet<&str> =
        reports.iter().flat_map(|r| r.auroc.keys().map(String::as_str)).collect();
    let longest = reports.iter().map(|r| r.pass_at_k.len()).max().unwrap_or(0);
    let mut ks: Vec<usize> = [1, 10, longest].into_iter().filter(|&k| k >= 1 && k <= longest).collect();
    ks.dedup();
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    let mut s = format!("{:<26}", "method");
    for k in &ks {
        let _ = write!(s, " {:>9}", format!("pass@{k}"));
    }
    let _ = write!(s, " {:>9}", "solved");
    for m in &metrics {
        let _ = write!(s, " {:>26}", format!("auroc[{m}]"));
    }
    s.push('\n');
    for r in reports {
        let _ = write!(s, "{:<26}", r.method.as_str());
        for &k in &ks {
            let _ = write!(s, " {:>9}", cell(r.pass_at(k)));
        }
        let _ = write!(s, " {:>9}", cell(Some(r.success_rate())));
        for m in &metrics {
            let _ = write!(s, " {:>26}", cell(r.auroc.get(*m).copied()));
        }
        s.push('\n');
    }
    s
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Calibration(_) => 4,
        Error::Io(_) => 5,
        _ => 3,
    }
}

pub fn dispatch(cli: &Cli, out: &mut dyn std::io::Write) -> Result<()> {
    match &cli.command {
        Command::Calibrate(a) => cmd_calibrate(a, out).map(drop),
        Command::Run(a) => cmd_run(a, out).map(drop),
        Command::TrainNgram(a) => cmd_train_ngram(a, out),
        Command::Report(a) => cmd_report(a, out).map(drop),
    }
}

/// Parses `args` and runs the command, printing errors to stderr.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut stdout = std::io::stdout().lock();
    match dispatch(&cli, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn main() -> ExitCode {
    run_from(std::env::args_os())
}
