//! The outer learning loop: train the recognition model, search a batch of training tasks,
//! compress the library, refit the translation model; plus evaluation, checkpoints and metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compression::{compress, Accepted, CompressionParams, CompressionResult};
use crate::dataset::Dataset;
use crate::domains::Domain;
use crate::error::Error;
use crate::grammar::Grammar;
use crate::recognition::{sample_joint, Example, LanguageEncoder, RecognitionModel, LEARNING_RATE};
use crate::search::{solve_tasks, Frontier, SearchBudget};
use crate::task::Task;
use crate::translation::{linearize, train_em, SmoothedLm, TranslationParams, TranslationTable};
use crate::util::derive_seed;

/// Add-k constant of the description language model.
const LM_SMOOTHING: f64 = 0.1;

/// Environment variable that sets the worker count.
pub const WORKERS_ENV: &str = "LANGSYNTH_WORKERS";

/// Ablation ladder; each mode adds one component to the previous one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Examples only, as in plain wake-sleep library learning.
    Baseline,
    /// Descriptions also condition the recognition model.
    Multimodal,
    /// Dreams carry descriptions generated by the translation model.
    Laps,
    /// Unseen words receive mutual-exclusivity pseudo-alignments.
    LapsMe,
    /// Compression also scores the translation model's description length.
    LapsMeCompression,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Baseline,
        Mode::Multimodal,
        Mode::Laps,
        Mode::LapsMe,
        Mode::LapsMeCompression,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Multimodal => "multimodal",
            Mode::Laps => "laps",
            Mode::LapsMe => "laps-me",
            Mode::LapsMeCompression => "laps-me-compression",
        }
    }

    pub fn encodes_language(self) -> bool {
        self >= Mode::Multimodal
    }

    pub fn generates_language(self) -> bool {
        self >= Mode::Laps
    }

    pub fn mutual_exclusivity(self) -> bool {
        self >= Mode::LapsMe
    }

    pub fn joint_compression(self) -> bool {
        self == Mode::LapsMeCompression
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Strings,
    Graphics,
}

impl DomainKind {
    pub fn default_iterations(self) -> usize {
        match self {
            DomainKind::Strings => 10,
            DomainKind::Graphics => 27,
        }
    }
}

impl FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "strings" => Ok(DomainKind::Strings),
            "graphics" => Ok(DomainKind::Graphics),
            _ => Err(Error::Config(format!("unknown domain `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainKind,
    pub iterations: usize,
    pub batch_size: usize,
    /// Node expansions per task.
    pub budget: u64,
    pub beam_width: usize,
    pub compression: CompressionParams,
    pub translation: TranslationParams,
    pub recognition_steps: usize,
    /// Joint samples drawn per iteration for recognition training.
    pub dreams: usize,
    pub mode: Mode,
    pub language_at_test: bool,
    /// Held-out evaluation period in iterations; the final iteration is always evaluated.
    pub eval_interval: usize,
    /// Order training tasks by description length instead of shuffling.
    pub curriculum: bool,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(domain: DomainKind) -> Self {
        RunConfig {
            domain,
            iterations: domain.default_iterations(),
            batch_size: 40,
            budget: SearchBudget::default().max_expansions(),
            beam_width: 5,
            compression: CompressionParams::default(),
            translation: TranslationParams::default(),
            recognition_steps: crate::recognition::DEFAULT_STEPS,
            dreams: 300,
            mode: Mode::LapsMeCompression,
            language_at_test: true,
            eval_interval: 5,
            curriculum: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.beam_width == 0 {
            return Err(Error::Config("beam_width must be positive".into()));
        }
        if self.eval_interval == 0 {
            return Err(Error::Config("eval_interval must be positive".into()));
        }
        SearchBudget::new(self.budget).map_err(|e| Error::Config(e.to_string()))?;
        self.compression.validate()?;
        self.translation.validate()
    }

    fn search_budget(&self) -> SearchBudget {
        SearchBudget::new(self.budget.max(1)).unwrap_or_default()
    }

    fn compression_params(&self) -> CompressionParams {
        let mut p = self.compression.clone();
        if !self.mode.joint_compression() {
            p.translation_weight = 0.0;
        }
        p
    }
}

/// One line of the metrics history. Held-out rates are present only on evaluated iterations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: usize,
    pub test_solved: Option<f64>,
    pub test_solved_no_language: Option<f64>,
    /// Fraction of training tasks with at least one solution.
    pub train_solved: f64,
    pub library_size: usize,
    pub inventions: usize,
    pub dl_programs: f64,
    pub dl_library: f64,
    pub dl_alignments: f64,
    pub recognition_loss: Option<f64>,
    /// `name=body` for abstractions accepted this iteration.
    pub accepted: Vec<String>,
}

const COLUMNS: [&str; 11] = [
    "iteration",
    "test_solved",
    "test_solved_no_language",
    "train_solved",
    "library_size",
    "inventions",
    "dl_programs",
    "dl_library",
    "dl_alignments",
    "recognition_loss",
    "accepted",
];

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| v.to_string())
}

impl MetricsRow {
    fn to_tsv(&self) -> String {
        [
            self.iteration.to_string(),
            opt(self.test_solved),
            opt(self.test_solved_no_language),
            self.train_solved.to_string(),
            self.library_size.to_string(),
            self.inventions.to_string(),
            self.dl_programs.to_string(),
            self.dl_library.to_string(),
            self.dl_alignments.to_string(),
            opt(self.recognition_loss),
            self.accepted.join(";"),
        ]
        .join("\t")
    }

    fn from_tsv(line: &str) -> Result<MetricsRow, Error> {
        let bad = || Error::Data(format!("bad metrics row `{line}`"));
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != COLUMNS.len() {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad());
        let maybe = |s: &str| if s == "-" { Ok(None) } else { num(s).map(Some) };
        Ok(MetricsRow {
            iteration: int(f[0])?,
            test_solved: maybe(f[1])?,
            test_solved_no_language: maybe(f[2])?,
            train_solved: num(f[3])?,
            library_size: int(f[4])?,
            inventions: int(f[5])?,
            dl_programs: num(f[6])?,
            dl_library: num(f[7])?,
            dl_alignments: num(f[8])?,
            recognition_loss: maybe(f[9])?,
            accepted: f[10].split(';').filter(|s| !s.is_empty()).map(str::to_string).collect(),
        })
    }
}

/// Tab-separated metrics with a header; floats are written in shortest round-trip form.
pub fn metrics_to_tsv(rows: &[MetricsRow]) -> String {
    let mut s = COLUMNS.join("\t");
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_tsv());
        s.push('\n');
    }
    s
}

pub fn metrics_from_tsv(text: &str) -> Result<Vec<MetricsRow>, Error> {
    let mut lines = text.lines();
    match lines.next() {
        None => return Ok(Vec::new()),
        Some(h) if h == COLUMNS.join("\t") => {}
        Some(h) => return Err(Error::Data(format!("unexpected metrics header `{h}`"))),
    }
    lines.filter(|l| !l.is_empty()).map(MetricsRow::from_tsv).collect()
}

/// Loop state between iterations. `iteration` is the next iteration to run.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub iteration: usize,
    pub grammar: Grammar,
    pub table: TranslationTable,
    /// The most recent recognition model, kept only while it matches `grammar`.
    pub model: Option<RecognitionModel>,
    /// One frontier per training task, in dataset order.
    pub frontiers: Vec<Frontier>,
    pub history: Vec<MetricsRow>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    iteration: usize,
    grammar: String,
    table: TranslationTable,
    model: Option<String>,
    frontiers: Vec<Frontier>,
    history: Vec<MetricsRow>,
}

impl Checkpoint {
    pub fn initial<Dm: Domain>(domain: &Dm, dataset: &Dataset<Dm::Data>, config: &RunConfig) -> Checkpoint {
        Checkpoint {
            iteration: 0,
            grammar: domain.initial_grammar(),
            table: TranslationTable::default(),
            model: None,
            frontiers: dataset
                .train
                .iter()
                .map(|t| Frontier::empty(t.id.clone(), t.request.clone(), config.beam_width))
                .collect(),
            history: Vec::new(),
        }
    }

    /// Exact serialization; reloading reproduces the rest of the run.
    pub fn to_json(&self) -> Result<String, Error> {
        Ok(serde_json::to_string(&CheckpointFile {
            iteration: self.iteration,
            grammar: self.grammar.to_text(),
            table: self.table.clone(),
            model: self.model.as_ref().map(RecognitionModel::to_text),
            frontiers: self.frontiers.clone(),
            history: self.history.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Checkpoint, Error> {
        let f: CheckpointFile = serde_json::from_str(text)?;
        Ok(Checkpoint {
            iteration: f.iteration,
            grammar: Grammar::from_text(&f.grammar)?,
            table: f.table,
            model: f.model.as_deref().map(RecognitionModel::from_text).transpose()?,
            frontiers: f.frontiers,
            history: f.history,
        })
    }

    pub fn solved(&self) -> usize {
        self.frontiers.iter().filter(|f| !f.is_empty()).count()
    }
}

/// What happened in one iteration, for logs.
#[derive(Clone, Debug)]
pub struct IterationReport {
    pub row: MetricsRow,
    pub compression: Option<String>,
    pub accepted: Vec<Accepted>,
}

/// Runs `f` on a pool sized by [`WORKERS_ENV`], or rayon's default when unset.
pub fn with_workers<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R, Error> {
    let workers = match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")))?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(f))
}

/// Training-set visiting order: shuffled once, or by description length under the curriculum.
fn task_order<D>(train: &[Task<D>], config: &RunConfig) -> Vec<usize> {
    let mut order: Vec<usize> = (0..train.len()).collect();
    if config.curriculum {
        order.sort_by_key(|&i| train[i].description_tokens().len());
    } else {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "order", 0)));
    }
    order
}

fn batch(order: &[usize], iteration: usize, size: usize) -> Vec<usize> {
    if order.is_empty() {
        return Vec::new();
    }
    let n = size.min(order.len());
    (0..n).map(|k| order[(iteration * size + k) % order.len()]).collect()
}

fn language_model<D>(train: &[Task<D>]) -> SmoothedLm {
    SmoothedLm::train(
        train.iter().filter_map(|t| t.description.as_deref()).filter(|d| !d.is_empty()),
        LM_SMOOTHING,
    )
}

/// Trains a fresh recognition model against `grammar`, or returns `None` before the first solve.
fn train_recognition<Dm: Domain>(
    domain: &Dm,
    dataset: &Dataset<Dm::Data>,
    config: &RunConfig,
    state: &Checkpoint,
    lm: &SmoothedLm,
) -> Option<(RecognitionModel, f64)> {
    if state.solved() == 0 {
        return None;
    }
    let mode = config.mode;
    let grammar = &state.grammar;
    let i = state.iteration as u64;
    let encoder = if mode.encodes_language() {
        LanguageEncoder::new(dataset.train.iter().flat_map(|t| t.description_tokens().iter().cloned()))
    } else {
        LanguageEncoder::default()
    };
    let mut model = RecognitionModel::new(grammar, domain.feature_len(), encoder, derive_seed(config.seed, "recognition", i));
    let mut supervised: Vec<Example> = Vec::new();
    let mut dreams: Vec<Example> = Vec::new();
    // Language-conditioned modes also see each example without its description, so that the
    // model stays usable when no description is given.
    let push = |pool: &mut Vec<Example>, features: Vec<f64>, words: Option<&[String]>, program, request| {
        let words = words.filter(|w| mode.encodes_language() && !w.is_empty());
        if let Ok(ex) = model.example(grammar, features.clone(), words, program, request) {
            if words.is_some() {
                pool.push(Example { language: None, ..ex.clone() });
            }
            pool.push(ex);
        }
    };
    for (task, frontier) in dataset.train.iter().zip(&state.frontiers) {
        if let Some(best) = frontier.best() {
            push(&mut supervised, domain.task_features(task), task.description.as_deref(), &best.program, &task.request);
        }
    }
    let language = mode.generates_language().then_some((&state.table, lm));
    let samples = sample_joint(grammar, language, domain, config.dreams, derive_seed(config.seed, "dreams", i));
    for s in &samples.samples {
        let words = mode.generates_language().then_some(s.description.as_slice());
        push(&mut dreams, domain.task_features(&s.task), words, &s.program, &s.task.request);
    }
    let loss = model.train(
        &supervised,
        &dreams,
        config.recognition_steps,
        derive_seed(config.seed, "sgd", i),
        LEARNING_RATE,
    );
    Some((model, loss))
}

/// Searches `tasks` under the model's per-task predictions, or the grammar prior without a model.
/// Returns one frontier per task.
pub fn search<Dm: Domain>(
    domain: &Dm,
    grammar: &Grammar,
    model: Option<&RecognitionModel>,
    tasks: &[Task<Dm::Data>],
    budget: SearchBudget,
    beam_width: usize,
    use_language: bool,
) -> Result<Vec<Frontier>, Error> {
    let limit = domain.eval_limit();
    match model {
        Some(m) => {
            let shared = Arc::new(grammar.clone());
            let dists = tasks
                .iter()
                .map(|t| {
                    let words = t.description.as_deref().filter(|_| use_language);
                    m.predict(&shared, &domain.task_features(t), words)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(solve_tasks(tasks, &dists, grammar, domain, budget, beam_width, limit))
        }
        None => Ok(solve_tasks(tasks, std::slice::from_ref(grammar), grammar, domain, budget, beam_width, limit)),
    }
}

/// Fraction of `tasks` solved within `budget`, guided by the checkpoint's model when it has one.
pub fn evaluate<Dm: Domain>(
    domain: &Dm,
    checkpoint: &Checkpoint,
    tasks: &[Task<Dm::Data>],
    budget: SearchBudget,
    use_language: bool,
) -> Result<f64, Error> {
    if tasks.is_empty() {
        return Ok(0.0);
    }
    let frontiers = search(domain, &checkpoint.grammar, checkpoint.model.as_ref(), tasks, budget, 1, use_language)?;
    Ok(frontiers.iter().filter(|f| !f.is_empty()).count() as f64 / tasks.len() as f64)
}

/// Advances `state` by one iteration, or only evaluates when it is already at the last one.
pub fn step<Dm: Domain>(
    domain: &Dm,
    dataset: &Dataset<Dm::Data>,
    config: &RunConfig,
    state: &mut Checkpoint,
) -> Result<IterationReport, Error> {
    if state.frontiers.len() != dataset.train.len() {
        return Err(Error::Data("checkpoint does not match the training set".into()));
    }
    let i = state.iteration;
    let last = i >= config.iterations;
    let lm = language_model(&dataset.train);
    let trained = train_recognition(domain, dataset, config, state, &lm);
    let loss = trained.as_ref().map(|t| t.1);
    state.model = trained.map(|t| t.0);

    let budget = config.search_budget();
    let (mut test_solved, mut test_solved_no_language) = (None, None);
    if last || (i > 0 && i.is_multiple_of(config.eval_interval)) {
        let with_language = config.language_at_test && config.mode.encodes_language();
        let rate = evaluate(domain, state, &dataset.test, budget, with_language)?;
        test_solved = Some(rate);
        test_solved_no_language = Some(if with_language && state.model.is_some() {
            evaluate(domain, state, &dataset.test, budget, false)?
        } else {
            rate
        });
    }

    let mut compression = None;
    if !last {
        let order = task_order(&dataset.train, config);
        let picked = batch(&order, i, config.batch_size);
        let tasks: Vec<Task<Dm::Data>> = picked.iter().map(|&k| dataset.train[k].clone()).collect();
        let found = search(
            domain,
            &state.grammar,
            state.model.as_ref(),
            &tasks,
            budget,
            config.beam_width,
            config.mode.encodes_language(),
        )?;
        for (&k, f) in picked.iter().zip(found) {
            state.frontiers[k].merge(f.entries);
        }
        let result = compress(&state.frontiers, &state.grammar, &state.table, &config.compression_params());
        state.grammar = result.grammar.clone();
        state.frontiers = result.frontiers.clone();
        state.table = refit_translation(dataset, config, state);
        state.model = None;
        state.iteration += 1;
        compression = Some(result);
    }

    let row = metrics_row(i, test_solved, test_solved_no_language, loss, state, compression.as_ref());
    state.history.push(row.clone());
    Ok(IterationReport {
        row,
        compression: compression.as_ref().map(CompressionResult::report),
        accepted: compression.map(|c| c.accepted).unwrap_or_default(),
    })
}

/// Model 1 on (best program, description) for solved tasks, then mutual exclusivity for words
/// that occur only in unsolved descriptions.
fn refit_translation<D>(dataset: &Dataset<D>, config: &RunConfig, state: &Checkpoint) -> TranslationTable {
    if !config.mode.generates_language() {
        return TranslationTable::default();
    }
    let pairs: Vec<(Vec<String>, Vec<String>)> = dataset
        .train
        .iter()
        .zip(&state.frontiers)
        .filter_map(|(t, f)| Some((linearize(&f.best()?.program), t.description.clone()?)))
        .collect();
    let table = train_em(&pairs, &config.translation);
    if !(config.mode.mutual_exclusivity() && config.translation.me_enabled) {
        return table;
    }
    let unseen: BTreeSet<&str> = dataset
        .train
        .iter()
        .zip(&state.frontiers)
        .filter(|(_, f)| f.is_empty())
        .flat_map(|(t, _)| t.description_tokens().iter().map(String::as_str))
        .filter(|w| !table.known_words().contains(*w))
        .collect();
    if unseen.is_empty() {
        return table;
    }
    table.apply_mutual_exclusivity(&state.grammar, unseen, config.translation.alpha_me)
}

fn metrics_row(
    iteration: usize,
    test_solved: Option<f64>,
    test_solved_no_language: Option<f64>,
    recognition_loss: Option<f64>,
    state: &Checkpoint,
    compression: Option<&CompressionResult>,
) -> MetricsRow {
    let objective = compression.map(|c| c.objective_after).unwrap_or_default();
    MetricsRow {
        iteration,
        test_solved,
        test_solved_no_language,
        train_solved: state.solved() as f64 / state.frontiers.len().max(1) as f64,
        library_size: state.grammar.len(),
        inventions: state.grammar.invented_count(),
        dl_programs: objective.program,
        dl_library: objective.grammar,
        dl_alignments: objective.translation,
        recognition_loss,
        accepted: compression
            .into_iter()
            .flat_map(|c| &c.accepted)
            .map(|a| format!("{}={}", a.name, a.body))
            .collect(),
    }
}

/// Continues from `state` through the final evaluation, calling `observe` after every iteration.
pub fn resume<Dm: Domain>(
    domain: &Dm,
    dataset: &Dataset<Dm::Data>,
    config: &RunConfig,
    mut state: Checkpoint,
    mut observe: impl FnMut(&Checkpoint, &IterationReport) -> Result<(), Error>,
) -> Result<Checkpoint, Error> {
    config.validate()?;
    if state.history.last().is_some_and(|r| r.iteration >= config.iterations) {
        return Ok(state);
    }
    loop {
        let done = state.iteration >= config.iterations;
        let report = step(domain, dataset, config, &mut state)?;
        observe(&state, &report)?;
        if done {
            return Ok(state);
        }
    }
}

/// Runs the full loop from the initial library.
pub fn run<Dm: Domain>(
    domain: &Dm,
    dataset: &Dataset<Dm::Data>,
    config: &RunConfig,
    observe: impl FnMut(&Checkpoint, &IterationReport) -> Result<(), Error>,
) -> Result<Checkpoint, Error> {
    resume(domain, dataset, config, Checkpoint::initial(domain, dataset, config), observe)
}

/// Final held-out rates of one replication.
#[derive(Clone, Debug, PartialEq)]
pub struct Replication {
    pub label: String,
    pub history: Vec<MetricsRow>,
}

impl Replication {
    fn final_rates(&self) -> Option<(f64, f64)> {
        self.history
            .iter()
            .rev()
            .find_map(|r| Some((r.test_solved?, r.test_solved_no_language?)))
    }
}

/// Per-iteration table of one history.
pub fn history_table(rows: &[MetricsRow]) -> String {
    let mut s = String::new();
    if rows.is_empty() {
        return s;
    }
    let _ = writeln!(
        s,
        "{:>4}  {:>8}  {:>8}  {:>8}  {:>7}  {:>10}  {:>10}  {:>10}",
        "iter", "test %", "no-lang %", "train %", "library", "DL progs", "DL lib", "DL align"
    );
    let pct = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{:.1}", 100.0 * v));
    for r in rows {
        let _ = writeln!(
            s,
            "{:>4}  {:>8}  {:>8}  {:>8.1}  {:>7}  {:>10.2}  {:>10.2}  {:>10.2}",
            r.iteration,
            pct(r.test_solved),
            pct(r.test_solved_no_language),
            100.0 * r.train_solved,
            r.library_size,
            r.dl_programs,
            r.dl_library,
            r.dl_alignments
        );
        for a in &r.accepted {
            let _ = writeln!(s, "      + {a}");
        }
    }
    s
}

/// Comparison table over replications grouped by label: best and mean final held-out rates,
/// with and without language at test.
pub fn comparison_table(replications: &[Replication]) -> String {
    let mut groups: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in replications {
        if let Some(x) = r.final_rates() {
            groups.entry(&r.label).or_default().push(x);
        }
    }
    let mut s = String::new();
    if groups.is_empty() {
        return s;
    }
    let _ = writeln!(
        s,
        "{:<24}  {:>5}  {:>8}  {:>8}  {:>14}  {:>14}",
        "model", "runs", "best %", "mean %", "no-lang best %", "no-lang mean %"
    );
    for (label, xs) in groups {
        let best = |f: fn(&(f64, f64)) -> f64| xs.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let mean = |f: fn(&(f64, f64)) -> f64| xs.iter().map(f).sum::<f64>() / xs.len() as f64;
        let _ = writeln!(
            s,
            "{:<24}  {:>5}  {:>8.2}  {:>8.2}  {:>14.2}  {:>14.2}",
            label,
            xs.len(),
            100.0 * best(|x| x.0),
            100.0 * mean(|x| x.0),
            100.0 * best(|x| x.1),
            100.0 * mean(|x| x.1)
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: usize) -> MetricsRow {
        MetricsRow {
            iteration: i,
            test_solved: i.is_multiple_of(2).then_some(0.1 + 0.2),
            test_solved_no_language: None,
            train_solved: 1.0 / 3.0,
            library_size: 12,
            inventions: 1,
            dl_programs: 123.456789012345,
            dl_library: 1e-17,
            dl_alignments: 0.0,
            recognition_loss: Some(2.5),
            accepted: vec!["#0=(lambda (f $0))".into()],
        }
    }

    #[test]
    fn metrics_round_trip_exactly() {
        let rows: Vec<_> = (0..3).map(row).collect();
        assert_eq!(metrics_from_tsv(&metrics_to_tsv(&rows)).unwrap(), rows);
        assert!(metrics_from_tsv("").unwrap().is_empty());
    }

    #[test]
    fn modes_layer() {
        let flags = |m: Mode| {
            [
                m.encodes_language(),
                m.generates_language(),
                m.mutual_exclusivity(),
                m.joint_compression(),
            ]
        };
        for w in Mode::ALL.windows(2) {
            let (a, b) = (flags(w[0]), flags(w[1]));
            let changed = a.iter().zip(&b).filter(|(x, y)| x != y).count();
            assert_eq!(changed, 1, "{} -> {}", w[0], w[1]);
        }
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
    }

    #[test]
    fn batches_cycle_through_the_order() {
        let order = vec![3, 1, 4, 0, 2];
        assert_eq!(batch(&order, 0, 2), vec![3, 1]);
        assert_eq!(batch(&order, 2, 2), vec![2, 3]);
        assert_eq!(batch(&order, 0, 9), order);
    }

    #[test]
    fn empty_history_makes_empty_tables() {
        assert!(history_table(&[]).is_empty());
        assert!(comparison_table(&[]).is_empty());
    }
}
