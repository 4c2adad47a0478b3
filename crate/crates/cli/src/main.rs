use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use langsynth_core::dataset::{self, Dataset};
use langsynth_core::domains::graphics::Graphics;
use langsynth_core::domains::strings::Strings;
use langsynth_core::domains::Domain;
use langsynth_core::error::Error;
use langsynth_core::harness::{
    self, comparison_table, history_table, metrics_from_tsv, metrics_to_tsv, Checkpoint, DomainKind, Mode,
    Replication, RunConfig,
};
use langsynth_core::search::SearchBudget;

#[derive(Parser)]
#[command(name = "langsynth", version, about = "Library learning with language-guided program search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a task dataset as JSON lines.
    Generate(GenerateArgs),
    /// Run the learning loop and write artifacts to a run directory.
    Run(RunArgs),
    /// Held-out solve rate of a checkpoint.
    Evaluate(EvaluateArgs),
    /// Summarize one or more run directories.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    domain: DomainKind,
    #[arg(long, default_value_t = 100)]
    train: usize,
    #[arg(long, default_value_t = 50)]
    test: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Examples per string-editing task.
    #[arg(long, default_value_t = 30)]
    examples: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Run directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Continue from the run directory's checkpoint.
    #[arg(long)]
    resume: bool,
    /// Start from a JSON config; other flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    domain: Option<DomainKind>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Node expansions per task.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    beam_width: Option<usize>,
    #[arg(long)]
    recognition_steps: Option<usize>,
    #[arg(long)]
    dreams: Option<usize>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    language_at_test: Option<bool>,
    #[arg(long)]
    eval_interval: Option<usize>,
    #[arg(long)]
    curriculum: Option<bool>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    structure_penalty: Option<f64>,
    #[arg(long)]
    pseudocounts: Option<f64>,
    #[arg(long)]
    max_new_per_iteration: Option<usize>,
    #[arg(long)]
    max_arity: Option<usize>,
    #[arg(long)]
    refactoring_depth: Option<usize>,
    #[arg(long)]
    translation_weight: Option<f64>,
    #[arg(long)]
    candidates_per_round: Option<usize>,
    #[arg(long)]
    em_iterations: Option<usize>,
    #[arg(long)]
    alpha_me: Option<f64>,
    #[arg(long)]
    me_enabled: Option<bool>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    domain: DomainKind,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value_t = 200_000)]
    budget: u64,
    /// Condition only on examples.
    #[arg(long)]
    no_language: bool,
    /// Ignore the recognition model and enumerate from the library prior.
    #[arg(long)]
    enumerative: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directories, each holding config.json and metrics.tsv.
    runs: Vec<PathBuf>,
    /// Also write the final rates of every run as tab-separated text.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Report(a) => report(a),
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let (train, test) = match a.domain {
        DomainKind::Strings => {
            let d = Strings::new(a.examples);
            let ds = dataset::generate(&d, a.train, a.test, a.seed);
            dataset::save(&d, &ds, &a.out)?;
            (ds.train.len(), ds.test.len())
        }
        DomainKind::Graphics => {
            let ds = dataset::generate(&Graphics, a.train, a.test, a.seed);
            dataset::save(&Graphics, &ds, &a.out)?;
            (ds.train.len(), ds.test.len())
        }
    };
    println!("wrote {train} training and {test} held-out tasks to {}", a.out.display());
    Ok(())
}

fn build_config(a: &RunArgs) -> Result<RunConfig> {
    let mut c = match (&a.config, a.domain) {
        (Some(path), _) => serde_json::from_str(&fs::read_to_string(path)?)
            .with_context(|| format!("reading config {}", path.display()))?,
        (None, Some(d)) => RunConfig::new(d),
        (None, None) => bail!("either --config or --domain is required"),
    };
    macro_rules! set {
        ($($field:ident).+ = $flag:ident) => {
            if let Some(v) = a.$flag.clone() {
                c.$($field).+ = v;
            }
        };
    }
    set!(domain = domain);
    set!(iterations = iterations);
    set!(batch_size = batch_size);
    set!(budget = budget);
    set!(beam_width = beam_width);
    set!(recognition_steps = recognition_steps);
    set!(dreams = dreams);
    set!(mode = mode);
    set!(language_at_test = language_at_test);
    set!(eval_interval = eval_interval);
    set!(curriculum = curriculum);
    set!(seed = seed);
    set!(compression.structure_penalty = structure_penalty);
    set!(compression.pseudocounts = pseudocounts);
    set!(compression.max_new_per_iteration = max_new_per_iteration);
    set!(compression.max_arity = max_arity);
    set!(compression.refactoring_depth = refactoring_depth);
    set!(compression.translation_weight = translation_weight);
    set!(compression.candidates_per_round = candidates_per_round);
    set!(translation.em_iterations = em_iterations);
    set!(translation.alpha_me = alpha_me);
    set!(translation.me_enabled = me_enabled);
    c.validate()?;
    Ok(c)
}

fn run(a: RunArgs) -> Result<()> {
    let config = build_config(&a)?;
    match config.domain {
        DomainKind::Strings => run_in(&Strings::default(), &a, &config),
        DomainKind::Graphics => run_in(&Graphics, &a, &config),
    }
}

fn write_artifacts(dir: &Path, state: &Checkpoint) -> Result<(), Error> {
    fs::write(dir.join("checkpoint.json"), state.to_json()?)?;
    fs::write(dir.join("metrics.tsv"), metrics_to_tsv(&state.history))?;
    fs::write(dir.join("grammar.txt"), state.grammar.to_text())?;
    fs::write(dir.join("translation.txt"), state.table.to_text())?;
    if let Some(m) = &state.model {
        fs::write(dir.join("model.txt"), m.to_text())?;
    }
    Ok(())
}

fn run_in<Dm: Domain>(domain: &Dm, a: &RunArgs, config: &RunConfig) -> Result<()> {
    let data: Dataset<Dm::Data> = dataset::load(domain, &a.dataset)
        .with_context(|| format!("loading dataset {}", a.dataset.display()))?;
    fs::create_dir_all(&a.out)?;
    let config_path = a.out.join("config.json");
    let echoed = serde_json::to_string_pretty(config)?;
    let start = if a.resume {
        if fs::read_to_string(&config_path).ok().as_deref() != Some(echoed.as_str()) {
            bail!("--resume needs the same configuration as {}", config_path.display());
        }
        Checkpoint::from_json(&fs::read_to_string(a.out.join("checkpoint.json"))?)?
    } else {
        fs::write(&config_path, &echoed)?;
        fs::write(a.out.join("compression.log"), "")?;
        Checkpoint::initial(domain, &data, config)
    };
    let log_path = a.out.join("compression.log");
    let final_state = harness::with_workers(|| {
        harness::resume(domain, &data, config, start, |state, report| {
            let r = &report.row;
            let pct = |x: Option<f64>| x.map_or_else(|| "-".into(), |v| format!("{:.1}%", 100.0 * v));
            eprintln!(
                "iteration {}: train {:.1}%, test {} (no language {}), library {}",
                r.iteration,
                100.0 * r.train_solved,
                pct(r.test_solved),
                pct(r.test_solved_no_language),
                r.library_size
            );
            if let Some(text) = &report.compression {
                let mut log = fs::read_to_string(&log_path).unwrap_or_default();
                log.push_str(&format!("## iteration {}\n{text}", r.iteration));
                fs::write(&log_path, log)?;
            }
            write_artifacts(&a.out, state)
        })
    })??;
    print!("{}", history_table(&final_state.history));
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let mut checkpoint = Checkpoint::from_json(&fs::read_to_string(&a.checkpoint)?)?;
    if a.enumerative {
        checkpoint.model = None;
    }
    let budget = SearchBudget::new(a.budget)?;
    let rate = match a.domain {
        DomainKind::Strings => eval_in(&Strings::default(), &a, &checkpoint, budget)?,
        DomainKind::Graphics => eval_in(&Graphics, &a, &checkpoint, budget)?,
    };
    println!("{rate}");
    Ok(())
}

fn eval_in<Dm: Domain>(domain: &Dm, a: &EvaluateArgs, checkpoint: &Checkpoint, budget: SearchBudget) -> Result<f64> {
    let data = dataset::load(domain, &a.dataset)?;
    Ok(harness::with_workers(|| harness::evaluate(domain, checkpoint, &data.test, budget, !a.no_language))??)
}

fn report(a: ReportArgs) -> Result<()> {
    let mut runs = Vec::new();
    for dir in &a.runs {
        let config: RunConfig = serde_json::from_str(&fs::read_to_string(dir.join("config.json"))?)
            .with_context(|| format!("reading {}", dir.join("config.json").display()))?;
        let history = metrics_from_tsv(&fs::read_to_string(dir.join("metrics.tsv"))?)?;
        println!("{} (mode {}, seed {})", dir.display(), config.mode, config.seed);
        print!("{}", history_table(&history));
        runs.push((dir, config, history));
    }
    let reps: Vec<Replication> = runs
        .iter()
        .map(|(_, c, h)| Replication {
            label: c.mode.to_string(),
            history: h.clone(),
        })
        .collect();
    print!("{}", comparison_table(&reps));
    if let Some(out) = a.out {
        let mut s = String::from("run\tmode\tseed\titeration\ttest_solved\ttest_solved_no_language\n");
        for (dir, config, history) in &runs {
            if let Some(r) = history.iter().rev().find(|r| r.test_solved.is_some()) {
                let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| v.to_string());
                s.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\n",
                    dir.display(),
                    config.mode,
                    config.seed,
                    r.iteration,
                    opt(r.test_solved),
                    opt(r.test_solved_no_language)
                ));
            }
        }
        fs::write(out, s)?;
    }
    Ok(())
}
