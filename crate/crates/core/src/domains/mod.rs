//! Executable domains: primitives with semantics, task generators with ground-truth programs and
//! synthetic descriptions, output equality and task features.

pub mod graphics;
pub mod regex;
pub mod strings;

use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::eval::{EvalLimit, Executor};
use crate::grammar::Grammar;
use crate::task::{Split, Task};
use crate::term::Term;
use crate::types::PolyType;

/// A generated task together with the program it was generated from.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedTask<D> {
    pub task: Task<D>,
    pub solution: Term,
}

pub trait Domain: Executor + Send + Sync {
    fn name(&self) -> &'static str;

    /// Base primitives and their type schemes.
    fn primitives(&self) -> Vec<(String, PolyType)>;

    fn initial_grammar(&self) -> Grammar {
        Grammar::new(self.primitives())
    }

    /// Type of every task's solution.
    fn request(&self) -> PolyType;

    fn eval_limit(&self) -> EvalLimit {
        EvalLimit::default()
    }

    /// Length of [`Domain::task_features`] vectors.
    fn feature_len(&self) -> usize;

    /// Raw, fixed-length, deterministic features of a task's examples.
    fn task_features(&self, task: &Task<Self::Data>) -> Vec<f64>;

    /// Argument lists for `n` fresh examples, used when sampling tasks from programs.
    fn sample_inputs(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<Self::Data>>;

    /// Examples drawn per task when sampling tasks from programs.
    fn sample_example_count(&self) -> usize {
        10
    }

    /// Whether examples produced by a sampled program are informative enough to train on.
    fn accept_sample(&self, examples: &[(Vec<Self::Data>, Self::Data)]) -> bool;

    /// Seeded task generation; every task is solved by its ground-truth program.
    fn generate_tasks(&self, n: usize, seed: u64, split: Split) -> Vec<GeneratedTask<Self::Data>>;

    fn encode_value(&self, value: &Self::Data) -> serde_json::Value;

    fn decode_value(&self, value: &serde_json::Value) -> Result<Self::Data, Error>;
}

/// Splits a description on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Number words used by both domains' templates.
pub fn number_word(n: i64) -> &'static str {
    match n {
        1 => "one",
        2 => "two",
        3 => "three",
        4 => "four",
        5 => "five",
        6 => "six",
        7 => "seven",
        8 => "eight",
        9 => "nine",
        10 => "ten",
        _ => "many",
    }
}
