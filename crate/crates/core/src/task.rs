//! Inductive tasks and the 0/1 likelihood.

use serde::{Deserialize, Serialize};

use crate::eval::{evaluate, EvalLimit, Executor, Inventions};
use crate::term::Term;
use crate::types::PolyType;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Input/output examples for a program of type `request`, with an optional description.
#[derive(Clone, Debug, PartialEq)]
pub struct Task<D> {
    pub id: String,
    pub request: PolyType,
    /// Each example is (arguments, expected output).
    pub examples: Vec<(Vec<D>, D)>,
    pub description: Option<Vec<String>>,
    pub split: Split,
}

impl<D> Task<D> {
    pub fn description_tokens(&self) -> &[String] {
        self.description.as_deref().unwrap_or(&[])
    }
}

/// True iff `program` maps every example input to its output. Evaluation errors count as false.
pub fn check_task<E: Executor>(
    program: &Term,
    task: &Task<E::Data>,
    executor: &E,
    inventions: &Inventions,
    limit: EvalLimit,
) -> bool {
    task.examples.iter().all(|(inputs, expected)| {
        match evaluate(program, inputs, executor, inventions, limit) {
            Ok(out) => executor.output_equal(&out, expected),
            Err(_) => false,
        }
    })
}
