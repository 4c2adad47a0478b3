//! Library learning for typed lambda-calculus programs, guided by paired natural-language
//! descriptions.

pub mod compression;
pub mod dataset;
pub mod domains;
pub mod error;
pub mod eval;
pub mod grammar;
pub mod harness;
pub mod recognition;
pub mod search;
pub mod task;
pub mod term;
pub mod translation;
pub mod types;
pub mod util;

pub use error::Error;
pub use grammar::Grammar;
pub use harness::{Checkpoint, DomainKind, Mode, RunConfig};
pub use search::{Frontier, FrontierEntry, SearchBudget};
pub use task::{Split, Task};
pub use term::Term;
pub use translation::TranslationTable;
pub use types::PolyType;
