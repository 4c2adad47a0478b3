//! String editing: list and regex primitives over substrings, and a transducer task generator.
//!
//! Every ground-truth program first splits its input into characters with
//! `(regexsplit dot $0)` and reassembles the result with `flatten`.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::regex::Pattern;
use super::{Domain, GeneratedTask};
use crate::error::{Error, EvalError};
use crate::eval::{evaluate, Executor, Inventions, Machine, Value};
use crate::task::{Split, Task};
use crate::term::Term;
use crate::types::PolyType;
use crate::util::{derive_seed, stable_hash};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StrValue {
    Str(Arc<str>),
    Bool(bool),
    List(Arc<[StrValue]>),
}

impl StrValue {
    pub fn str(s: &str) -> Self {
        StrValue::Str(Arc::from(s))
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            StrValue::Str(s) => Some(s),
            _ => None,
        }
    }
}

/// The string-editing executor and task generator.
#[derive(Clone, Debug)]
pub struct Strings {
    examples_per_task: usize,
}

impl Default for Strings {
    fn default() -> Self {
        Strings {
            examples_per_task: 30,
        }
    }
}

const LETTERS: &str = "abcdefghijklmnopqrstuvwxyz";
const BIGRAM_BUCKETS: usize = 32;
const FEATURES: usize = 26 + BIGRAM_BUCKETS + 7;

fn str_arg<'a>(v: &'a Value<'_, StrValue>) -> Result<&'a str, EvalError> {
    match v.data()? {
        StrValue::Str(s) => Ok(s),
        _ => Err(EvalError::runtime("expected a string")),
    }
}

fn list_arg<'a>(v: &'a Value<'_, StrValue>) -> Result<&'a [StrValue], EvalError> {
    match v.data()? {
        StrValue::List(xs) => Ok(xs),
        _ => Err(EvalError::runtime("expected a list")),
    }
}

fn data<'a>(d: StrValue) -> Value<'a, StrValue> {
    Value::Data(d)
}

impl Strings {
    pub fn new(examples_per_task: usize) -> Self {
        Strings {
            examples_per_task: examples_per_task.max(1),
        }
    }

    pub fn examples_per_task(&self) -> usize {
        self.examples_per_task
    }

    fn word(rng: &mut ChaCha8Rng, must_contain: Option<char>) -> String {
        const VOWELS: &[u8] = b"aeiou";
        const CONSONANTS: &[u8] = b"bcdfghjklmnpqrstvwxyz";
        let len = rng.gen_range(3..=7);
        let mut vowel = rng.gen_bool(0.4);
        let mut w: Vec<char> = (0..len)
            .map(|_| {
                let pool = if vowel { VOWELS } else { CONSONANTS };
                vowel = if rng.gen_bool(0.8) { !vowel } else { vowel };
                pool[rng.gen_range(0..pool.len())] as char
            })
            .collect();
        if let Some(c) = must_contain {
            let k = rng.gen_range(1..=2);
            for _ in 0..k {
                let i = rng.gen_range(0..w.len());
                w[i] = c;
            }
        }
        w.into_iter().collect()
    }
}

/// Template families; letters are parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    RemoveFirst,
    RemoveLast,
    AddStart(char),
    AddEnd(char),
    ReplaceFirst(char),
    ReplaceLast(char),
    DoubleFirst,
    DoubleLast,
    RemoveEvery(char),
    ReplaceEvery(char, char),
    DoubleEvery(char),
    AddBefore(char, char),
    AddAfter(char, char),
    DoubleAll,
    ReplaceAll(char),
    /// An edit at the start after an edit at the end.
    Both(StartEdit, EndEdit),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum StartEdit {
    Remove,
    Replace(char),
    Add(char),
    Double,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EndEdit {
    Remove,
    Replace(char),
    Add(char),
    Double,
}

impl StartEdit {
    fn apply(self, m: &str) -> String {
        match self {
            StartEdit::Remove => format!("(cdr {m})"),
            StartEdit::Replace(x) => format!("(cons {x} (cdr {m}))"),
            StartEdit::Add(x) => format!("(cons {x} {m})"),
            StartEdit::Double => format!("(cons (car {m}) {m})"),
        }
    }

    fn description(self) -> String {
        match self {
            StartEdit::Remove => "remove the first letter".into(),
            StartEdit::Replace(x) => format!("replace the first letter with {x}"),
            StartEdit::Add(x) => format!("add {x} at the start"),
            StartEdit::Double => "double the first letter".into(),
        }
    }
}

impl EndEdit {
    fn apply(self, m: &str) -> String {
        match self {
            EndEdit::Remove => format!("(revcdr {m})"),
            EndEdit::Replace(x) => format!("(append {x} (revcdr {m}))"),
            EndEdit::Add(x) => format!("(append {x} {m})"),
            EndEdit::Double => format!("(append (tail {m}) {m})"),
        }
    }

    fn description(self) -> String {
        match self {
            EndEdit::Remove => "remove the last letter".into(),
            EndEdit::Replace(x) => format!("replace the last letter with {x}"),
            EndEdit::Add(x) => format!("add {x} at the end"),
            EndEdit::Double => "double the last letter".into(),
        }
    }
}

/// Single-edit families, then the sixteen start/end combinations; all equally likely.
const SINGLE_FAMILIES: usize = 15;
const FAMILY_COUNT: usize = SINGLE_FAMILIES + 16;

impl Family {
    fn sample(rng: &mut ChaCha8Rng) -> Family {
        let letters: Vec<char> = LETTERS.chars().collect();
        let x = *letters.choose(rng).unwrap();
        let mut c = *letters.choose(rng).unwrap();
        while c == x {
            c = *letters.choose(rng).unwrap();
        }
        match rng.gen_range(0..FAMILY_COUNT) {
            0 => Family::RemoveFirst,
            1 => Family::RemoveLast,
            2 => Family::AddStart(x),
            3 => Family::AddEnd(x),
            4 => Family::ReplaceFirst(x),
            5 => Family::ReplaceLast(x),
            6 => Family::DoubleFirst,
            7 => Family::DoubleLast,
            8 => Family::RemoveEvery(c),
            9 => Family::ReplaceEvery(c, x),
            10 => Family::DoubleEvery(c),
            11 => Family::AddBefore(x, c),
            12 => Family::AddAfter(x, c),
            13 => Family::DoubleAll,
            14 => Family::ReplaceAll(x),
            k => {
                let k = k - SINGLE_FAMILIES;
                let start = [StartEdit::Remove, StartEdit::Replace(x), StartEdit::Add(x), StartEdit::Double][k / 4];
                let end = [EndEdit::Remove, EndEdit::Replace(c), EndEdit::Add(c), EndEdit::Double][k % 4];
                Family::Both(start, end)
            }
        }
    }

    /// The letter examples should mention, if any.
    fn target(self) -> Option<char> {
        match self {
            Family::RemoveEvery(c)
            | Family::ReplaceEvery(c, _)
            | Family::DoubleEvery(c)
            | Family::AddBefore(_, c)
            | Family::AddAfter(_, c) => Some(c),
            _ => None,
        }
    }

    fn program(self) -> String {
        const L: &str = "(regexsplit dot $0)";
        let each = |body: String| format!("(lambda (flatten (map (lambda {body}) {L})))");
        let when = |c: char, then: String| format!("(if (match {c} $0) {then} $0)");
        match self {
            Family::RemoveFirst => format!("(lambda (flatten (cdr {L})))"),
            Family::RemoveLast => format!("(lambda (flatten (revcdr {L})))"),
            Family::AddStart(x) => format!("(lambda (flatten (cons {x} {L})))"),
            Family::AddEnd(x) => format!("(lambda (flatten (append {x} {L})))"),
            Family::ReplaceFirst(x) => format!("(lambda (flatten (cons {x} (cdr {L}))))"),
            Family::ReplaceLast(x) => format!("(lambda (flatten (append {x} (revcdr {L}))))"),
            Family::DoubleFirst => format!("(lambda (flatten (cons (car {L}) {L})))"),
            Family::DoubleLast => format!("(lambda (flatten (append (tail {L}) {L})))"),
            Family::RemoveEvery(c) => each(when(c, "empty".into())),
            Family::ReplaceEvery(c, x) => each(when(c, x.to_string())),
            Family::DoubleEvery(c) => each(when(c, "(rconcat $0 $0)".into())),
            Family::AddBefore(x, c) => each(when(c, format!("(rconcat {x} $0)"))),
            Family::AddAfter(x, c) => each(when(c, format!("(rconcat $0 {x})"))),
            Family::DoubleAll => each("(rconcat $0 $0)".into()),
            Family::ReplaceAll(x) => each(x.to_string()),
            Family::Both(start, end) => format!("(lambda (flatten {}))", start.apply(&end.apply(L))),
        }
    }

    fn description(self) -> String {
        match self {
            Family::RemoveFirst => "remove the first letter".into(),
            Family::RemoveLast => "remove the last letter".into(),
            Family::AddStart(x) => format!("add {x} at the start"),
            Family::AddEnd(x) => format!("add {x} at the end"),
            Family::ReplaceFirst(x) => format!("replace the first letter with {x}"),
            Family::ReplaceLast(x) => format!("replace the last letter with {x}"),
            Family::DoubleFirst => "double the first letter".into(),
            Family::DoubleLast => "double the last letter".into(),
            Family::RemoveEvery(c) => format!("remove every {c}"),
            Family::ReplaceEvery(c, x) => format!("replace every {c} with {x}"),
            Family::DoubleEvery(c) => format!("double every {c}"),
            Family::AddBefore(x, c) => format!("add {x} before every {c}"),
            Family::AddAfter(x, c) => format!("add {x} after every {c}"),
            Family::DoubleAll => "double every letter".into(),
            Family::ReplaceAll(x) => format!("replace every letter with {x}"),
            Family::Both(start, end) => format!("{} and {}", start.description(), end.description()),
        }
    }
}

impl Executor for Strings {
    type Data = StrValue;

    fn arity(&self, name: &str) -> Option<usize> {
        Some(match name {
            "if" => 3,
            "cons" | "map" | "append" | "match" | "regexsplit" | "rconcat" | "ror" => 2,
            "car" | "cdr" | "tail" | "revcdr" | "flatten" | "rnot" => 1,
            "dot" | "empty" => 0,
            n if n.len() == 1 && n.chars().all(|c| c.is_ascii_lowercase()) => 0,
            _ => return None,
        })
    }

    fn call<'a>(
        &self,
        name: &str,
        args: Vec<Value<'a, StrValue>>,
        m: &mut Machine<'a, '_, Self>,
    ) -> Result<Value<'a, StrValue>, EvalError> {
        let empty_list = || EvalError::runtime(format!("{name} of an empty list"));
        match name {
            "if" => {
                let mut it = args.into_iter();
                let c = it.next().unwrap();
                let (t, f) = (it.next().unwrap(), it.next().unwrap());
                match c.data()? {
                    StrValue::Bool(true) => Ok(t),
                    StrValue::Bool(false) => Ok(f),
                    _ => Err(EvalError::runtime("if expects a boolean")),
                }
            }
            "cons" => {
                let mut v = vec![args[0].data()?.clone()];
                v.extend_from_slice(list_arg(&args[1])?);
                Ok(data(StrValue::List(v.into())))
            }
            "append" => {
                let mut v = list_arg(&args[1])?.to_vec();
                v.push(args[0].data()?.clone());
                Ok(data(StrValue::List(v.into())))
            }
            "car" => list_arg(&args[0])?.first().cloned().map(data).ok_or_else(empty_list),
            "tail" => list_arg(&args[0])?.last().cloned().map(data).ok_or_else(empty_list),
            "cdr" => {
                let xs = list_arg(&args[0])?;
                if xs.is_empty() {
                    return Err(empty_list());
                }
                Ok(data(StrValue::List(xs[1..].into())))
            }
            "revcdr" => {
                let xs = list_arg(&args[0])?;
                if xs.is_empty() {
                    return Err(empty_list());
                }
                Ok(data(StrValue::List(xs[..xs.len() - 1].into())))
            }
            "map" => {
                let xs = list_arg(&args[1])?.to_vec();
                let f = args[0].clone();
                let out = xs
                    .into_iter()
                    .map(|x| m.apply(f.clone(), Value::Data(x))?.into_data())
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(data(StrValue::List(out.into())))
            }
            "match" => {
                let p = Pattern::compile(str_arg(&args[0])?)?;
                Ok(data(StrValue::Bool(p.full_match(str_arg(&args[1])?))))
            }
            "regexsplit" => {
                let p = Pattern::compile(str_arg(&args[0])?)?;
                let pieces: Vec<StrValue> = p
                    .split(str_arg(&args[1])?)
                    .iter()
                    .map(|s| StrValue::str(s))
                    .collect();
                Ok(data(StrValue::List(pieces.into())))
            }
            "flatten" => {
                let mut s = String::new();
                for x in list_arg(&args[0])? {
                    s.push_str(x.as_str().ok_or_else(|| EvalError::runtime("flatten of non-strings"))?);
                }
                Ok(data(StrValue::str(&s)))
            }
            "rconcat" => Ok(data(StrValue::str(&format!(
                "{}{}",
                str_arg(&args[0])?,
                str_arg(&args[1])?
            )))),
            "rnot" => Ok(data(StrValue::str(&format!("[^{}]", str_arg(&args[0])?)))),
            "ror" => Ok(data(StrValue::str(&format!(
                "(({})|({}))",
                str_arg(&args[0])?,
                str_arg(&args[1])?
            )))),
            "dot" => Ok(data(StrValue::str("."))),
            "empty" => Ok(data(StrValue::str(""))),
            n if self.arity(n) == Some(0) => Ok(data(StrValue::str(n))),
            _ => Err(EvalError::UnknownPrimitive(name.to_string())),
        }
    }
}

fn unigram_counts(s: &str) -> [f64; 26] {
    let mut c = [0.0; 26];
    for ch in s.chars().filter(char::is_ascii_lowercase) {
        c[(ch as u8 - b'a') as usize] += 1.0;
    }
    c
}

fn bigram_counts(s: &str) -> [f64; BIGRAM_BUCKETS] {
    let mut c = [0.0; BIGRAM_BUCKETS];
    let chars: Vec<char> = s.chars().collect();
    for w in chars.windows(2) {
        let key = format!("{}{}", w[0], w[1]);
        c[(stable_hash(key.as_bytes()) % BIGRAM_BUCKETS as u64) as usize] += 1.0;
    }
    c
}

impl Domain for Strings {
    fn name(&self) -> &'static str {
        "strings"
    }

    fn primitives(&self) -> Vec<(String, PolyType)> {
        let t = |s: &str| PolyType::parse(s).expect("valid primitive type");
        let mut prims: Vec<(String, PolyType)> = [
            ("if", "bool → t0 → t0 → t0"),
            ("cons", "t0 → list(t0) → list(t0)"),
            ("car", "list(t0) → t0"),
            ("cdr", "list(t0) → list(t0)"),
            ("map", "(t0 → t1) → list(t0) → list(t1)"),
            ("tail", "list(t0) → t0"),
            ("append", "t0 → list(t0) → list(t0)"),
            ("revcdr", "list(t0) → list(t0)"),
            ("match", "substr → substr → bool"),
            ("regexsplit", "substr → fullstr → list(substr)"),
            ("flatten", "list(substr) → fullstr"),
            ("rconcat", "substr → substr → substr"),
            ("rnot", "substr → substr"),
            ("ror", "substr → substr → substr"),
            ("dot", "substr"),
            ("empty", "substr"),
        ]
        .into_iter()
        .map(|(n, ty)| (n.to_string(), t(ty)))
        .collect();
        prims.extend(LETTERS.chars().map(|c| (c.to_string(), t("substr"))));
        prims
    }

    fn request(&self) -> PolyType {
        PolyType::parse("fullstr → fullstr").unwrap()
    }

    fn feature_len(&self) -> usize {
        FEATURES
    }

    fn task_features(&self, task: &Task<StrValue>) -> Vec<f64> {
        let mut f = vec![0.0; FEATURES];
        let pairs: Vec<(&str, &str)> = task
            .examples
            .iter()
            .filter_map(|(i, o)| Some((i.first()?.as_str()?, o.as_str()?)))
            .collect();
        if pairs.is_empty() {
            return f;
        }
        let n = pairs.len() as f64;
        let base = 26 + BIGRAM_BUCKETS;
        for (i, o) in &pairs {
            let (ui, uo) = (unigram_counts(i), unigram_counts(o));
            for k in 0..26 {
                f[k] += (uo[k] - ui[k]) / n;
            }
            let (bi, bo) = (bigram_counts(i), bigram_counts(o));
            for k in 0..BIGRAM_BUCKETS {
                f[26 + k] += (bo[k] - bi[k]) / n;
            }
            let (li, lo) = (i.chars().count() as f64, o.chars().count() as f64);
            f[base] += li / 10.0 / n;
            f[base + 1] += lo / 10.0 / n;
            f[base + 2] += (lo - li) / n;
            f[base + 3] += f64::from(lo > li) / n;
            f[base + 4] += f64::from(lo < li) / n;
            let first_same = !i.is_empty() && i.chars().next() == o.chars().next();
            let last_same = !i.is_empty() && i.chars().last() == o.chars().last();
            f[base + 5] += f64::from(first_same) / n;
            f[base + 6] += f64::from(last_same) / n;
        }
        f
    }

    fn sample_inputs(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<StrValue>> {
        let letters: Vec<char> = LETTERS.chars().collect();
        let favoured = *letters.choose(rng).unwrap();
        (0..n)
            .map(|_| {
                let must = rng.gen_bool(0.5).then_some(favoured);
                vec![StrValue::str(&Strings::word(rng, must))]
            })
            .collect()
    }

    fn accept_sample(&self, examples: &[(Vec<StrValue>, StrValue)]) -> bool {
        let distinct_outputs = examples
            .iter()
            .map(|(_, o)| o)
            .collect::<std::collections::HashSet<_>>()
            .len();
        let changes = examples.iter().any(|(i, o)| i.first() != Some(o));
        distinct_outputs > 1 && changes
    }

    fn generate_tasks(&self, n: usize, seed: u64, split: Split) -> Vec<GeneratedTask<StrValue>> {
        let tag = match split {
            Split::Train => "train",
            Split::Test => "test",
        };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("strings-{tag}"), 0));
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let family = Family::sample(&mut rng);
            let solution = Term::parse(&family.program()).expect("template programs parse");
            let mut examples = Vec::with_capacity(self.examples_per_task);
            for k in 0..self.examples_per_task {
                let must = family.target().filter(|_| k % 3 != 2);
                let input = StrValue::str(&Strings::word(&mut rng, must));
                let output = evaluate(
                    &solution,
                    std::slice::from_ref(&input),
                    self,
                    &Inventions::new(),
                    self.eval_limit(),
                )
                .expect("template programs run on words");
                examples.push((vec![input], output));
            }
            if !self.accept_sample(&examples) {
                continue;
            }
            let task = Task {
                id: format!("strings-{tag}-{:04}", out.len()),
                request: self.request(),
                examples,
                description: Some(super::tokenize(&family.description())),
                split,
            };
            out.push(GeneratedTask { task, solution });
        }
        out
    }

    fn encode_value(&self, value: &StrValue) -> serde_json::Value {
        match value {
            StrValue::Str(s) => serde_json::Value::String(s.to_string()),
            StrValue::Bool(b) => serde_json::Value::Bool(*b),
            StrValue::List(xs) => xs.iter().map(|x| self.encode_value(x)).collect(),
        }
    }

    fn decode_value(&self, value: &serde_json::Value) -> Result<StrValue, Error> {
        Ok(match value {
            serde_json::Value::String(s) => StrValue::str(s),
            serde_json::Value::Bool(b) => StrValue::Bool(*b),
            serde_json::Value::Array(xs) => StrValue::List(
                xs.iter()
                    .map(|x| self.decode_value(x))
                    .collect::<Result<Vec<_>, _>>()?
                    .into(),
            ),
            other => return Err(Error::Data(format!("not a string value: {other}"))),
        })
    }
}
