//! Task datasets: seeded generation and a JSON-lines file format.
//!
//! Each line holds one task: `id`, `split`, `request`, `examples` (each with `inputs` and
//! `output` in the domain's value encoding), `descriptions` (a list of whitespace-tokenized
//! strings, the first of which is used) and, optionally, the ground-truth `program`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde_json::{json, Value};

use crate::domains::{tokenize, Domain};
use crate::error::Error;
use crate::task::{Split, Task};
use crate::term::Term;
use crate::types::PolyType;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<D> {
    pub train: Vec<Task<D>>,
    pub test: Vec<Task<D>>,
    /// Ground-truth programs by task id, where known.
    pub solutions: BTreeMap<String, Term>,
}

impl<D> Dataset<D> {
    pub fn tasks(&self) -> impl Iterator<Item = &Task<D>> {
        self.train.iter().chain(&self.test)
    }
}

pub fn generate<Dm: Domain>(domain: &Dm, train: usize, test: usize, seed: u64) -> Dataset<Dm::Data> {
    let mut solutions = BTreeMap::new();
    let mut split = |n, s| {
        domain
            .generate_tasks(n, seed, s)
            .into_iter()
            .map(|g| {
                solutions.insert(g.task.id.clone(), g.solution);
                g.task
            })
            .collect::<Vec<_>>()
    };
    let train = split(train, Split::Train);
    let test = split(test, Split::Test);
    Dataset {
        train,
        test,
        solutions,
    }
}

fn record<Dm: Domain>(domain: &Dm, task: &Task<Dm::Data>, program: Option<&Term>) -> Value {
    let examples: Vec<Value> = task
        .examples
        .iter()
        .map(|(inputs, output)| {
            json!({
                "inputs": inputs.iter().map(|v| domain.encode_value(v)).collect::<Vec<_>>(),
                "output": domain.encode_value(output),
            })
        })
        .collect();
    let mut r = json!({
        "id": task.id,
        "split": task.split,
        "request": task.request.to_string(),
        "examples": examples,
        "descriptions": task.description.iter().map(|d| d.join(" ")).collect::<Vec<_>>(),
    });
    if let Some(p) = program {
        r["program"] = Value::String(p.to_string());
    }
    r
}

pub fn write_jsonl<Dm: Domain>(domain: &Dm, dataset: &Dataset<Dm::Data>, out: &mut impl Write) -> Result<(), Error> {
    for t in dataset.tasks() {
        let line = serde_json::to_string(&record(domain, t, dataset.solutions.get(&t.id)))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn save<Dm: Domain>(domain: &Dm, dataset: &Dataset<Dm::Data>, path: &Path) -> Result<(), Error> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_jsonl(domain, dataset, &mut f)?;
    f.flush()?;
    Ok(())
}

fn parse_record<Dm: Domain>(domain: &Dm, v: &Value) -> Result<(Task<Dm::Data>, Option<Term>), Error> {
    let field = |k: &str| v.get(k).ok_or_else(|| Error::Data(format!("task record lacks `{k}`")));
    let id = field("id")?.as_str().ok_or_else(|| Error::Data("id must be a string".into()))?;
    let split: Split = serde_json::from_value(field("split")?.clone())?;
    let request = PolyType::parse(field("request")?.as_str().unwrap_or_default())?;
    let mut examples = Vec::new();
    for e in field("examples")?.as_array().into_iter().flatten() {
        let inputs = e
            .get("inputs")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Data(format!("{id}: example lacks inputs")))?
            .iter()
            .map(|x| domain.decode_value(x))
            .collect::<Result<Vec<_>, _>>()?;
        let output = domain.decode_value(
            e.get("output")
                .ok_or_else(|| Error::Data(format!("{id}: example lacks output")))?,
        )?;
        examples.push((inputs, output));
    }
    if examples.is_empty() {
        return Err(Error::Data(format!("{id}: no examples")));
    }
    let description = v
        .get("descriptions")
        .and_then(Value::as_array)
        .and_then(|ds| ds.first())
        .and_then(Value::as_str)
        .map(tokenize);
    let program = match v.get("program").and_then(Value::as_str) {
        Some(p) => Some(Term::parse(p)?),
        None => None,
    };
    Ok((
        Task {
            id: id.to_string(),
            request,
            examples,
            description,
            split,
        },
        program,
    ))
}

pub fn read_jsonl<Dm: Domain>(domain: &Dm, input: impl BufRead) -> Result<Dataset<Dm::Data>, Error> {
    let mut ds = Dataset {
        train: Vec::new(),
        test: Vec::new(),
        solutions: BTreeMap::new(),
    };
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (task, program) = parse_record(domain, &serde_json::from_str(&line)?)?;
        if let Some(p) = program {
            ds.solutions.insert(task.id.clone(), p);
        }
        match task.split {
            Split::Train => ds.train.push(task),
            Split::Test => ds.test.push(task),
        }
    }
    Ok(ds)
}

pub fn load<Dm: Domain>(domain: &Dm, path: &Path) -> Result<Dataset<Dm::Data>, Error> {
    read_jsonl(domain, std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::graphics::Graphics;
    use crate::domains::strings::Strings;

    #[test]
    fn strings_round_trip() {
        let d = Strings::new(5);
        let ds = generate(&d, 4, 2, 11);
        let mut buf = Vec::new();
        write_jsonl(&d, &ds, &mut buf).unwrap();
        assert_eq!(read_jsonl(&d, buf.as_slice()).unwrap(), ds);
    }

    #[test]
    fn graphics_round_trip() {
        let d = Graphics;
        let ds = generate(&d, 3, 2, 5);
        let mut buf = Vec::new();
        write_jsonl(&d, &ds, &mut buf).unwrap();
        assert_eq!(read_jsonl(&d, buf.as_slice()).unwrap(), ds);
    }
}
