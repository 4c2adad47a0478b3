//! Call-by-value evaluation with primitive semantics supplied by a domain [`Executor`].

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::rc::Rc;
use std::sync::Arc;

use crate::error::{EvalError, TypeError};
use crate::term::Term;

/// Resource bounds for one evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EvalLimit {
    max_steps: u64,
    max_depth: usize,
}

impl EvalLimit {
    pub fn new(max_steps: u64, max_depth: usize) -> Result<Self, TypeError> {
        if max_steps == 0 || max_depth == 0 {
            return Err(TypeError::Illegal("evaluation limits must be positive".into()));
        }
        Ok(EvalLimit {
            max_steps,
            max_depth,
        })
    }

    pub fn max_steps(&self) -> u64 {
        self.max_steps
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }
}

impl Default for EvalLimit {
    fn default() -> Self {
        EvalLimit {
            max_steps: 10_000,
            max_depth: 256,
        }
    }
}

/// Definitions of invented productions, keyed by name.
pub type Inventions = BTreeMap<Arc<str>, Term>;

/// A runtime value. Functions borrow the term they were built from.
#[derive(Clone, Debug)]
pub enum Value<'a, D> {
    Data(D),
    Closure { body: &'a Term, env: Env<'a, D> },
    /// A primitive waiting for `arity - args.len()` more arguments.
    Partial { name: &'a str, arity: usize, args: Vec<Value<'a, D>> },
}

impl<'a, D> Value<'a, D> {
    pub fn data(&self) -> Result<&D, EvalError> {
        match self {
            Value::Data(d) => Ok(d),
            _ => Err(EvalError::NotData),
        }
    }

    pub fn into_data(self) -> Result<D, EvalError> {
        match self {
            Value::Data(d) => Ok(d),
            _ => Err(EvalError::NotData),
        }
    }
}

/// Persistent environment; index 0 is the innermost binding.
#[derive(Debug)]
pub struct EnvNode<'a, D> {
    value: Value<'a, D>,
    next: Env<'a, D>,
}

pub type Env<'a, D> = Option<Rc<EnvNode<'a, D>>>;

fn lookup<'a, 'e, D>(env: &'e Env<'a, D>, mut i: usize) -> Option<&'e Value<'a, D>> {
    let mut node = env.as_ref()?;
    while i > 0 {
        node = node.next.as_ref()?;
        i -= 1;
    }
    Some(&node.value)
}

fn push<'a, D>(env: &Env<'a, D>, value: Value<'a, D>) -> Env<'a, D> {
    Some(Rc::new(EnvNode {
        value,
        next: env.clone(),
    }))
}

/// Primitive semantics for one domain.
pub trait Executor: Sync {
    type Data: Clone + PartialEq + Debug + Send + Sync;

    /// Number of arguments the primitive consumes, or `None` if unknown.
    fn arity(&self, name: &str) -> Option<usize>;

    /// Applies a saturated primitive. Higher-order primitives call back into `machine`.
    fn call<'a>(
        &self,
        name: &str,
        args: Vec<Value<'a, Self::Data>>,
        machine: &mut Machine<'a, '_, Self>,
    ) -> Result<Value<'a, Self::Data>, EvalError>
    where
        Self: Sized;

    /// Domain output equality between a produced value and an expected one.
    fn output_equal(&self, produced: &Self::Data, expected: &Self::Data) -> bool {
        produced == expected
    }
}

/// Evaluation state: step and depth accounting plus the invented-production table.
pub struct Machine<'a, 'x, E: Executor> {
    executor: &'x E,
    inventions: &'a Inventions,
    limit: EvalLimit,
    steps: u64,
    depth: usize,
}

impl<'a, 'x, E: Executor> Machine<'a, 'x, E> {
    pub fn new(executor: &'x E, inventions: &'a Inventions, limit: EvalLimit) -> Self {
        Machine {
            executor,
            inventions,
            limit,
            steps: 0,
            depth: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Charges one step against the budget.
    pub fn tick(&mut self) -> Result<(), EvalError> {
        self.steps += 1;
        if self.steps > self.limit.max_steps {
            Err(EvalError::StepLimit(self.limit.max_steps))
        } else {
            Ok(())
        }
    }

    fn enter(&mut self) -> Result<(), EvalError> {
        self.depth += 1;
        if self.depth > self.limit.max_depth {
            Err(EvalError::DepthLimit(self.limit.max_depth))
        } else {
            Ok(())
        }
    }

    pub fn eval(&mut self, term: &'a Term, env: &Env<'a, E::Data>) -> Result<Value<'a, E::Data>, EvalError> {
        self.tick()?;
        match term {
            Term::Var(i) => lookup(env, *i).cloned().ok_or(EvalError::Unbound(*i)),
            Term::Abs(body) => Ok(Value::Closure {
                body,
                env: env.clone(),
            }),
            Term::Prim(name) => self.primitive(name),
            Term::App(f, x) => {
                let fv = self.eval(f, env)?;
                let xv = self.eval(x, env)?;
                self.apply(fv, xv)
            }
        }
    }

    fn primitive(&mut self, name: &'a str) -> Result<Value<'a, E::Data>, EvalError> {
        if let Some(body) = self.inventions.get(name) {
            return self.eval(body, &None);
        }
        let arity = self
            .executor
            .arity(name)
            .ok_or_else(|| EvalError::UnknownPrimitive(name.to_string()))?;
        if arity == 0 {
            self.executor.call(name, Vec::new(), self)
        } else {
            Ok(Value::Partial {
                name,
                arity,
                args: Vec::new(),
            })
        }
    }

    /// Applies a function value to one argument.
    pub fn apply(
        &mut self,
        f: Value<'a, E::Data>,
        x: Value<'a, E::Data>,
    ) -> Result<Value<'a, E::Data>, EvalError> {
        self.tick()?;
        match f {
            Value::Closure { body, env } => {
                self.enter()?;
                let env = push(&env, x);
                let out = self.eval(body, &env);
                self.depth -= 1;
                out
            }
            Value::Partial {
                name,
                arity,
                mut args,
            } => {
                args.push(x);
                if args.len() == arity {
                    self.enter()?;
                    let out = self.executor.call(name, args, self);
                    self.depth -= 1;
                    out
                } else {
                    Ok(Value::Partial { name, arity, args })
                }
            }
            Value::Data(_) => Err(EvalError::NotAFunction),
        }
    }

    /// Applies a function value to several arguments in order.
    pub fn apply_all(
        &mut self,
        f: Value<'a, E::Data>,
        args: impl IntoIterator<Item = Value<'a, E::Data>>,
    ) -> Result<Value<'a, E::Data>, EvalError> {
        args.into_iter().try_fold(f, |f, x| self.apply(f, x))
    }
}

/// Evaluates `term` applied to `args`, returning the resulting data value.
pub fn evaluate<E: Executor>(
    term: &Term,
    args: &[E::Data],
    executor: &E,
    inventions: &Inventions,
    limit: EvalLimit,
) -> Result<E::Data, EvalError> {
    let mut m = Machine::new(executor, inventions, limit);
    let f = m.eval(term, &None)?;
    let out = m.apply_all(f, args.iter().cloned().map(Value::Data))?;
    out.into_data()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Integers with `inc` and `twice : (int → int) → int → int`.
    struct Arith;

    impl Executor for Arith {
        type Data = i64;

        fn arity(&self, name: &str) -> Option<usize> {
            match name {
                "inc" => Some(1),
                "twice" => Some(2),
                "zero" => Some(0),
                _ => None,
            }
        }

        fn call<'a>(
            &self,
            name: &str,
            args: Vec<Value<'a, i64>>,
            m: &mut Machine<'a, '_, Self>,
        ) -> Result<Value<'a, i64>, EvalError> {
            match name {
                "zero" => Ok(Value::Data(0)),
                "inc" => Ok(Value::Data(args[0].data()? + 1)),
                "twice" => {
                    let mut it = args.into_iter();
                    let f = it.next().unwrap();
                    let x = it.next().unwrap();
                    let y = m.apply(f.clone(), x)?;
                    m.apply(f, y)
                }
                _ => Err(EvalError::UnknownPrimitive(name.into())),
            }
        }
    }

    fn run(src: &str, args: &[i64]) -> Result<i64, EvalError> {
        let t = Term::parse(src).unwrap();
        evaluate(&t, args, &Arith, &Inventions::new(), EvalLimit::default())
    }

    #[test]
    fn identity_and_primitives() {
        assert_eq!(run("(lambda $0)", &[7]), Ok(7));
        assert_eq!(run("(lambda (inc $0))", &[7]), Ok(8));
        assert_eq!(run("(twice inc zero)", &[]), Ok(2));
        assert_eq!(run("(lambda (twice (lambda (inc (inc $0))) $0))", &[1]), Ok(5));
    }

    #[test]
    fn inventions_are_inlined_at_runtime() {
        let mut inv = Inventions::new();
        inv.insert(Arc::from("#0"), Term::parse("(lambda (twice inc $0))").unwrap());
        let t = Term::parse("(lambda (#0 (#0 $0)))").unwrap();
        assert_eq!(evaluate(&t, &[0], &Arith, &inv, EvalLimit::default()), Ok(4));
    }

    #[test]
    fn divergence_hits_the_step_limit() {
        let t = Term::parse("((lambda ($0 $0)) (lambda ($0 $0)))").unwrap();
        let limit = EvalLimit::new(1_000, 100_000).unwrap();
        let r = evaluate(&t, &[], &Arith, &Inventions::new(), limit);
        assert!(matches!(r, Err(EvalError::StepLimit(1_000)) | Err(EvalError::DepthLimit(_))));
    }

    #[test]
    fn limits_must_be_positive() {
        assert!(EvalLimit::new(0, 1).is_err());
        assert!(EvalLimit::new(1, 0).is_err());
    }

    #[test]
    fn functions_are_not_outputs() {
        assert_eq!(run("(lambda inc)", &[1]), Err(EvalError::NotData));
    }
}
