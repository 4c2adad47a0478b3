//! Untyped structure of λ-terms with de Bruijn variables.
//!
//! The printed form is an s-expression: `(lambda BODY)` for abstraction, `$i` for the variable
//! bound `i` binders out, `(f a b)` for the curried application `((f a) b)`, and any other atom
//! for a primitive. Printing is canonical, so printed terms double as the persistence format.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::ParseError;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// A library production: a base primitive, a named constant, or an invented abstraction.
    Prim(Arc<str>),
    Var(usize),
    Abs(Box<Term>),
    App(Box<Term>, Box<Term>),
}

/// Outcome of [`Term::beta_reduce`].
#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub term: Term,
    /// Whether `term` is in β-normal form. When false, `term` is the unchanged input.
    pub normal: bool,
}

impl Term {
    pub fn prim(name: &str) -> Term {
        Term::Prim(Arc::from(name))
    }

    pub fn abs(body: Term) -> Term {
        Term::Abs(Box::new(body))
    }

    pub fn app(f: Term, x: Term) -> Term {
        Term::App(Box::new(f), Box::new(x))
    }

    /// `(head a1 a2 …)`.
    pub fn apply(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(head, Term::app)
    }

    /// Wraps `body` in `n` abstractions.
    pub fn abs_n(body: Term, n: usize) -> Term {
        (0..n).fold(body, |b, _| Term::abs(b))
    }

    pub fn parse(text: &str) -> Result<Term, ParseError> {
        Parser::new(text).parse_all()
    }

    /// Splits an application spine into its head and arguments.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut t = self;
        while let Term::App(f, x) = t {
            args.push(x.as_ref());
            t = f;
        }
        args.reverse();
        (t, args)
    }

    /// Number of leaves (primitives and variables); the size unit for description lengths.
    pub fn size(&self) -> usize {
        match self {
            Term::Prim(_) | Term::Var(_) => 1,
            Term::Abs(b) => b.size(),
            Term::App(f, x) => f.size() + x.size(),
        }
    }

    /// Number of nodes of every kind.
    pub fn node_count(&self) -> usize {
        match self {
            Term::Prim(_) | Term::Var(_) => 1,
            Term::Abs(b) => 1 + b.node_count(),
            Term::App(f, x) => 1 + f.node_count() + x.node_count(),
        }
    }

    /// Smallest `d` such that every variable is bound within `d` enclosing binders.
    pub fn free_depth(&self) -> usize {
        match self {
            Term::Prim(_) => 0,
            Term::Var(i) => i + 1,
            Term::Abs(b) => b.free_depth().saturating_sub(1),
            Term::App(f, x) => f.free_depth().max(x.free_depth()),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_depth() == 0
    }

    /// Whether some variable with index in `[lo, hi)` at the top refers outside the term.
    pub fn mentions_vars_in(&self, lo: usize, hi: usize) -> bool {
        fn go(t: &Term, lo: usize, hi: usize, depth: usize) -> bool {
            match t {
                Term::Prim(_) => false,
                Term::Var(i) => *i >= depth && (i - depth) >= lo && (i - depth) < hi,
                Term::Abs(b) => go(b, lo, hi, depth + 1),
                Term::App(f, x) => go(f, lo, hi, depth) || go(x, lo, hi, depth),
            }
        }
        go(self, lo, hi, 0)
    }

    /// Adds `by` to every variable with index ≥ `cutoff` (counted from this term's root).
    pub fn shift(&self, by: isize, cutoff: usize) -> Term {
        match self {
            Term::Prim(_) => self.clone(),
            Term::Var(i) => {
                if *i >= cutoff {
                    Term::Var((*i as isize + by) as usize)
                } else {
                    Term::Var(*i)
                }
            }
            Term::Abs(b) => Term::abs(b.shift(by, cutoff + 1)),
            Term::App(f, x) => Term::app(f.shift(by, cutoff), x.shift(by, cutoff)),
        }
    }

    /// Capture-avoiding substitution of `value` for variable `index`, removing that binder.
    pub fn substitute(&self, index: usize, value: &Term) -> Term {
        match self {
            Term::Prim(_) => self.clone(),
            Term::Var(i) => {
                if *i == index {
                    value.shift(index as isize, 0)
                } else if *i > index {
                    Term::Var(i - 1)
                } else {
                    Term::Var(*i)
                }
            }
            Term::Abs(b) => Term::abs(b.substitute(index + 1, value)),
            Term::App(f, x) => Term::app(f.substitute(index, value), x.substitute(index, value)),
        }
    }

    /// Normal-order β-reduction, giving up after `max_steps` contractions.
    pub fn beta_reduce(&self, max_steps: u64) -> Reduction {
        let mut t = self.clone();
        let mut steps = 0;
        loop {
            match t.reduce_once() {
                None => return Reduction { term: t, normal: true },
                Some(next) => {
                    steps += 1;
                    if steps > max_steps {
                        return Reduction {
                            term: self.clone(),
                            normal: false,
                        };
                    }
                    t = next;
                }
            }
        }
    }

    /// One leftmost-outermost contraction, or `None` when already normal.
    fn reduce_once(&self) -> Option<Term> {
        match self {
            Term::Prim(_) | Term::Var(_) => None,
            Term::Abs(b) => b.reduce_once().map(Term::abs),
            Term::App(f, x) => {
                if let Term::Abs(body) = f.as_ref() {
                    return Some(body.substitute(0, x));
                }
                if let Some(f2) = f.reduce_once() {
                    return Some(Term::App(Box::new(f2), x.clone()));
                }
                x.reduce_once().map(|x2| Term::App(f.clone(), Box::new(x2)))
            }
        }
    }

    /// Replaces primitives named in `bodies` by their (closed) definitions, recursively.
    pub fn inline(&self, bodies: &BTreeMap<Arc<str>, Term>) -> Term {
        match self {
            Term::Prim(n) => match bodies.get(n) {
                Some(b) => b.inline(bodies),
                None => self.clone(),
            },
            Term::Var(_) => self.clone(),
            Term::Abs(b) => Term::abs(b.inline(bodies)),
            Term::App(f, x) => Term::app(f.inline(bodies), x.inline(bodies)),
        }
    }

    /// Primitive names in pre-order, with repetition.
    pub fn primitives(&self) -> Vec<&Arc<str>> {
        fn go<'a>(t: &'a Term, out: &mut Vec<&'a Arc<str>>) {
            match t {
                Term::Prim(n) => out.push(n),
                Term::Var(_) => {}
                Term::Abs(b) => go(b, out),
                Term::App(f, x) => {
                    go(f, out);
                    go(x, out)
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Eta-expands a term of arity `n`: `λ^n. (t↑n $n-1 … $0)`.
    pub fn eta_expand(&self, n: usize) -> Term {
        let shifted = self.shift(n as isize, 0);
        let body = Term::apply(shifted, (0..n).rev().map(Term::Var));
        Term::abs_n(body, n)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Prim(n) => write!(f, "{n}"),
            Term::Var(i) => write!(f, "${i}"),
            Term::Abs(b) => write!(f, "(lambda {b})"),
            Term::App(..) => {
                let (head, args) = self.spine();
                write!(f, "({head}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl serde::Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Term {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Term::parse(&text).map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for Term {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Term::parse(s)
    }
}

struct Parser<'s> {
    text: &'s str,
    pos: usize,
}

impl<'s> Parser<'s> {
    fn new(text: &'s str) -> Self {
        Parser { text, pos: 0 }
    }

    fn err<T>(&self, msg: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        })
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn parse_all(mut self) -> Result<Term, ParseError> {
        let t = self.parse_term(0)?;
        self.skip_ws();
        if self.pos != self.text.len() {
            return self.err("trailing input");
        }
        Ok(t)
    }

    fn atom(&mut self) -> &'s str {
        let rest = &self.text[self.pos..];
        let end = rest
            .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
            .unwrap_or(rest.len());
        self.pos += end;
        &rest[..end]
    }

    fn parse_term(&mut self, depth: usize) -> Result<Term, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some(')') => self.err("unexpected `)`"),
            Some('(') => {
                self.pos += 1;
                self.skip_ws();
                let save = self.pos;
                let head = self.atom();
                if head == "lambda" || head == "λ" {
                    let body = self.parse_term(depth + 1)?;
                    self.close()?;
                    return Ok(Term::abs(body));
                }
                self.pos = save;
                let mut t = self.parse_term(depth)?;
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(')') => {
                            self.pos += 1;
                            return Ok(t);
                        }
                        None => return self.err("unclosed `(`"),
                        _ => {
                            let x = self.parse_term(depth)?;
                            t = Term::app(t, x);
                        }
                    }
                }
            }
            Some(_) => {
                let start = self.pos;
                let a = self.atom();
                if let Some(digits) = a.strip_prefix('$') {
                    let index: usize = match digits.parse() {
                        Ok(i) => i,
                        Err(_) => {
                            self.pos = start;
                            return self.err("malformed variable");
                        }
                    };
                    if index >= depth {
                        return Err(ParseError::Unbound { index, pos: start });
                    }
                    Ok(Term::Var(index))
                } else if a == "lambda" || a == "λ" {
                    self.pos = start;
                    self.err("`lambda` outside of a form")
                } else {
                    Ok(Term::prim(a))
                }
            }
        }
    }

    fn close(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        if self.peek() == Some(')') {
            self.pos += 1;
            Ok(())
        } else {
            self.err("expected `)`")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Term {
        Term::parse(s).unwrap()
    }

    #[test]
    fn parses_abstractions() {
        assert_eq!(p("(lambda $0)"), Term::abs(Term::Var(0)));
        assert_eq!(p("(lambda (lambda $1))"), Term::abs(Term::abs(Term::Var(1))));
        assert!(matches!(
            Term::parse("(lambda $1)"),
            Err(ParseError::Unbound { index: 1, .. })
        ));
    }

    #[test]
    fn application_is_curried() {
        let t = p("(f a b)");
        assert_eq!(
            t,
            Term::app(Term::app(Term::prim("f"), Term::prim("a")), Term::prim("b"))
        );
        assert_eq!(t.to_string(), "(f a b)");
        assert_eq!(p("((lambda $0) c)").to_string(), "((lambda $0) c)");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert!(matches!(Term::parse("(f a"), Err(ParseError::Syntax { .. })));
        assert!(matches!(Term::parse("f)"), Err(ParseError::Syntax { pos: 1, .. })));
        assert!(Term::parse("").is_err());
    }

    #[test]
    fn beta_reduction_examples() {
        let r = |s: &str| p(s).beta_reduce(100).term.to_string();
        assert_eq!(r("((lambda $0) c)"), "c");
        assert_eq!(r("((lambda (f $0)) a)"), "(f a)");
        assert_eq!(r("((lambda (lambda ($1 $0))) f a)"), "(f a)");
        // Substitution under a binder shifts free variables of the argument.
        assert_eq!(
            r("(lambda ((lambda (lambda ($1 $0))) $0))").to_string(),
            "(lambda (lambda ($1 $0)))"
        );
    }

    #[test]
    fn divergent_reduction_is_flagged() {
        let omega = p("((lambda ($0 $0)) (lambda ($0 $0)))");
        let r = omega.beta_reduce(50);
        assert!(!r.normal);
        assert_eq!(r.term, omega);
    }

    #[test]
    fn sizes() {
        let t = p("(lambda (f (g $0) a))");
        assert_eq!(t.size(), 4);
        assert_eq!(t.node_count(), 8);
        assert!(t.is_closed());
        assert_eq!(p("(lambda (lambda (f $1)))").free_depth(), 0);
    }

    #[test]
    fn eta_expansion() {
        assert_eq!(p("f").eta_expand(2).to_string(), "(lambda (lambda (f $1 $0)))");
        let r = Term::app(p("f").eta_expand(1), p("a")).beta_reduce(10).term;
        assert_eq!(r, p("(f a)"));
    }
}
