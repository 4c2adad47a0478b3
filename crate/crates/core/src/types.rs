//! Hindley–Milner types: polymorphic types, substitutions and unification.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::TypeError;

/// A (possibly polymorphic) type.
///
/// Every type variable appearing in a type stored on a production is implicitly universally
/// quantified; [`TypeContext::instantiate`] gives it fresh variables.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum PolyType {
    Var(u32),
    Constructor(Arc<str>, Arc<[PolyType]>),
    Arrow(Arc<PolyType>, Arc<PolyType>),
}

impl PolyType {
    pub fn con(name: &str) -> Self {
        PolyType::Constructor(Arc::from(name), Arc::from(Vec::new()))
    }

    pub fn con_with(name: &str, args: Vec<PolyType>) -> Self {
        PolyType::Constructor(Arc::from(name), Arc::from(args))
    }

    pub fn list(elem: PolyType) -> Self {
        Self::con_with("list", vec![elem])
    }

    pub fn arrow(from: PolyType, to: PolyType) -> Self {
        PolyType::Arrow(Arc::new(from), Arc::new(to))
    }

    /// Builds `a1 → a2 → … → ret`.
    pub fn function(args: Vec<PolyType>, ret: PolyType) -> Self {
        args.into_iter()
            .rev()
            .fold(ret, |acc, a| PolyType::arrow(a, acc))
    }

    pub fn is_arrow(&self) -> bool {
        matches!(self, PolyType::Arrow(..))
    }

    /// Argument types of the top-level arrow chain.
    pub fn arguments(&self) -> Vec<&PolyType> {
        let mut out = Vec::new();
        let mut t = self;
        while let PolyType::Arrow(a, b) = t {
            out.push(a.as_ref());
            t = b;
        }
        out
    }

    /// Type left after stripping every top-level arrow.
    pub fn returns(&self) -> &PolyType {
        let mut t = self;
        while let PolyType::Arrow(_, b) = t {
            t = b;
        }
        t
    }

    pub fn arity(&self) -> usize {
        let mut n = 0;
        let mut t = self;
        while let PolyType::Arrow(_, b) = t {
            n += 1;
            t = b;
        }
        n
    }

    pub fn is_polymorphic(&self) -> bool {
        match self {
            PolyType::Var(_) => true,
            PolyType::Constructor(_, args) => args.iter().any(PolyType::is_polymorphic),
            PolyType::Arrow(a, b) => a.is_polymorphic() || b.is_polymorphic(),
        }
    }

    pub fn occurs(&self, v: u32) -> bool {
        match self {
            PolyType::Var(w) => *w == v,
            PolyType::Constructor(_, args) => args.iter().any(|a| a.occurs(v)),
            PolyType::Arrow(a, b) => a.occurs(v) || b.occurs(v),
        }
    }

    /// Variables in order of first (left-to-right) appearance.
    pub fn vars(&self) -> Vec<u32> {
        fn go(t: &PolyType, out: &mut Vec<u32>) {
            match t {
                PolyType::Var(v) => {
                    if !out.contains(v) {
                        out.push(*v)
                    }
                }
                PolyType::Constructor(_, args) => args.iter().for_each(|a| go(a, out)),
                PolyType::Arrow(a, b) => {
                    go(a, out);
                    go(b, out)
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Renames variables so they read `t0, t1, …` in order of first appearance.
    pub fn canonical(&self) -> PolyType {
        let map: HashMap<u32, u32> = self
            .vars()
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, i as u32))
            .collect();
        self.rename(&map)
    }

    fn rename(&self, map: &HashMap<u32, u32>) -> PolyType {
        match self {
            PolyType::Var(v) => PolyType::Var(map[v]),
            PolyType::Constructor(n, args) => PolyType::Constructor(
                n.clone(),
                args.iter().map(|a| a.rename(map)).collect(),
            ),
            PolyType::Arrow(a, b) => PolyType::arrow(a.rename(map), b.rename(map)),
        }
    }

    /// Shifts every variable by `offset`.
    fn offset(&self, offset: u32) -> PolyType {
        match self {
            PolyType::Var(v) => PolyType::Var(v + offset),
            PolyType::Constructor(n, args) => {
                if args.is_empty() {
                    self.clone()
                } else {
                    PolyType::Constructor(n.clone(), args.iter().map(|a| a.offset(offset)).collect())
                }
            }
            PolyType::Arrow(a, b) => PolyType::arrow(a.offset(offset), b.offset(offset)),
        }
    }

    fn max_var(&self) -> Option<u32> {
        match self {
            PolyType::Var(v) => Some(*v),
            PolyType::Constructor(_, args) => args.iter().filter_map(PolyType::max_var).max(),
            PolyType::Arrow(a, b) => a.max_var().max(b.max_var()),
        }
    }

    /// Parses the printed form, e.g. `(t0 → t1) → list(t0) → list(t1)`. ASCII `->` also works.
    pub fn parse(text: &str) -> Result<PolyType, TypeError> {
        let normalized = text.replace("->", "→");
        let chars: Vec<char> = normalized.chars().collect();
        let mut pos = 0;
        let t = parse_arrow(&chars, &mut pos)?;
        skip_ws(&chars, &mut pos);
        if pos != chars.len() {
            return Err(TypeError::Parse(text.to_string()));
        }
        Ok(t)
    }
}

fn skip_ws(c: &[char], pos: &mut usize) {
    while *pos < c.len() && c[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn parse_arrow(c: &[char], pos: &mut usize) -> Result<PolyType, TypeError> {
    let left = parse_atom(c, pos)?;
    skip_ws(c, pos);
    if *pos < c.len() && c[*pos] == '→' {
        *pos += 1;
        let right = parse_arrow(c, pos)?;
        Ok(PolyType::arrow(left, right))
    } else {
        Ok(left)
    }
}

fn parse_atom(c: &[char], pos: &mut usize) -> Result<PolyType, TypeError> {
    let err = || TypeError::Parse(c.iter().collect());
    skip_ws(c, pos);
    if *pos >= c.len() {
        return Err(err());
    }
    if c[*pos] == '(' {
        *pos += 1;
        let t = parse_arrow(c, pos)?;
        skip_ws(c, pos);
        if *pos >= c.len() || c[*pos] != ')' {
            return Err(err());
        }
        *pos += 1;
        return Ok(t);
    }
    let start = *pos;
    while *pos < c.len() && (c[*pos].is_alphanumeric() || c[*pos] == '_') {
        *pos += 1;
    }
    if start == *pos {
        return Err(err());
    }
    let name: String = c[start..*pos].iter().collect();
    if *pos < c.len() && c[*pos] == '(' {
        *pos += 1;
        let mut args = Vec::new();
        loop {
            args.push(parse_arrow(c, pos)?);
            skip_ws(c, pos);
            match c.get(*pos) {
                Some(',') => *pos += 1,
                Some(')') => {
                    *pos += 1;
                    break;
                }
                _ => return Err(err()),
            }
        }
        return Ok(PolyType::con_with(&name, args));
    }
    if let Some(num) = name.strip_prefix('t') {
        if let Ok(v) = num.parse::<u32>() {
            return Ok(PolyType::Var(v));
        }
    }
    Ok(PolyType::con(&name))
}

impl fmt::Display for PolyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolyType::Var(v) => write!(f, "t{v}"),
            PolyType::Constructor(n, args) => {
                if args.is_empty() {
                    write!(f, "{n}")
                } else {
                    write!(f, "{n}(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")
                }
            }
            PolyType::Arrow(a, b) => {
                if a.is_arrow() {
                    write!(f, "({a}) → {b}")
                } else {
                    write!(f, "{a} → {b}")
                }
            }
        }
    }
}

impl serde::Serialize for PolyType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PolyType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        PolyType::parse(&text).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for PolyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A substitution over type variables plus a fresh-variable counter.
///
/// Unification is destructive; [`TypeContext::mark`] and [`TypeContext::rollback`] undo bindings
/// made after a mark, which lets legality checks avoid cloning.
#[derive(Clone, Debug, Default)]
pub struct TypeContext {
    bindings: Vec<Option<PolyType>>,
    trail: Vec<u32>,
}

#[derive(Clone, Copy, Debug)]
enum Failure {
    Mismatch,
    Occurs,
}

#[derive(Clone, Copy, Debug)]
pub struct Mark {
    vars: usize,
    trail: usize,
}

impl TypeContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self) -> PolyType {
        self.bindings.push(None);
        PolyType::Var(self.bindings.len() as u32 - 1)
    }

    pub fn next_var(&self) -> u32 {
        self.bindings.len() as u32
    }

    /// Makes sure variables `0..=v` exist, for types built outside this context.
    pub fn reserve(&mut self, t: &PolyType) {
        if let Some(m) = t.max_var() {
            while self.bindings.len() <= m as usize {
                self.bindings.push(None);
            }
        }
    }

    /// Instantiates a scheme with fresh variables.
    pub fn instantiate(&mut self, scheme: &PolyType) -> PolyType {
        match scheme.max_var() {
            None => scheme.clone(),
            Some(m) => {
                let offset = self.bindings.len() as u32;
                for _ in 0..=m {
                    self.bindings.push(None);
                }
                scheme.offset(offset)
            }
        }
    }

    pub fn mark(&self) -> Mark {
        Mark {
            vars: self.bindings.len(),
            trail: self.trail.len(),
        }
    }

    pub fn rollback(&mut self, mark: Mark) {
        while self.trail.len() > mark.trail {
            let v = self.trail.pop().unwrap();
            if (v as usize) < self.bindings.len() {
                self.bindings[v as usize] = None;
            }
        }
        self.bindings.truncate(mark.vars);
    }

    /// Forgets the undo trail; call once a unification is committed.
    pub fn commit(&mut self) {
        self.trail.clear();
    }

    fn bind(&mut self, v: u32, t: PolyType) {
        if self.bindings.len() <= v as usize {
            self.bindings.resize(v as usize + 1, None);
        }
        self.bindings[v as usize] = Some(t);
        self.trail.push(v);
    }

    fn resolve_head<'t>(&'t self, mut t: &'t PolyType) -> &'t PolyType {
        while let PolyType::Var(v) = t {
            match self.bindings.get(*v as usize) {
                Some(Some(b)) => t = b,
                _ => break,
            }
        }
        t
    }

    /// Applies the substitution fully.
    pub fn apply(&self, t: &PolyType) -> PolyType {
        if !t.is_polymorphic() {
            return t.clone();
        }
        match self.resolve_head(t) {
            PolyType::Var(v) => PolyType::Var(*v),
            PolyType::Constructor(n, args) => {
                if args.is_empty() {
                    PolyType::Constructor(n.clone(), args.clone())
                } else {
                    PolyType::Constructor(n.clone(), args.iter().map(|a| self.apply(a)).collect())
                }
            }
            PolyType::Arrow(a, b) => PolyType::arrow(self.apply(a), self.apply(b)),
        }
    }

    fn occurs(&self, v: u32, t: &PolyType) -> bool {
        match self.resolve_head(t) {
            PolyType::Var(w) => *w == v,
            PolyType::Constructor(_, args) => args.iter().any(|a| self.occurs(v, a)),
            PolyType::Arrow(a, b) => self.occurs(v, a) || self.occurs(v, b),
        }
    }

    pub fn unify(&mut self, a: &PolyType, b: &PolyType) -> Result<(), TypeError> {
        self.unify_quiet(a, b).map_err(|f| {
            let (x, y) = (format!("{}", self.apply(a)), format!("{}", self.apply(b)));
            match f {
                Failure::Occurs => TypeError::Occurs(x, y),
                Failure::Mismatch => TypeError::Mismatch(x, y),
            }
        })
    }

    /// Unification that reports failure without building a message.
    pub fn unifies_in_place(&mut self, a: &PolyType, b: &PolyType) -> bool {
        self.unify_quiet(a, b).is_ok()
    }

    fn unify_quiet(&mut self, a: &PolyType, b: &PolyType) -> Result<(), Failure> {
        let a = self.resolve_head(a).clone();
        let b = self.resolve_head(b).clone();
        match (&a, &b) {
            (PolyType::Var(x), PolyType::Var(y)) if x == y => Ok(()),
            (PolyType::Var(x), _) => {
                if self.occurs(*x, &b) {
                    return Err(Failure::Occurs);
                }
                self.bind(*x, b);
                Ok(())
            }
            (_, PolyType::Var(y)) => {
                if self.occurs(*y, &a) {
                    return Err(Failure::Occurs);
                }
                self.bind(*y, a);
                Ok(())
            }
            (PolyType::Arrow(a1, b1), PolyType::Arrow(a2, b2)) => {
                self.unify_quiet(a1, a2)?;
                self.unify_quiet(b1, b2)
            }
            (PolyType::Constructor(n1, x1), PolyType::Constructor(n2, x2)) => {
                if n1 != n2 || x1.len() != x2.len() {
                    return Err(Failure::Mismatch);
                }
                for (p, q) in x1.iter().zip(x2.iter()) {
                    self.unify_quiet(p, q)?;
                }
                Ok(())
            }
            _ => Err(Failure::Mismatch),
        }
    }

    /// Cheap structural pre-check of an uninstantiated `scheme` type against `request`: `false`
    /// only when they certainly fail to unify at the top constructor. Scheme variables are not
    /// looked up in this context.
    pub fn may_unify(&self, scheme: &PolyType, request: &PolyType) -> bool {
        match (scheme, self.resolve_head(request)) {
            (PolyType::Var(_), _) | (_, PolyType::Var(_)) => true,
            (PolyType::Arrow(..), PolyType::Arrow(..)) => true,
            (PolyType::Constructor(n1, x1), PolyType::Constructor(n2, x2)) => {
                n1 == n2 && x1.len() == x2.len()
            }
            _ => false,
        }
    }

    /// Whether `a` and `b` unify, leaving the context unchanged.
    pub fn unifies(&mut self, a: &PolyType, b: &PolyType) -> bool {
        let m = self.mark();
        let ok = self.unify_quiet(a, b).is_ok();
        self.rollback(m);
        ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> PolyType {
        PolyType::parse(s).unwrap()
    }

    #[test]
    fn prints_and_parses() {
        let map = t("(t0 → t1) → list(t0) → list(t1)");
        assert_eq!(map.to_string(), "(t0 → t1) → list(t0) → list(t1)");
        assert_eq!(t("int -> bool").to_string(), "int → bool");
        assert_eq!(map.arity(), 2);
        assert_eq!(map.returns(), &t("list(t1)"));
    }

    #[test]
    fn instantiation_gives_disjoint_fresh_variables() {
        let scheme = t("t0 → list(t0) → t1");
        let mut ctx = TypeContext::new();
        let a = ctx.instantiate(&scheme);
        let b = ctx.instantiate(&scheme);
        assert!(a.vars().iter().all(|v| !b.vars().contains(v)));
        assert_eq!(a.canonical(), b.canonical());
    }

    #[test]
    fn unification_binds_and_rolls_back() {
        let mut ctx = TypeContext::new();
        let a = ctx.instantiate(&t("list(t0) → t0"));
        let mark = ctx.mark();
        ctx.unify(&a, &t("list(int) → int")).unwrap();
        assert_eq!(ctx.apply(&a), t("list(int) → int"));
        ctx.rollback(mark);
        assert!(ctx.apply(&a).is_polymorphic());
    }

    #[test]
    fn occurs_check() {
        let mut ctx = TypeContext::new();
        let v = ctx.fresh();
        assert!(ctx.unify(&v, &PolyType::list(v.clone())).is_err());
    }

    #[test]
    fn mismatch() {
        let mut ctx = TypeContext::new();
        assert!(ctx.unify(&t("substr"), &t("bool")).is_err());
        assert!(!ctx.unifies(&t("list(int)"), &t("list(bool)")));
        assert!(ctx.unifies(&t("list(t0)"), &t("list(bool)")));
    }
}
