//! The library: typed productions with log-weights, the PCFG prior over eta-long programs, and
//! weight re-estimation from frontiers.
//!
//! Programs are generated top-down. At an arrow request the only legal move is an abstraction
//! (probability one). At any other request the legal moves are every production whose return type
//! unifies with the request and every in-scope variable whose return type does; each chosen head
//! is applied to exactly as many arguments as its type has arrows. Variables share a single weight
//! that is split evenly over the variables legal in that context.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, TypeError};
use crate::eval::Inventions;
use crate::search::Frontier;
use crate::term::Term;
use crate::types::{PolyType, TypeContext};
use crate::util::log_sum_exp;

/// The context a choice is made in: which head the new node is an argument of.
///
/// Arguments of a variable head, and the program root, use [`Parent::Root`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parent {
    Root,
    Prod(usize),
}

/// A head choice: a production index or a de Bruijn variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Child {
    Prod(usize),
    Var(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Production {
    pub name: Arc<str>,
    /// Definition of an invented production; `None` for a base primitive.
    pub body: Option<Term>,
    pub scheme: PolyType,
    pub log_weight: f64,
    /// Productions of the library it was abstracted from that occur in its body, with multiplicity.
    pub derivation: Vec<Arc<str>>,
}

impl Production {
    pub fn is_invented(&self) -> bool {
        self.body.is_some()
    }

    /// Description-length size: one for a primitive, the leaf count of an invented body.
    pub fn size(&self) -> usize {
        self.body.as_ref().map_or(1, Term::size)
    }
}

/// A library snapshot. Productions are kept sorted by name, so indices are stable for a version.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "GrammarRepr", into = "GrammarRepr")]
pub struct Grammar {
    productions: Vec<Production>,
    var_log_weight: f64,
    version: u64,
    index: HashMap<Arc<str>, usize>,
    inventions: Inventions,
    max_arity: usize,
}

#[derive(Serialize, Deserialize)]
struct GrammarRepr {
    version: u64,
    var_log_weight: f64,
    productions: Vec<Production>,
}

impl From<GrammarRepr> for Grammar {
    fn from(r: GrammarRepr) -> Self {
        Grammar::assemble(r.productions, r.var_log_weight, r.version)
    }
}

impl From<Grammar> for GrammarRepr {
    fn from(g: Grammar) -> Self {
        GrammarRepr {
            version: g.version,
            var_log_weight: g.var_log_weight,
            productions: g.productions,
        }
    }
}

/// A distribution over derivations that shares the grammar's typing: the grammar itself, or a
/// recognition-model prediction that reweights children by their parent and argument slot.
pub trait GrammarLike: Sync {
    fn grammar(&self) -> &Grammar;

    /// Unnormalized log-weight of `child` in the given context. Every variable maps to the shared
    /// variable weight; splitting among legal variables happens in [`legal_children`].
    fn log_weight(&self, parent: Parent, slot: usize, child: Child) -> f64;
}

impl GrammarLike for Grammar {
    fn grammar(&self) -> &Grammar {
        self
    }

    fn log_weight(&self, _parent: Parent, _slot: usize, child: Child) -> f64 {
        match child {
            Child::Prod(i) => self.productions[i].log_weight,
            Child::Var(_) => self.var_log_weight,
        }
    }
}

/// A legal head with its normalized log-probability.
#[derive(Clone, Debug, PartialEq)]
pub struct Legal {
    pub child: Child,
    pub log_prob: f64,
}

/// One non-abstraction node of a derivation.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub parent: Parent,
    pub slot: usize,
    /// Every legal head in this context, productions first then variables.
    pub legal: Vec<Child>,
    /// Number of legal variables (their shared weight is divided by this).
    pub var_count: usize,
    /// Position of the chosen head in `legal`.
    pub chosen: usize,
}

impl Step {
    /// Log-probability of the chosen head under `dist`.
    pub fn log_prob<G: GrammarLike + ?Sized>(&self, dist: &G) -> f64 {
        let weights = self.weights(dist);
        weights[self.chosen] - log_sum_exp(&weights)
    }

    /// Per-child log-weights including the variable split.
    pub fn weights<G: GrammarLike + ?Sized>(&self, dist: &G) -> Vec<f64> {
        let split = (self.var_count.max(1) as f64).ln();
        self.legal
            .iter()
            .map(|&c| {
                let w = dist.log_weight(self.parent, self.slot, c);
                match c {
                    Child::Var(_) => w - split,
                    Child::Prod(_) => w,
                }
            })
            .collect()
    }
}

impl Grammar {
    /// A grammar over base primitives with uniform weights.
    pub fn new(primitives: Vec<(String, PolyType)>) -> Grammar {
        let productions = primitives
            .into_iter()
            .map(|(name, scheme)| Production {
                name: Arc::from(name.as_str()),
                body: None,
                scheme: scheme.canonical(),
                log_weight: 0.0,
                derivation: Vec::new(),
            })
            .collect();
        Grammar::assemble(productions, 0.0, 0)
    }

    fn assemble(mut productions: Vec<Production>, var_log_weight: f64, version: u64) -> Grammar {
        productions.sort_by(|a, b| a.name.cmp(&b.name));
        productions.dedup_by(|a, b| a.name == b.name);
        let index = productions
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), i))
            .collect();
        let inventions = productions
            .iter()
            .filter_map(|p| p.body.clone().map(|b| (p.name.clone(), b)))
            .collect();
        let max_arity = productions.iter().map(|p| p.scheme.arity()).max().unwrap_or(0);
        Grammar {
            productions,
            var_log_weight,
            version,
            index,
            inventions,
            max_arity,
        }
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn len(&self) -> usize {
        self.productions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.productions.is_empty()
    }

    pub fn var_log_weight(&self) -> f64 {
        self.var_log_weight
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Largest production arity, the `A` of recognition tensors (at least one).
    pub fn max_arity(&self) -> usize {
        self.max_arity.max(1)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Production> {
        self.index_of(name).map(|i| &self.productions[i])
    }

    pub fn inventions(&self) -> &Inventions {
        &self.inventions
    }

    pub fn invented_count(&self) -> usize {
        self.inventions.len()
    }

    /// A copy with the given weights and the version bumped.
    pub fn with_weights(&self, log_weights: &[f64], var_log_weight: f64) -> Grammar {
        let mut g = self.clone();
        for (p, &w) in g.productions.iter_mut().zip(log_weights) {
            p.log_weight = w;
        }
        g.var_log_weight = var_log_weight;
        g.version += 1;
        g
    }

    /// Name the next invented production would get.
    pub fn next_invention_name(&self) -> String {
        let n = self
            .inventions
            .keys()
            .filter_map(|k| k.strip_prefix('#').and_then(|d| d.parse::<usize>().ok()))
            .map(|k| k + 1)
            .max()
            .unwrap_or(0);
        format!("#{n}")
    }

    /// Adds an invented production for the closed term `body`, with log-weight zero.
    pub fn with_invention(&self, body: Term) -> Result<(Grammar, Arc<str>), TypeError> {
        let scheme = self.infer_type(&body)?;
        let name: Arc<str> = Arc::from(self.next_invention_name().as_str());
        let mut derivation: Vec<Arc<str>> = body.primitives().into_iter().cloned().collect();
        derivation.sort();
        let mut productions = self.productions.clone();
        productions.push(Production {
            name: name.clone(),
            body: Some(body),
            scheme,
            log_weight: 0.0,
            derivation,
        });
        Ok((
            Grammar::assemble(productions, self.var_log_weight, self.version + 1),
            name,
        ))
    }

    /// Most general type of a closed term, canonically numbered.
    pub fn infer_type(&self, term: &Term) -> Result<PolyType, TypeError> {
        let mut ctx = TypeContext::new();
        let t = self.infer(term, &mut ctx, &mut Vec::new())?;
        Ok(ctx.apply(&t).canonical())
    }

    fn infer(
        &self,
        term: &Term,
        ctx: &mut TypeContext,
        env: &mut Vec<PolyType>,
    ) -> Result<PolyType, TypeError> {
        match term {
            Term::Prim(n) => {
                let p = self
                    .get(n)
                    .ok_or_else(|| TypeError::UnknownPrimitive(n.to_string()))?;
                Ok(ctx.instantiate(&p.scheme))
            }
            Term::Var(i) => env
                .len()
                .checked_sub(i + 1)
                .map(|k| env[k].clone())
                .ok_or(TypeError::Unbound(*i)),
            Term::Abs(b) => {
                let arg = ctx.fresh();
                env.push(arg.clone());
                let body = self.infer(b, ctx, env);
                env.pop();
                Ok(PolyType::arrow(arg, body?))
            }
            Term::App(f, x) => {
                let ft = self.infer(f, ctx, env)?;
                let xt = self.infer(x, ctx, env)?;
                let ret = ctx.fresh();
                ctx.unify(&ft, &PolyType::arrow(xt, ret.clone()))?;
                Ok(ret)
            }
        }
    }

    /// Type of `child` in context, instantiated in `ctx`. `env[0]` is the innermost binder.
    pub fn child_type(&self, child: Child, ctx: &mut TypeContext, env: &[PolyType]) -> PolyType {
        match child {
            Child::Prod(i) => ctx.instantiate(&self.productions[i].scheme),
            Child::Var(j) => ctx.apply(&env[j]),
        }
    }

    /// Legal heads at a non-arrow `request`, productions first (by index) then variables.
    /// Returns the heads and the number of legal variables.
    pub fn legal_heads(
        &self,
        ctx: &mut TypeContext,
        request: &PolyType,
        env: &[PolyType],
    ) -> (Vec<Child>, usize) {
        let mut out = self.legal_productions(ctx, request);
        let before = out.len();
        self.push_legal_vars(ctx, request, env, &mut out);
        let vars = out.len() - before;
        (out, vars)
    }

    /// Productions whose return type unifies with `request`, by index.
    pub fn legal_productions(&self, ctx: &mut TypeContext, request: &PolyType) -> Vec<Child> {
        let mut out = Vec::new();
        for (i, p) in self.productions.iter().enumerate() {
            if !ctx.may_unify(p.scheme.returns(), request) {
                continue;
            }
            let mark = ctx.mark();
            let t = ctx.instantiate(&p.scheme);
            if ctx.unifies_in_place(t.returns(), request) {
                out.push(Child::Prod(i));
            }
            ctx.rollback(mark);
        }
        out
    }

    /// Appends the in-scope variables whose return type unifies with `request`.
    pub fn push_legal_vars(
        &self,
        ctx: &mut TypeContext,
        request: &PolyType,
        env: &[PolyType],
        out: &mut Vec<Child>,
    ) {
        for (j, t) in env.iter().enumerate() {
            let t = ctx.apply(t);
            if ctx.unifies(t.returns(), request) {
                out.push(Child::Var(j));
            }
        }
    }

    /// Walks the derivation of an eta-long `program` at `request`, in generation order.
    pub fn derivation(&self, program: &Term, request: &PolyType) -> Result<Vec<Step>, TypeError> {
        let mut ctx = TypeContext::new();
        ctx.reserve(request);
        let mut steps = Vec::new();
        self.walk(program, request, &mut Vec::new(), Parent::Root, 0, &mut ctx, &mut steps)?;
        Ok(steps)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        term: &Term,
        request: &PolyType,
        env: &mut Vec<PolyType>,
        parent: Parent,
        slot: usize,
        ctx: &mut TypeContext,
        steps: &mut Vec<Step>,
    ) -> Result<(), TypeError> {
        let request = ctx.apply(request);
        if let PolyType::Arrow(arg, ret) = &request {
            let Term::Abs(body) = term else {
                return Err(TypeError::NotEtaLong(format!("{term} at {request}")));
            };
            // `env` is stored outermost-first; index 0 of the view is the last element.
            env.push(arg.as_ref().clone());
            let r = self.walk(body, ret, env, parent, slot, ctx, steps);
            env.pop();
            return r;
        }
        if matches!(term, Term::Abs(_)) {
            return Err(TypeError::NotEtaLong(format!("{term} at {request}")));
        }
        let view: Vec<PolyType> = env.iter().rev().cloned().collect();
        let (head, args) = term.spine();
        let child = match head {
            Term::Prim(n) => Child::Prod(
                self.index_of(n)
                    .ok_or_else(|| TypeError::UnknownPrimitive(n.to_string()))?,
            ),
            Term::Var(j) => {
                if *j >= view.len() {
                    return Err(TypeError::Unbound(*j));
                }
                Child::Var(*j)
            }
            _ => return Err(TypeError::NotEtaLong(format!("{term}"))),
        };
        let (legal, var_count) = self.legal_heads(ctx, &request, &view);
        let chosen = legal
            .iter()
            .position(|&c| c == child)
            .ok_or_else(|| TypeError::Illegal(format!("{head} at {request}")))?;
        steps.push(Step {
            parent,
            slot,
            legal,
            var_count,
            chosen,
        });
        let t = self.child_type(child, ctx, &view);
        let arg_types: Vec<PolyType> = t.arguments().into_iter().cloned().collect();
        if arg_types.len() != args.len() {
            return Err(TypeError::NotEtaLong(format!(
                "{head} takes {} arguments, given {}",
                arg_types.len(),
                args.len()
            )));
        }
        ctx.unify(t.returns(), &request)?;
        let child_parent = match child {
            Child::Prod(i) => Parent::Prod(i),
            Child::Var(_) => Parent::Root,
        };
        for (k, (a, at)) in args.into_iter().zip(arg_types.iter()).enumerate() {
            self.walk(a, at, env, child_parent, k, ctx, steps)?;
        }
        Ok(())
    }

    /// `log P[program | library, weights]` under this grammar.
    pub fn log_prior(&self, program: &Term, request: &PolyType) -> Result<f64, TypeError> {
        log_prob_under(self, program, request)
    }

    /// Legal children of a context with their normalized log-probabilities under `dist`.
    pub fn legal_children<G: GrammarLike + ?Sized>(
        &self,
        dist: &G,
        ctx: &mut TypeContext,
        request: &PolyType,
        env: &[PolyType],
        parent: Parent,
        slot: usize,
    ) -> Vec<Legal> {
        let (legal, var_count) = self.legal_heads(ctx, request, env);
        normalize(dist, legal, var_count, parent, slot)
    }

    /// `λ · Σ size(production)`.
    pub fn description_length(&self, structure_penalty: f64) -> f64 {
        structure_penalty * self.productions.iter().map(Production::size).sum::<usize>() as f64
    }

    /// Re-estimates weights from frontier usage, each entry weighted by its posterior share.
    /// Entries that fail to derive under this grammar are skipped.
    pub fn fit_weights(&self, frontiers: &[Frontier], pseudocounts: f64) -> Grammar {
        let mut counts = vec![0.0; self.productions.len()];
        let mut var_count = 0.0;
        for f in frontiers {
            let posts: Vec<f64> = f.entries.iter().map(|e| e.log_posterior).collect();
            let z = log_sum_exp(&posts);
            for e in &f.entries {
                let share = (e.log_posterior - z).exp();
                let Ok(steps) = self.derivation(&e.program, &f.request) else {
                    continue;
                };
                for s in steps {
                    match s.legal[s.chosen] {
                        Child::Prod(i) => counts[i] += share,
                        Child::Var(_) => var_count += share,
                    }
                }
            }
        }
        let weights: Vec<f64> = counts.iter().map(|c| (c + pseudocounts).ln()).collect();
        self.with_weights(&weights, (var_count + pseudocounts).ln())
    }

    /// Normalized probability of each production over the whole library (context-free).
    pub fn unconditional_probabilities(&self) -> BTreeMap<Arc<str>, f64> {
        let w: Vec<f64> = self.productions.iter().map(|p| p.log_weight).collect();
        let z = log_sum_exp(&w);
        self.productions
            .iter()
            .map(|p| (p.name.clone(), (p.log_weight - z).exp()))
            .collect()
    }

    /// Structured text export: a header line then one tab-separated row per production
    /// (name, type, printed term, log-weight), ordered by name.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# version\t{}\tvariable\t{:?}", self.version, self.var_log_weight);
        for p in &self.productions {
            let term = p.body.clone().unwrap_or_else(|| Term::Prim(p.name.clone()));
            let _ = writeln!(s, "{}\t{}\t{}\t{:?}", p.name, p.scheme, term, p.log_weight);
        }
        s
    }

    /// Parses [`Grammar::to_text`] output.
    pub fn from_text(text: &str) -> Result<Grammar, Error> {
        let bad = |l: &str| Error::Data(format!("bad grammar line `{l}`"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad(""))?;
        let h: Vec<&str> = header.split('\t').collect();
        if h.len() != 4 || h[0] != "# version" {
            return Err(bad(header));
        }
        let version = h[1].parse().map_err(|_| bad(header))?;
        let var_log_weight = h[3].parse().map_err(|_| bad(header))?;
        let mut productions = Vec::new();
        for l in lines.filter(|l| !l.is_empty()) {
            let f: Vec<&str> = l.split('\t').collect();
            if f.len() != 4 {
                return Err(bad(l));
            }
            let term = Term::parse(f[2])?;
            let body = match &term {
                Term::Prim(n) if n.as_ref() == f[0] => None,
                _ => Some(term),
            };
            let mut derivation: Vec<Arc<str>> = body
                .as_ref()
                .map(|b| b.primitives().into_iter().cloned().collect())
                .unwrap_or_default();
            derivation.sort();
            productions.push(Production {
                name: Arc::from(f[0]),
                body,
                scheme: PolyType::parse(f[1])?,
                log_weight: f[3].parse().map_err(|_| bad(l))?,
                derivation,
            });
        }
        Ok(Grammar::assemble(productions, var_log_weight, version))
    }
}

/// Attaches normalized log-probabilities under `dist` to a legal set.
pub fn normalize<G: GrammarLike + ?Sized>(
    dist: &G,
    legal: Vec<Child>,
    var_count: usize,
    parent: Parent,
    slot: usize,
) -> Vec<Legal> {
    let step = Step {
        parent,
        slot,
        legal,
        var_count,
        chosen: 0,
    };
    let weights = step.weights(dist);
    let z = log_sum_exp(&weights);
    step.legal
        .into_iter()
        .zip(weights)
        .map(|(child, w)| Legal {
            child,
            log_prob: w - z,
        })
        .collect()
}

/// `log` probability of `program` under any [`GrammarLike`].
pub fn log_prob_under<G: GrammarLike + ?Sized>(
    dist: &G,
    program: &Term,
    request: &PolyType,
) -> Result<f64, TypeError> {
    let steps = dist.grammar().derivation(program, request)?;
    Ok(steps.iter().map(|s| s.log_prob(dist)).sum())
}

/// Draws an eta-long program from `dist` at `request`, or `None` when a branch dead-ends or
/// nests more than `max_depth` heads.
pub fn sample_program<G: GrammarLike + ?Sized, R: Rng + ?Sized>(
    dist: &G,
    request: &PolyType,
    rng: &mut R,
    max_depth: usize,
) -> Option<Term> {
    let mut ctx = TypeContext::new();
    ctx.reserve(request);
    let mut sampler = Sampler { dist, rng, ctx };
    sampler.draw(request, &mut Vec::new(), Parent::Root, 0, max_depth)
}

struct Sampler<'d, 'r, G: ?Sized, R: ?Sized> {
    dist: &'d G,
    rng: &'r mut R,
    ctx: TypeContext,
}

impl<G: GrammarLike + ?Sized, R: Rng + ?Sized> Sampler<'_, '_, G, R> {
    fn draw(
        &mut self,
        request: &PolyType,
        env: &mut Vec<PolyType>,
        parent: Parent,
        slot: usize,
        depth: usize,
    ) -> Option<Term> {
        let request = self.ctx.apply(request);
        if let PolyType::Arrow(arg, ret) = &request {
            env.push(arg.as_ref().clone());
            let body = self.draw(ret, env, parent, slot, depth);
            env.pop();
            return body.map(Term::abs);
        }
        if depth == 0 {
            return None;
        }
        let grammar = self.dist.grammar();
        let view: Vec<PolyType> = env.iter().rev().cloned().collect();
        let legal = grammar.legal_children(self.dist, &mut self.ctx, &request, &view, parent, slot);
        let mut u: f64 = self.rng.gen();
        let mut pick = legal.last()?.child;
        for l in &legal {
            u -= l.log_prob.exp();
            if u <= 0.0 {
                pick = l.child;
                break;
            }
        }
        let t = grammar.child_type(pick, &mut self.ctx, &view);
        let arg_types: Vec<PolyType> = t.arguments().into_iter().cloned().collect();
        self.ctx.unify(t.returns(), &request).ok()?;
        let (mut term, child_parent) = match pick {
            Child::Prod(i) => (Term::Prim(grammar.productions[i].name.clone()), Parent::Prod(i)),
            Child::Var(j) => (Term::Var(j), Parent::Root),
        };
        for (k, at) in arg_types.iter().enumerate() {
            let a = self.draw(at, env, child_parent, k, depth - 1)?;
            term = Term::app(term, a);
        }
        Some(term)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> PolyType {
        PolyType::parse(s).unwrap()
    }

    fn toy() -> Grammar {
        Grammar::new(vec![
            ("f".into(), t("int → int")),
            ("g".into(), t("int → int → int")),
            ("z".into(), t("int")),
            ("b".into(), t("bool")),
        ])
    }

    #[test]
    fn legality_follows_return_types() {
        let g = toy();
        let mut ctx = TypeContext::new();
        let (heads, vars) = g.legal_heads(&mut ctx, &t("int"), &[]);
        let names: Vec<&str> = heads
            .iter()
            .map(|c| match c {
                Child::Prod(i) => g.productions()[*i].name.as_ref(),
                Child::Var(_) => "$",
            })
            .collect();
        assert_eq!(names, vec!["f", "g", "z"]);
        assert_eq!(vars, 0);
        let (heads, _) = g.legal_heads(&mut ctx, &PolyType::Var(0), &[]);
        assert_eq!(heads.len(), 4);
    }

    #[test]
    fn uniform_prior() {
        let g = toy();
        let lp = g.log_prior(&Term::parse("z").unwrap(), &t("int")).unwrap();
        assert!((lp - (1.0f64 / 3.0).ln()).abs() < 1e-12);
        let lp2 = g.log_prior(&Term::parse("(f z)").unwrap(), &t("int")).unwrap();
        assert!(lp2 < lp);
    }

    #[test]
    fn variables_share_one_weight() {
        let g = toy();
        let p = Term::parse("(lambda (lambda $1))").unwrap();
        let lp = g.log_prior(&p, &t("int → int → int")).unwrap();
        // Four choices: f, g, z and the variable weight split over two variables.
        assert!((lp - (0.25f64 * 0.5).ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_eta_long_and_ill_typed() {
        let g = toy();
        assert!(g.log_prior(&Term::parse("f").unwrap(), &t("int → int")).is_err());
        assert!(g.log_prior(&Term::parse("(f b)").unwrap(), &t("int")).is_err());
        assert!(g.log_prior(&Term::parse("b").unwrap(), &t("int")).is_err());
    }

    #[test]
    fn inference() {
        let g = toy();
        assert_eq!(g.infer_type(&Term::parse("(lambda $0)").unwrap()).unwrap(), t("t0 → t0"));
        assert_eq!(
            g.infer_type(&Term::parse("(lambda (g $0 z))").unwrap()).unwrap(),
            t("int → int")
        );
        assert!(g.infer_type(&Term::parse("(f b)").unwrap()).is_err());
        assert!(matches!(
            g.infer_type(&Term::parse("nope").unwrap()),
            Err(TypeError::UnknownPrimitive(_))
        ));
    }

    #[test]
    fn description_length_is_additive() {
        let g = toy();
        assert_eq!(g.description_length(1.5), 6.0);
        let (g2, name) = g.with_invention(Term::parse("(lambda (g (f $0) (g z z)))").unwrap()).unwrap();
        assert_eq!(name.as_ref(), "#0");
        assert_eq!(g2.description_length(1.5) - g.description_length(1.5), 1.5 * 6.0);
        assert_eq!(g2.get("#0").unwrap().scheme, t("int → int"));
    }

    #[test]
    fn text_round_trip() {
        let (g, _) = toy()
            .with_invention(Term::parse("(lambda (f (f $0)))").unwrap())
            .unwrap();
        let g = g.with_weights(&[0.1, -0.25, 1.0 / 3.0, 2.0, -7.5], 0.125);
        let back = Grammar::from_text(&g.to_text()).unwrap();
        assert_eq!(back.to_text(), g.to_text());
        assert_eq!(back.productions(), g.productions());
    }

    #[test]
    fn samples_are_derivable() {
        use rand::SeedableRng;
        let g = toy();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let request = t("int → int");
        let mut drawn = 0;
        for _ in 0..200 {
            if let Some(p) = sample_program(&g, &request, &mut rng, 8) {
                assert!(g.log_prior(&p, &request).unwrap().is_finite());
                drawn += 1;
            }
        }
        assert!(drawn > 50);
    }
}
