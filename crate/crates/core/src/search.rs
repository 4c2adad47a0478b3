//! Enumeration of eta-long programs in decreasing probability, and frontier collection.
//!
//! A partial derivation is a sequence of choices in pre-order plus a stack of typed holes. Filling
//! a hole with a legal head costs that head's normalized log-probability, so probability only
//! decreases along a path and a cost window `[lo, hi)` can be enumerated exhaustively by a
//! depth-first search that cuts at `hi`.

use std::ops::ControlFlow;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use rustc_hash::FxHashMap as HashMap;
use serde::{Deserialize, Serialize};

use crate::error::TypeError;
use crate::eval::{EvalLimit, Executor};
use crate::grammar::{normalize, Child, Grammar, GrammarLike, Legal, Parent};
use crate::task::{check_task, Task};
use crate::term::Term;
use crate::types::{PolyType, TypeContext};
use crate::util::log_sum_exp;

/// Deterministic budget on search-node expansions, with an optional wall-clock cap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    max_expansions: u64,
    wall_clock: Option<Duration>,
}

impl SearchBudget {
    pub fn new(max_expansions: u64) -> Result<Self, TypeError> {
        if max_expansions == 0 {
            return Err(TypeError::Illegal("max-expansions must be positive".into()));
        }
        Ok(SearchBudget {
            max_expansions,
            wall_clock: None,
        })
    }

    pub fn with_wall_clock(mut self, cap: Duration) -> Self {
        self.wall_clock = Some(cap);
        self
    }

    pub fn max_expansions(&self) -> u64 {
        self.max_expansions
    }

    pub fn wall_clock(&self) -> Option<Duration> {
        self.wall_clock
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_expansions: 200_000,
            wall_clock: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierEntry {
    pub program: Term,
    pub log_prior: f64,
    pub log_posterior: f64,
}

/// Verified solutions of one task, best first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub task_id: String,
    pub request: PolyType,
    pub entries: Vec<FrontierEntry>,
    pub beam_width: usize,
}

impl Frontier {
    pub fn empty(task_id: impl Into<String>, request: PolyType, beam_width: usize) -> Self {
        Frontier {
            task_id: task_id.into(),
            request,
            entries: Vec::new(),
            beam_width,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn best(&self) -> Option<&FrontierEntry> {
        self.entries.first()
    }

    /// Adds entries, drops duplicates, re-sorts and truncates to the beam.
    pub fn merge(&mut self, more: impl IntoIterator<Item = FrontierEntry>) {
        for e in more {
            if !self.entries.iter().any(|x| x.program == e.program) {
                self.entries.push(e);
            }
        }
        self.sort_and_truncate();
    }

    fn sort_and_truncate(&mut self) {
        self.entries.sort_by(|a, b| {
            b.log_posterior
                .total_cmp(&a.log_posterior)
                .then_with(|| a.program.to_string().cmp(&b.program.to_string()))
        });
        self.entries.truncate(self.beam_width);
    }

    /// Recomputes scores under `grammar`, dropping entries that no longer derive.
    pub fn rescore(&mut self, grammar: &Grammar) {
        self.entries.retain_mut(|e| match grammar.log_prior(&e.program, &self.request) {
            Ok(lp) => {
                e.log_prior = lp;
                e.log_posterior = lp;
                true
            }
            Err(_) => false,
        });
        self.sort_and_truncate();
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub expansions: u64,
    pub emitted: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Choice {
    Lambda,
    Head(Child, usize),
}

#[derive(Clone, Debug)]
struct Hole {
    request: PolyType,
    /// Innermost binder first.
    env: Arc<Vec<PolyType>>,
    parent: Parent,
    slot: usize,
    /// Lower bound on the cost of filling this hole and every hole below it on the stack.
    floor: f64,
    /// Head request, environment and abstraction count, once they can no longer change.
    opened: Option<Arc<Opened>>,
}

/// A hole whose request and environment are ground, with its final legal set.
#[derive(Debug)]
struct Opened {
    req: PolyType,
    env: Arc<Vec<PolyType>>,
    lambdas: usize,
    context: Arc<Context>,
    vars: Vec<Child>,
}

fn build(grammar: &Grammar, choices: &[Choice], pos: &mut usize) -> Term {
    let c = choices[*pos];
    *pos += 1;
    match c {
        Choice::Lambda => Term::abs(build(grammar, choices, pos)),
        Choice::Head(child, arity) => {
            let head = match child {
                Child::Prod(i) => Term::Prim(grammar.productions()[i].name.clone()),
                Child::Var(j) => Term::Var(j),
            };
            let args: Vec<Term> = (0..arity).map(|_| build(grammar, choices, pos)).collect();
            Term::apply(head, args)
        }
    }
}

/// Width in nats of one cost window.
const WINDOW: f64 = 1.0;
/// Slack that keeps completion bounds admissible under rounding.
const SLACK: f64 = 1e-9;
/// Log-probabilities closer than this are treated as tied and ordered by printed form.
const TIE: f64 = 1e-9;
/// Largest program, in syntax nodes, the search will build. A guide can make recursive
/// productions almost free, and without a cap the derivation would grow without bound.
pub const MAX_PROGRAM_SIZE: usize = 256;

/// Depth-first enumeration of every program whose cost `-logp` lies in `[lo, hi)`.
struct Window<'a, G: ?Sized> {
    dist: &'a G,
    grammar: &'a Grammar,
    ctx: TypeContext,
    holes: Vec<Hole>,
    choices: Vec<Choice>,
    lo: f64,
    hi: f64,
    found: Vec<(f64, Vec<Choice>)>,
    /// Whether some branch was cut at `hi`; if not, the space is exhausted.
    cut: bool,
    nodes: u64,
    max_nodes: u64,
    deadline: Option<Instant>,
    /// Set when the node budget or the wall clock ran out.
    stopped: bool,
    /// Legal productions per request shape.
    cache: HashMap<PolyType, Arc<Vec<Child>>>,
    contexts: HashMap<(PolyType, Parent, usize, usize), Arc<Context>>,
    /// Argument types of a production at a ground request, when they are ground too.
    ground_args: HashMap<(PolyType, usize), Option<Arc<Vec<PolyType>>>>,
}

/// A normalized choice context.
#[derive(Debug)]
struct Context {
    prods: Vec<Legal>,
    var_log_prob: f64,
    /// Cost of the cheapest legal head.
    min_cost: f64,
}

impl<G: GrammarLike + ?Sized> Window<'_, G> {
    /// Peels arrows off a hole's request: the head request, the extended environment and the
    /// number of abstractions.
    fn open(&self, hole: &Hole) -> (PolyType, Arc<Vec<PolyType>>, usize) {
        let mut env = hole.env.clone();
        let mut req = self.ctx.apply(&hole.request);
        let mut lambdas = 0;
        while let PolyType::Arrow(a, b) = req {
            lambdas += 1;
            let mut e = Vec::with_capacity(env.len() + 1);
            e.push(self.ctx.apply(&a));
            e.extend(env.iter().cloned());
            env = Arc::new(e);
            req = self.ctx.apply(&b);
        }
        (req, env, lambdas)
    }

    fn productions(&mut self, req: &PolyType) -> Arc<Vec<Child>> {
        let key = if req.is_polymorphic() { req.canonical() } else { req.clone() };
        if let Some(p) = self.cache.get(&key) {
            return p.clone();
        }
        let p = Arc::new(self.grammar.legal_productions(&mut self.ctx, req));
        self.cache.insert(key, p.clone());
        p
    }

    fn ground_args(&mut self, req: &PolyType, i: usize) -> Option<Arc<Vec<PolyType>>> {
        let key = (req.clone(), i);
        if let Some(a) = self.ground_args.get(&key) {
            return a.clone();
        }
        let m = self.ctx.mark();
        let t = self.grammar.child_type(Child::Prod(i), &mut self.ctx, &[]);
        let args = if self.ctx.unifies_in_place(t.returns(), req) {
            let args: Vec<PolyType> = t.arguments().into_iter().map(|a| self.ctx.apply(a)).collect();
            (!args.iter().any(PolyType::is_polymorphic)).then(|| Arc::new(args))
        } else {
            None
        };
        self.ctx.rollback(m);
        self.ground_args.insert(key, args.clone());
        args
    }

    /// Normalized distribution over the legal heads; every variable gets the same probability.
    fn legal(
        &mut self,
        req: &PolyType,
        env: &[PolyType],
        parent: Parent,
        slot: usize,
    ) -> (Arc<Context>, Vec<Child>) {
        let mut vars = Vec::new();
        self.grammar.push_legal_vars(&mut self.ctx, req, env, &mut vars);
        let shape = if req.is_polymorphic() { req.canonical() } else { req.clone() };
        let key = (shape, parent, slot, vars.len());
        if let Some(c) = self.contexts.get(&key) {
            return (c.clone(), vars);
        }
        let prods = self.productions(req);
        let mut legal = prods.as_ref().clone();
        legal.extend(vars.iter().copied());
        let normalized = normalize(self.dist, legal, vars.len(), parent, slot);
        let var_log_prob = normalized.get(prods.len()).map_or(f64::NEG_INFINITY, |l| l.log_prob);
        let prods: Vec<Legal> = normalized.into_iter().take(prods.len()).collect();
        let min_cost = prods
            .iter()
            .map(|l| -l.log_prob)
            .chain((!vars.is_empty()).then_some(-var_log_prob))
            .fold(f64::INFINITY, f64::min);
        let c = Arc::new(Context {
            prods,
            var_log_prob,
            min_cost,
        });
        self.contexts.insert(key, c.clone());
        (c, vars)
    }

    /// Lower bound on the cost of filling `hole`, valid however its types are refined later.
    ///
    /// Refinement can only shrink a legal set. When the request and environment are ground the
    /// set is final and the bound is exact. Otherwise each child is charged against the
    /// productions that stay legal for any refinement (those returning a bare type variable, or
    /// all of them at a ground request), dropping the variable split.
    fn bound(&mut self, hole: &mut Hole) -> f64 {
        let (req, env, lambdas) = self.open(hole);
        let ground_req = !req.is_polymorphic();
        if ground_req && !env.iter().any(PolyType::is_polymorphic) {
            let (context, vars) = self.legal(&req, &env, hole.parent, hole.slot);
            let cost = context.min_cost;
            hole.opened = Some(Arc::new(Opened {
                req,
                env,
                lambdas,
                context,
                vars,
            }));
            return cost;
        }
        let key = (req.canonical(), hole.parent, hole.slot, usize::MAX);
        if let Some(c) = self.contexts.get(&key) {
            return c.min_cost;
        }
        let prods = self.productions(&req);
        let w = |c: Child| self.dist.log_weight(hole.parent, hole.slot, c);
        let productions = self.grammar.productions();
        let always = |c: &Child| {
            ground_req
                || matches!(c, Child::Prod(i) if matches!(productions[*i].scheme.returns(), PolyType::Var(_)))
        };
        let fixed: Vec<f64> = prods.iter().filter(|c| always(c)).map(|&c| w(c)).collect();
        let z_fixed = log_sum_exp(&fixed);
        let mut best = f64::INFINITY;
        for &c in prods.iter().chain(std::iter::once(&Child::Var(0))) {
            let wc = w(c);
            let cost = if always(&c) {
                z_fixed - wc
            } else {
                log_sum_exp(&[z_fixed, wc]) - wc
            };
            best = best.min(cost.max(0.0));
        }
        self.contexts.insert(
            key,
            Arc::new(Context {
                prods: Vec::new(),
                var_log_prob: f64::NEG_INFINITY,
                min_cost: best,
            }),
        );
        best
    }

    fn go(&mut self, logp: f64) {
        if self.stopped {
            return;
        }
        if self.nodes >= self.max_nodes {
            self.stopped = true;
            return;
        }
        self.nodes += 1;
        if self.nodes.is_multiple_of(1024) {
            if let Some(d) = self.deadline {
                if Instant::now() > d {
                    self.stopped = true;
                    return;
                }
            }
        }
        let Some(hole) = self.holes.pop() else {
            if -logp >= self.lo {
                self.found.push((logp, self.choices.clone()));
            }
            return;
        };
        let below = self.holes.last().map_or(0.0, |h| h.floor);
        let mark = self.ctx.mark();
        let (req, env, lambdas, context, vars) = match &hole.opened {
            Some(o) => (o.req.clone(), o.env.clone(), o.lambdas, o.context.clone(), o.vars.clone()),
            None => {
                let (req, env, lambdas) = self.open(&hole);
                let (context, vars) = self.legal(&req, &env, hole.parent, hole.slot);
                (req, env, lambdas, context, vars)
            }
        };
        self.choices
            .extend(std::iter::repeat_n(Choice::Lambda, lambdas));
        let ground = !req.is_polymorphic();
        let var_log_prob = context.var_log_prob;
        let children = context
            .prods
            .iter()
            .map(|l| (l.child, l.log_prob))
            .chain(vars.into_iter().map(|v| (v, var_log_prob)));
        for (child, log_prob) in children {
            let next = logp + log_prob;
            if -next + below >= self.hi + SLACK {
                self.cut = true;
                continue;
            }
            let m = self.ctx.mark();
            let fast = match child {
                Child::Prod(i) if ground => self.ground_args(&req, i),
                _ => None,
            };
            let t;
            let args: Vec<&PolyType> = match &fast {
                Some(a) => a.iter().collect(),
                None => {
                    t = self.grammar.child_type(child, &mut self.ctx, &env);
                    if !self.ctx.unifies_in_place(t.returns(), &req) {
                        self.ctx.rollback(m);
                        continue;
                    }
                    t.arguments()
                }
            };
            let child_parent = match child {
                Child::Prod(i) => Parent::Prod(i),
                Child::Var(_) => Parent::Root,
            };
            let depth = self.holes.len();
            let mut floor = below;
            let mut viable = true;
            for (k, a) in args.iter().enumerate().rev() {
                let mut h = Hole {
                    request: (*a).clone(),
                    env: env.clone(),
                    parent: child_parent,
                    slot: k,
                    floor: 0.0,
                    opened: None,
                };
                floor += self.bound(&mut h);
                h.floor = floor;
                self.holes.push(h);
                if -next + floor >= self.hi + SLACK {
                    viable = false;
                    break;
                }
            }
            if viable && self.choices.len() < MAX_PROGRAM_SIZE {
                self.choices.push(Choice::Head(child, args.len()));
                self.go(next);
                self.choices.pop();
            } else if !viable {
                self.cut = true;
            }
            self.holes.truncate(depth);
            self.ctx.rollback(m);
        }
        self.choices.truncate(self.choices.len() - lambdas);
        self.ctx.rollback(mark);
        self.holes.push(hole);
    }
}

/// Emits complete programs of type `request` in non-increasing log-probability under `dist`,
/// ties broken by ascending printed form. The budget counts search-node expansions; `emit` may
/// stop the enumeration early.
///
/// Programs are found by depth-first search over successive cost windows of width one nat and
/// sorted within each window, so the order is exact. When the budget runs out inside a window,
/// the programs found so far in that window are still emitted in order.
pub fn enumerate<G, F>(dist: &G, request: &PolyType, budget: SearchBudget, mut emit: F) -> SearchStats
where
    G: GrammarLike + ?Sized,
    F: FnMut(&Term, f64) -> ControlFlow<()>,
{
    let grammar = dist.grammar();
    let deadline = budget.wall_clock.map(|d| Instant::now() + d);
    let mut ctx = TypeContext::new();
    ctx.reserve(request);
    let mut stats = SearchStats::default();
    let mut lo = f64::NEG_INFINITY;
    let mut hi = WINDOW;
    let mut cache = HashMap::default();
    let mut contexts = HashMap::default();
    let mut ground_args = HashMap::default();
    loop {
        let mut w = Window {
            dist,
            grammar,
            ctx: ctx.clone(),
            holes: vec![Hole {
                request: request.clone(),
                env: Arc::new(Vec::new()),
                parent: Parent::Root,
                slot: 0,
                floor: 0.0,
                opened: None,
            }],
            choices: Vec::new(),
            lo,
            hi,
            found: Vec::new(),
            cut: false,
            nodes: 0,
            max_nodes: budget.max_expansions - stats.expansions,
            deadline,
            stopped: false,
            cache: std::mem::take(&mut cache),
            contexts: std::mem::take(&mut contexts),
            ground_args: std::mem::take(&mut ground_args),
        };
        w.go(0.0);
        cache = w.cache;
        contexts = w.contexts;
        ground_args = w.ground_args;
        stats.expansions += w.nodes;
        let mut found: Vec<(f64, Term, String)> = w
            .found
            .into_iter()
            .map(|(lp, c)| {
                let t = build(grammar, &c, &mut 0);
                let s = t.to_string();
                (lp, t, s)
            })
            .collect();
        found.sort_by(|a, b| b.0.total_cmp(&a.0));
        // Equal-probability programs can differ in the last bits, depending on summation order.
        let mut i = 0;
        while i < found.len() {
            let top = found[i].0;
            let j = i + found[i..].iter().take_while(|f| top - f.0 <= TIE).count();
            found[i..j].sort_by(|a, b| a.2.cmp(&b.2));
            i = j;
        }
        for (lp, t, _) in &found {
            stats.emitted += 1;
            if emit(t, *lp).is_break() {
                return stats;
            }
        }
        if w.stopped || !w.cut {
            return stats;
        }
        lo = hi;
        hi += WINDOW;
    }
}

/// Collects up to `limit` programs from [`enumerate`].
pub fn enumerate_collect<G: GrammarLike + ?Sized>(
    dist: &G,
    request: &PolyType,
    budget: SearchBudget,
    limit: usize,
) -> Vec<(Term, f64)> {
    let mut out = Vec::new();
    enumerate(dist, request, budget, |t, lp| {
        out.push((t.clone(), lp));
        if out.len() >= limit {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    out
}

/// Searches one task until `beam_width` solutions are found or the budget runs out.
/// Entries are scored by their prior under `grammar`.
pub fn solve_task<E, G>(
    task: &Task<E::Data>,
    dist: &G,
    grammar: &Grammar,
    executor: &E,
    budget: SearchBudget,
    beam_width: usize,
    limit: EvalLimit,
) -> Frontier
where
    E: Executor,
    G: GrammarLike + ?Sized,
{
    let mut frontier = Frontier::empty(task.id.clone(), task.request.clone(), beam_width);
    if beam_width == 0 {
        return frontier;
    }
    let mut found = Vec::new();
    enumerate(dist, &task.request, budget, |t, _| {
        if check_task(t, task, executor, grammar.inventions(), limit) {
            if let Ok(lp) = grammar.log_prior(t, &task.request) {
                found.push(FrontierEntry {
                    program: t.clone(),
                    log_prior: lp,
                    log_posterior: lp,
                });
            }
        }
        if found.len() >= beam_width {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    frontier.merge(found);
    frontier
}

/// Solves tasks in parallel; `dists` holds one distribution per task or a single shared one.
/// Results are in task order regardless of scheduling.
pub fn solve_tasks<E, G>(
    tasks: &[Task<E::Data>],
    dists: &[G],
    grammar: &Grammar,
    executor: &E,
    budget: SearchBudget,
    beam_width: usize,
    limit: EvalLimit,
) -> Vec<Frontier>
where
    E: Executor,
    G: GrammarLike,
{
    assert!(dists.len() == 1 || dists.len() == tasks.len(), "one distribution per task");
    tasks
        .par_iter()
        .enumerate()
        .map(|(i, task)| {
            let dist = if dists.len() == 1 { &dists[0] } else { &dists[i] };
            solve_task(task, dist, grammar, executor, budget, beam_width, limit)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> PolyType {
        PolyType::parse(s).unwrap()
    }

    fn toy() -> Grammar {
        Grammar::new(vec![("s".into(), t("int → int")), ("z".into(), t("int"))])
    }

    #[test]
    fn first_program_is_most_probable() {
        let g = toy();
        let out = enumerate_collect(&g, &t("int"), SearchBudget::default(), 4);
        let printed: Vec<String> = out.iter().map(|(p, _)| p.to_string()).collect();
        assert_eq!(printed, vec!["z", "(s z)", "(s (s z))", "(s (s (s z)))"]);
        for w in out.windows(2) {
            assert!(w[0].1 >= w[1].1);
        }
    }

    #[test]
    fn lambda_at_arrow_requests() {
        let g = toy();
        let out = enumerate_collect(&g, &t("int → int"), SearchBudget::default(), 3);
        let printed: Vec<String> = out.iter().map(|(p, _)| p.to_string()).collect();
        assert_eq!(printed[0], "(lambda $0)");
        assert_eq!(printed[1], "(lambda z)");
        for (p, lp) in &out {
            let prior = g.log_prior(p, &t("int → int")).unwrap();
            assert!((prior - lp).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_budget() {
        let g = toy();
        let one = enumerate_collect(&g, &t("int"), SearchBudget::new(1).unwrap(), 10);
        assert!(one.len() <= 1);
        assert!(SearchBudget::new(0).is_err());
    }

    #[test]
    fn frontier_merge_dedups_and_truncates() {
        let mut f = Frontier::empty("x", t("int"), 2);
        let e = |s: &str, lp: f64| FrontierEntry {
            program: Term::parse(s).unwrap(),
            log_prior: lp,
            log_posterior: lp,
        };
        f.merge(vec![e("z", -1.0), e("(s z)", -2.0), e("z", -1.0), e("(s (s z))", -0.5)]);
        let printed: Vec<String> = f.entries.iter().map(|x| x.program.to_string()).collect();
        assert_eq!(printed, vec!["(s (s z))", "z"]);
    }
}
