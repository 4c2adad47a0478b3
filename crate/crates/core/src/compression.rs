//! Library learning by bounded refactoring.
//!
//! Candidates come from anti-unifying pairs of frontier subtrees that share a head: where the two
//! subtrees differ, or where they mention variables bound outside the subtree, the difference is
//! abstracted into an argument. A candidate is scored by rewriting every frontier with it, refitting
//! weights, and summing program, library and (optionally) alignment description lengths.
//! Acceptance is greedy, one abstraction at a time.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, TypeError};
use crate::grammar::{Child, Grammar, Step};
use crate::search::Frontier;
use crate::term::Term;
use crate::translation::TranslationTable;
use crate::types::{PolyType, TypeContext};
use crate::util::log_sum_exp;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressionParams {
    /// λ, the per-leaf cost of library productions.
    pub structure_penalty: f64,
    pub pseudocounts: f64,
    pub max_new_per_iteration: usize,
    pub max_arity: usize,
    /// 0 allows only argument-free fragments, 1 adds first-order arguments, 2 or more also lets an
    /// argument stand in function position.
    pub refactoring_depth: usize,
    /// Weight of the alignment description length; zero gives the program-only objective.
    pub translation_weight: f64,
    /// Candidates fully scored per acceptance round, after ranking by estimated savings.
    pub candidates_per_round: usize,
}

impl Default for CompressionParams {
    fn default() -> Self {
        CompressionParams {
            structure_penalty: 1.5,
            pseudocounts: 30.0,
            max_new_per_iteration: 5,
            max_arity: 3,
            refactoring_depth: 2,
            translation_weight: 1.0,
            candidates_per_round: 30,
        }
    }
}

impl CompressionParams {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.structure_penalty > 0.0) {
            return Err(Error::Config("structure penalty must be positive".into()));
        }
        if !(self.pseudocounts > 0.0) {
            return Err(Error::Config("pseudocounts must be positive".into()));
        }
        if !(self.translation_weight >= 0.0) {
            return Err(Error::Config("translation weight must be non-negative".into()));
        }
        Ok(())
    }
}

/// Position of a subtree: frontier index, entry index, and the path of child steps from the root
/// (0 = function, 1 = argument, 2 = abstraction body).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub frontier: usize,
    pub entry: usize,
    pub path: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Closed body; its leading abstractions are the arguments.
    pub body: Term,
    pub arity: usize,
    pub sites: Vec<Site>,
}

impl Candidate {
    /// Distinct frontier entries with at least one matching site.
    pub fn entries_used(&self) -> usize {
        self.sites
            .iter()
            .map(|s| (s.frontier, s.entry))
            .collect::<BTreeSet<_>>()
            .len()
    }

    fn pattern(&self) -> &Term {
        let mut t = &self.body;
        for _ in 0..self.arity {
            match t {
                Term::Abs(b) => t = b,
                _ => unreachable!("candidate bodies start with one binder per argument"),
            }
        }
        t
    }

    /// Arguments that make this candidate reproduce `term`, in argument order.
    pub fn matches(&self, term: &Term) -> Option<Vec<Term>> {
        let mut bound = vec![None; self.arity];
        if !bind(self.pattern(), term, 0, self.arity, &mut bound) {
            return None;
        }
        bound.into_iter().collect()
    }
}

/// First-order matching of a pattern whose free variables are arguments.
fn bind(p: &Term, t: &Term, depth: usize, arity: usize, bound: &mut [Option<Term>]) -> bool {
    match (p, t) {
        (Term::Var(i), _) if *i >= depth => {
            if t.mentions_vars_in(0, depth) {
                return false;
            }
            let j = arity - 1 - (i - depth);
            let value = t.shift(-(depth as isize), 0);
            match &bound[j] {
                Some(v) => *v == value,
                None => {
                    bound[j] = Some(value);
                    true
                }
            }
        }
        (Term::Var(i), Term::Var(k)) => i == k,
        (Term::Prim(a), Term::Prim(b)) => a == b,
        (Term::Abs(a), Term::Abs(b)) => bind(a, b, depth + 1, arity, bound),
        (Term::App(pf, px), Term::App(tf, tx)) => {
            bind(pf, tf, depth, arity, bound) && bind(px, tx, depth, arity, bound)
        }
        _ => false,
    }
}

/// Marker index for an argument hole while a pattern is being built.
const HOLE: usize = 1 << 40;

struct AntiUnifier {
    holes: Vec<(Term, Term)>,
    max_arity: usize,
    head_holes: bool,
}

impl AntiUnifier {
    fn lgg(&mut self, a: &Term, b: &Term, depth: usize, head: bool) -> Option<Term> {
        if a == b && a.free_depth() <= depth {
            return Some(a.clone());
        }
        match (a, b) {
            (Term::Abs(x), Term::Abs(y)) => return self.lgg(x, y, depth + 1, false).map(Term::abs),
            (Term::App(f1, x1), Term::App(f2, x2)) if a.spine().1.len() == b.spine().1.len() => {
                let f = self.lgg(f1, f2, depth, true)?;
                let x = self.lgg(x1, x2, depth, false)?;
                return Some(Term::app(f, x));
            }
            _ => {}
        }
        if head && !self.head_holes {
            return None;
        }
        if a.mentions_vars_in(0, depth) || b.mentions_vars_in(0, depth) {
            return None;
        }
        let key = (a.shift(-(depth as isize), 0), b.shift(-(depth as isize), 0));
        let j = match self.holes.iter().position(|h| *h == key) {
            Some(j) => j,
            None => {
                self.holes.push(key);
                self.holes.len() - 1
            }
        };
        (self.holes.len() <= self.max_arity).then_some(Term::Var(HOLE + j))
    }
}

fn fill_holes(t: &Term, depth: usize, arity: usize) -> Term {
    match t {
        Term::Var(i) if *i >= HOLE => Term::Var(depth + arity - 1 - (i - HOLE)),
        Term::Prim(_) | Term::Var(_) => t.clone(),
        Term::Abs(b) => Term::abs(fill_holes(b, depth + 1, arity)),
        Term::App(f, x) => Term::app(fill_holes(f, depth, arity), fill_holes(x, depth, arity)),
    }
}

fn prim_leaves(t: &Term) -> usize {
    t.primitives().len()
}

/// Anti-unifies two subtrees into a candidate body, if one exists within the bounds.
pub fn generalize(a: &Term, b: &Term, params: &CompressionParams) -> Option<Term> {
    let mut au = AntiUnifier {
        holes: Vec::new(),
        max_arity: if params.refactoring_depth == 0 { 0 } else { params.max_arity },
        head_holes: params.refactoring_depth >= 2,
    };
    let pattern = au.lgg(a, b, 0, false)?;
    if prim_leaves(&pattern) < 2 || !matches!(pattern, Term::App(..)) {
        return None;
    }
    let k = au.holes.len();
    Some(Term::abs_n(fill_holes(&pattern, 0, k), k))
}

struct Occurrence<'a> {
    term: &'a Term,
    site: Site,
}

/// Saturated application nodes (not in function position), in pre-order.
fn spine_roots<'a>(t: &'a Term, path: &mut Vec<u8>, in_fn: bool, out: &mut Vec<(&'a Term, Vec<u8>)>) {
    match t {
        Term::Prim(_) | Term::Var(_) => {}
        Term::Abs(b) => {
            path.push(2);
            spine_roots(b, path, false, out);
            path.pop();
        }
        Term::App(f, x) => {
            if !in_fn {
                out.push((t, path.clone()));
            }
            path.push(0);
            spine_roots(f, path, true, out);
            path.pop();
            path.push(1);
            spine_roots(x, path, false, out);
            path.pop();
        }
    }
}

fn head_key(t: &Term) -> Option<(Arc<str>, usize)> {
    let (h, args) = t.spine();
    match h {
        Term::Prim(n) => Some((n.clone(), args.len())),
        _ => None,
    }
}

/// All candidate abstractions used by at least two distinct frontier entries, deduplicated.
pub fn propose(frontiers: &[Frontier], params: &CompressionParams) -> Vec<Candidate> {
    let mut occurrences: Vec<Occurrence> = Vec::new();
    for (fi, f) in frontiers.iter().enumerate() {
        for (ei, e) in f.entries.iter().enumerate() {
            let mut roots = Vec::new();
            spine_roots(&e.program, &mut Vec::new(), false, &mut roots);
            occurrences.extend(roots.into_iter().map(|(term, path)| Occurrence {
                term,
                site: Site {
                    frontier: fi,
                    entry: ei,
                    path,
                },
            }));
        }
    }
    // Unique subtrees grouped by head symbol and argument count.
    type ByHead<'t> = BTreeMap<(Arc<str>, usize), BTreeMap<&'t Term, Vec<usize>>>;
    let mut groups: ByHead = BTreeMap::new();
    for (k, o) in occurrences.iter().enumerate() {
        if let Some(key) = head_key(o.term) {
            groups.entry(key).or_default().entry(o.term).or_default().push(k);
        }
    }
    let bodies: BTreeSet<(Arc<str>, usize, Term)> = groups
        .par_iter()
        .flat_map_iter(|(key, uniq)| {
            let terms: Vec<&Term> = uniq.keys().copied().collect();
            let mut out = Vec::new();
            for i in 0..terms.len() {
                for j in i..terms.len() {
                    if i == j && entries_of(&uniq[terms[i]], &occurrences) < 2 {
                        continue;
                    }
                    if let Some(body) = generalize(terms[i], terms[j], params) {
                        out.push((key.0.clone(), key.1, body));
                    }
                }
            }
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    let mut out: Vec<Candidate> = bodies
        .into_par_iter()
        .filter_map(|(head, n, body)| {
            let arity = leading_binders(&body);
            let mut c = Candidate {
                body,
                arity,
                sites: Vec::new(),
            };
            for (term, ks) in &groups[&(head, n)] {
                if c.matches(term).is_some() {
                    c.sites.extend(ks.iter().map(|&k| occurrences[k].site.clone()));
                }
            }
            c.sites.sort();
            (c.entries_used() >= 2).then_some(c)
        })
        .collect();
    out.sort_by(|a, b| a.body.cmp(&b.body));
    out
}

fn entries_of(ks: &[usize], occ: &[Occurrence]) -> usize {
    ks.iter()
        .map(|&k| (occ[k].site.frontier, occ[k].site.entry))
        .collect::<BTreeSet<_>>()
        .len()
}

fn leading_binders(t: &Term) -> usize {
    match t {
        Term::Abs(b) => 1 + leading_binders(b),
        _ => 0,
    }
}

/// Inserts the abstractions an eta-long derivation at `request` needs, after a rewrite has put
/// function-valued arguments in unexpanded form.
pub fn eta_long(grammar: &Grammar, term: &Term, request: &PolyType) -> Result<Term, TypeError> {
    let mut ctx = TypeContext::new();
    ctx.reserve(request);
    expand(grammar, term, request, &mut Vec::new(), &mut ctx)
}

fn expand(
    grammar: &Grammar,
    term: &Term,
    request: &PolyType,
    env: &mut Vec<PolyType>,
    ctx: &mut TypeContext,
) -> Result<Term, TypeError> {
    let request = ctx.apply(request);
    if let PolyType::Arrow(arg, ret) = &request {
        let body = match term {
            Term::Abs(b) => b.as_ref().clone(),
            other => Term::app(other.shift(1, 0), Term::Var(0)),
        };
        env.push(arg.as_ref().clone());
        let b = expand(grammar, &body, ret, env, ctx);
        env.pop();
        return b.map(Term::abs);
    }
    let (head, args) = term.spine();
    let view: Vec<PolyType> = env.iter().rev().cloned().collect();
    let child = match head {
        Term::Prim(n) => Child::Prod(
            grammar
                .index_of(n)
                .ok_or_else(|| TypeError::UnknownPrimitive(n.to_string()))?,
        ),
        Term::Var(j) if *j < view.len() => Child::Var(*j),
        Term::Var(j) => return Err(TypeError::Unbound(*j)),
        _ => return Err(TypeError::NotEtaLong(term.to_string())),
    };
    let t = grammar.child_type(child, ctx, &view);
    let arg_types: Vec<PolyType> = t.arguments().into_iter().cloned().collect();
    if arg_types.len() != args.len() {
        return Err(TypeError::NotEtaLong(term.to_string()));
    }
    ctx.unify(t.returns(), &request)?;
    let mut out = head.clone();
    for (a, at) in args.into_iter().zip(&arg_types) {
        out = Term::app(out, expand(grammar, a, at, env, ctx)?);
    }
    Ok(out)
}

/// Replaces matching sites in pre-order; `only` restricts the rewrite to the n-th match.
fn replace(
    t: &Term,
    name: &Arc<str>,
    c: &Candidate,
    in_fn: bool,
    only: Option<usize>,
    seen: &mut usize,
) -> Term {
    if !in_fn && matches!(t, Term::App(..)) {
        if let Some(args) = c.matches(t) {
            let here = *seen;
            *seen += 1;
            if only.is_none_or(|n| n == here) {
                let args = args
                    .iter()
                    .map(|a| replace(a, name, c, false, only, seen))
                    .collect::<Vec<_>>();
                return Term::apply(Term::Prim(name.clone()), args);
            }
        }
    }
    match t {
        Term::Prim(_) | Term::Var(_) => t.clone(),
        Term::Abs(b) => Term::abs(replace(b, name, c, false, only, seen)),
        Term::App(f, x) => Term::app(
            replace(f, name, c, true, only, seen),
            replace(x, name, c, false, only, seen),
        ),
    }
}

/// Rewrites `program` with the production `name` (whose body is `candidate.body`), replacing
/// every maximal matching site. `grammar` must already contain the production. Sites whose
/// rewrite does not type are left alone.
pub fn rewrite(
    program: &Term,
    name: &Arc<str>,
    candidate: &Candidate,
    grammar: &Grammar,
    request: &PolyType,
) -> Term {
    let mut seen = 0;
    let all = replace(program, name, candidate, false, None, &mut seen);
    if seen == 0 {
        return program.clone();
    }
    if let Ok(t) = eta_long(grammar, &all, request) {
        return t;
    }
    let mut current = program.clone();
    let mut skip = 0;
    loop {
        let mut seen = 0;
        let next = replace(&current, name, candidate, false, Some(skip), &mut seen);
        if skip >= seen {
            return current;
        }
        match eta_long(grammar, &next, request) {
            Ok(t) => current = t,
            Err(_) => skip += 1,
        }
    }
}

/// Frontiers with their derivations under one grammar, so reweighting needs no more type work.
struct Derived {
    steps: Vec<Vec<Vec<Step>>>,
}

impl Derived {
    fn new(grammar: &Grammar, frontiers: &[Frontier]) -> Derived {
        let steps = frontiers
            .iter()
            .map(|f| {
                f.entries
                    .iter()
                    .map(|e| grammar.derivation(&e.program, &f.request).unwrap_or_default())
                    .collect()
            })
            .collect();
        Derived { steps }
    }

    fn log_priors(&self, dist: &Grammar) -> Vec<Vec<f64>> {
        self.steps
            .iter()
            .map(|f| f.iter().map(|s| s.iter().map(|x| x.log_prob(dist)).sum()).collect())
            .collect()
    }

    /// Weights from usage counts, each entry weighted by its posterior share under uniform
    /// weights, plus pseudocounts.
    fn fit(&self, grammar: &Grammar, pseudocounts: f64) -> Grammar {
        let uniform = grammar.with_weights(&vec![0.0; grammar.len()], 0.0);
        let priors = self.log_priors(&uniform);
        let mut counts = vec![0.0; grammar.len()];
        let mut var = 0.0;
        for (f, lps) in self.steps.iter().zip(&priors) {
            let z = log_sum_exp(lps);
            for (steps, lp) in f.iter().zip(lps) {
                let share = (lp - z).exp();
                for s in steps {
                    match s.legal[s.chosen] {
                        Child::Prod(i) => counts[i] += share,
                        Child::Var(_) => var += share,
                    }
                }
            }
        }
        let w: Vec<f64> = counts.iter().map(|c| (c + pseudocounts).ln()).collect();
        grammar.with_weights(&w, (var + pseudocounts).ln())
    }

    fn program_dl(&self, dist: &Grammar) -> f64 {
        self.log_priors(dist)
            .iter()
            .filter(|lps| !lps.is_empty())
            .map(|lps| -log_sum_exp(lps))
            .sum()
    }
}

/// Description-length components of a library and its frontiers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub program: f64,
    pub grammar: f64,
    pub translation: f64,
}

impl Objective {
    pub fn total(&self) -> f64 {
        self.program + self.grammar + self.translation
    }
}

struct Scored {
    grammar: Grammar,
    frontiers: Vec<Frontier>,
    objective: Objective,
}

/// Refits weights for `grammar` on `frontiers` and rescores every entry.
fn settle(grammar: &Grammar, mut frontiers: Vec<Frontier>, params: &CompressionParams, translation: f64) -> Scored {
    let derived = Derived::new(grammar, &frontiers);
    let fitted = derived.fit(grammar, params.pseudocounts);
    let priors = derived.log_priors(&fitted);
    for (f, lps) in frontiers.iter_mut().zip(&priors) {
        for (e, lp) in f.entries.iter_mut().zip(lps) {
            e.log_prior = *lp;
            e.log_posterior = *lp;
        }
        f.entries.sort_by(|a, b| {
            b.log_posterior
                .total_cmp(&a.log_posterior)
                .then_with(|| a.program.to_string().cmp(&b.program.to_string()))
        });
    }
    let objective = Objective {
        program: derived.program_dl(&fitted),
        grammar: fitted.description_length(params.structure_penalty),
        translation,
    };
    Scored {
        grammar: fitted,
        frontiers,
        objective,
    }
}

fn translation_term(table: &TranslationTable, components: Option<&[Arc<str>]>, params: &CompressionParams) -> f64 {
    if params.translation_weight == 0.0 || table.is_empty() {
        return 0.0;
    }
    let dl = match components {
        Some(c) => table.refactored_description_length(c),
        None => table.description_length(),
    };
    params.translation_weight * dl
}

fn apply_candidate(
    candidate: &Candidate,
    grammar: &Grammar,
    frontiers: &[Frontier],
    table: &TranslationTable,
    params: &CompressionParams,
    translation_offset: f64,
) -> Option<(Scored, Arc<str>)> {
    let (extended, name) = grammar.with_invention(candidate.body.clone()).ok()?;
    let mut rewritten = frontiers.to_vec();
    let mut tasks_using = 0;
    for f in &mut rewritten {
        let mut used = false;
        for e in &mut f.entries {
            let r = rewrite(&e.program, &name, candidate, &extended, &f.request);
            used |= r != e.program;
            e.program = r;
        }
        tasks_using += usize::from(used);
    }
    if tasks_using < 2 {
        return None;
    }
    let derivation = extended.get(&name)?.derivation.clone();
    let translation = translation_term(table, Some(&derivation), params) + translation_offset;
    Some((settle(&extended, rewritten, params, translation), name))
}

/// Cheap estimate used to choose which candidates get a full score.
fn estimated_savings(c: &Candidate) -> f64 {
    let tasks = c.sites.iter().map(|s| s.frontier).collect::<BTreeSet<_>>().len();
    tasks as f64 * (prim_leaves(&c.body) as f64 - 1.0)
}

/// Total objective of `candidate` applied to the given state; lower is better.
pub fn score(
    candidate: &Candidate,
    frontiers: &[Frontier],
    grammar: &Grammar,
    table: &TranslationTable,
    params: &CompressionParams,
) -> Option<Objective> {
    apply_candidate(candidate, grammar, frontiers, table, params, 0.0).map(|(s, _)| s.objective)
}

/// Objective of a library and frontiers without any new abstraction.
pub fn baseline_objective(
    frontiers: &[Frontier],
    grammar: &Grammar,
    table: &TranslationTable,
    params: &CompressionParams,
) -> Objective {
    settle(grammar, frontiers.to_vec(), params, translation_term(table, None, params)).objective
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accepted {
    pub name: String,
    pub body: Term,
    pub scheme: PolyType,
    pub tasks_using: usize,
    pub objective: Objective,
}

#[derive(Clone, Debug)]
pub struct CompressionResult {
    pub grammar: Grammar,
    pub frontiers: Vec<Frontier>,
    pub objective_before: Objective,
    pub objective_after: Objective,
    pub accepted: Vec<Accepted>,
}

impl CompressionResult {
    /// Plain-text summary for run logs.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let o = |x: &Objective| {
            format!(
                "total {:.3} (programs {:.3}, library {:.3}, alignments {:.3})",
                x.total(),
                x.program,
                x.grammar,
                x.translation
            )
        };
        let _ = writeln!(s, "before: {}", o(&self.objective_before));
        for a in &self.accepted {
            let _ = writeln!(s, "accepted {} : {} = {} [{} tasks]", a.name, a.scheme, a.body, a.tasks_using);
        }
        let _ = writeln!(s, "after: {}", o(&self.objective_after));
        s
    }
}

/// Greedily adds the abstraction that most lowers the objective, rewriting frontiers and
/// refitting weights after each, until none helps or the per-iteration cap is reached.
pub fn compress(
    frontiers: &[Frontier],
    grammar: &Grammar,
    table: &TranslationTable,
    params: &CompressionParams,
) -> CompressionResult {
    let live: Vec<Frontier> = frontiers.iter().filter(|f| !f.is_empty()).cloned().collect();
    let base_translation = translation_term(table, None, params);
    let mut state = settle(grammar, live, params, base_translation);
    let before = state.objective;
    let mut accepted = Vec::new();
    while accepted.len() < params.max_new_per_iteration && !state.frontiers.is_empty() {
        let mut pool = propose(&state.frontiers, params);
        pool.sort_by(|a, b| {
            estimated_savings(b)
                .total_cmp(&estimated_savings(a))
                .then_with(|| a.body.cmp(&b.body))
        });
        pool.truncate(params.candidates_per_round);
        // Translation savings accumulate across accepted abstractions.
        let offset = state.objective.translation - base_translation;
        let best = pool
            .par_iter()
            .filter_map(|c| {
                apply_candidate(c, &state.grammar, &state.frontiers, table, params, offset)
                    .map(|(s, name)| (c, s, name))
            })
            .min_by(|a, b| {
                a.1.objective
                    .total()
                    .total_cmp(&b.1.objective.total())
                    .then_with(|| a.0.body.cmp(&b.0.body))
            });
        let Some((cand, next, name)) = best else { break };
        if next.objective.total() >= state.objective.total() - 1e-9 {
            break;
        }
        let tasks_using = next
            .frontiers
            .iter()
            .filter(|f| f.entries.iter().any(|e| e.program.primitives().iter().any(|p| **p == name)))
            .count();
        accepted.push(Accepted {
            name: name.to_string(),
            body: cand.body.clone(),
            scheme: next.grammar.get(&name).map(|p| p.scheme.clone()).unwrap_or(PolyType::Var(0)),
            tasks_using,
            objective: next.objective,
        });
        state = next;
    }
    // Reattach empty frontiers in their original order.
    let mut by_id: HashMap<String, Frontier> =
        state.frontiers.into_iter().map(|f| (f.task_id.clone(), f)).collect();
    let frontiers = frontiers
        .iter()
        .map(|f| by_id.remove(&f.task_id).unwrap_or_else(|| f.clone()))
        .collect();
    CompressionResult {
        grammar: state.grammar,
        frontiers,
        objective_before: before,
        objective_after: state.objective,
        accepted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::FrontierEntry;

    fn p(s: &str) -> Term {
        Term::parse(s).unwrap()
    }

    fn frontier(id: &str, request: &str, programs: &[&str]) -> Frontier {
        let mut f = Frontier::empty(id, PolyType::parse(request).unwrap(), 5);
        f.merge(programs.iter().map(|s| FrontierEntry {
            program: p(s),
            log_prior: 0.0,
            log_posterior: 0.0,
        }));
        f
    }

    #[test]
    fn shared_context_with_different_leaves() {
        let fs = [
            frontier("a", "int", &["(f (g a))"]),
            frontier("b", "int", &["(f (g b))"]),
        ];
        let cs = propose(&fs, &CompressionParams::default());
        let c = cs.iter().find(|c| c.body == p("(lambda (f (g $0)))")).unwrap();
        assert_eq!(c.arity, 1);
        assert_eq!(c.sites.len(), 2);
    }

    #[test]
    fn no_candidates_without_repetition() {
        let fs = [frontier("a", "int", &["(f (g a))"])];
        assert!(propose(&fs, &CompressionParams::default()).is_empty());
    }

    #[test]
    fn free_variables_become_arguments() {
        let open = |s: &str| match p(&format!("(lambda {s})")) {
            Term::Abs(b) => *b,
            _ => unreachable!(),
        };
        let a = open("(flatten (cdr (regexsplit dot $0)))");
        let b = open("(flatten (revcdr (regexsplit dot $0)))");
        let body = generalize(&a, &b, &CompressionParams::default()).unwrap();
        assert_eq!(body, p("(lambda (lambda (flatten ($1 (regexsplit dot $0)))))"));
        let first_order = CompressionParams {
            refactoring_depth: 1,
            ..Default::default()
        };
        assert!(generalize(&a, &b, &first_order).is_none());
    }

    #[test]
    fn matching_binds_arguments() {
        let c = Candidate {
            body: p("(lambda (lambda (g $1 $0 $1)))"),
            arity: 2,
            sites: vec![],
        };
        assert_eq!(c.matches(&p("(g a b a)")), Some(vec![p("a"), p("b")]));
        assert_eq!(c.matches(&p("(g a b c)")), None);
    }
}
