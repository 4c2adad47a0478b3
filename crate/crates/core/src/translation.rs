//! Word/primitive translation model: Model 1 alignment EM in both directions, mutual-exclusivity
//! pseudo-alignments for unseen words, description scoring and generation, and the description
//! length of the alignment table under library refactoring.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, TypeError};
use crate::grammar::{Child, Grammar};
use crate::term::Term;
use crate::types::{PolyType, TypeContext};

/// Token emitted for an abstraction.
pub const LAMBDA: &str = "λ";
/// Probability used for unseen (word, token) pairs when scoring.
pub const FLOOR: f64 = 1e-7;
/// Minimum `t[l|w]` for `l` to count as aligned to `w` in the refactoring rule.
pub const ALIGNMENT_THRESHOLD: f64 = 0.05;
/// Words proposed per program token when decoding.
const CANDIDATES_PER_TOKEN: usize = 5;
const DECODE_BEAM: usize = 8;

/// Whether a program token is a library production rather than a binder or variable marker.
pub fn is_primitive_token(token: &str) -> bool {
    token != LAMBDA && !token.starts_with('$')
}

/// Pre-order token sequence: heads before their arguments, `λ` for each binder, `$i` for variables.
pub fn linearize(term: &Term) -> Vec<String> {
    fn go(t: &Term, out: &mut Vec<String>) {
        match t {
            Term::Prim(n) => out.push(n.to_string()),
            Term::Var(i) => out.push(format!("${i}")),
            Term::Abs(b) => {
                out.push(LAMBDA.to_string());
                go(b, out);
            }
            Term::App(f, x) => {
                go(f, out);
                go(x, out);
            }
        }
    }
    let mut out = Vec::new();
    go(term, &mut out);
    out
}

/// Inverse of [`linearize`] for eta-long programs: argument counts come from the types.
pub fn delinearize(tokens: &[String], grammar: &Grammar, request: &PolyType) -> Result<Term, TypeError> {
    let mut ctx = TypeContext::new();
    ctx.reserve(request);
    let mut pos = 0;
    let t = rebuild(tokens, &mut pos, grammar, request, &mut Vec::new(), &mut ctx)?;
    if pos != tokens.len() {
        return Err(TypeError::NotEtaLong(format!("{} trailing tokens", tokens.len() - pos)));
    }
    Ok(t)
}

fn rebuild(
    tokens: &[String],
    pos: &mut usize,
    grammar: &Grammar,
    request: &PolyType,
    env: &mut Vec<PolyType>,
    ctx: &mut TypeContext,
) -> Result<Term, TypeError> {
    let request = ctx.apply(request);
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| TypeError::NotEtaLong("token sequence ends early".into()))?;
    *pos += 1;
    if let PolyType::Arrow(arg, ret) = &request {
        if tok != LAMBDA {
            return Err(TypeError::NotEtaLong(format!("expected {LAMBDA}, found {tok}")));
        }
        env.push(arg.as_ref().clone());
        let body = rebuild(tokens, pos, grammar, ret, env, ctx);
        env.pop();
        return body.map(Term::abs);
    }
    let view: Vec<PolyType> = env.iter().rev().cloned().collect();
    let (head, child) = match tok.strip_prefix('$') {
        Some(i) => {
            let i: usize = i.parse().map_err(|_| TypeError::NotEtaLong(tok.clone()))?;
            if i >= view.len() {
                return Err(TypeError::Unbound(i));
            }
            (Term::Var(i), Child::Var(i))
        }
        None => {
            let i = grammar
                .index_of(tok)
                .ok_or_else(|| TypeError::UnknownPrimitive(tok.clone()))?;
            (Term::Prim(grammar.productions()[i].name.clone()), Child::Prod(i))
        }
    };
    let t = grammar.child_type(child, ctx, &view);
    let arg_types: Vec<PolyType> = t.arguments().into_iter().cloned().collect();
    ctx.unify(t.returns(), &request)?;
    let mut term = head;
    for at in &arg_types {
        let a = rebuild(tokens, pos, grammar, at, env, ctx)?;
        term = Term::app(term, a);
    }
    Ok(term)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationParams {
    pub em_iterations: usize,
    pub alpha_me: f64,
    pub me_enabled: bool,
}

impl Default for TranslationParams {
    fn default() -> Self {
        TranslationParams {
            em_iterations: 10,
            alpha_me: 0.1,
            me_enabled: true,
        }
    }
}

impl TranslationParams {
    pub fn validate(&self) -> Result<(), Error> {
        if self.em_iterations == 0 {
            return Err(Error::Config("em_iterations must be at least 1".into()));
        }
        if !(self.alpha_me > 0.0) {
            return Err(Error::Config("alpha_me must be positive".into()));
        }
        Ok(())
    }
}

type Nested = BTreeMap<String, BTreeMap<String, f64>>;

/// Conditional tables `t[w|l]` and `t[l|w]` with the expected alignment counts behind `t[w|l]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TranslationTable {
    /// token → word → `t[w|l]`.
    word_given_token: Nested,
    /// word → token → `t[l|w]`.
    token_given_word: Nested,
    /// token → word → expected alignment count.
    counts: Nested,
    known: BTreeSet<String>,
    new: BTreeSet<String>,
    log_likelihoods: Vec<f64>,
}

fn normalized(rows: &Nested) -> Nested {
    rows.iter()
        .filter_map(|(k, row)| {
            let z: f64 = row.values().sum();
            (z > 0.0).then(|| (k.clone(), row.iter().map(|(w, c)| (w.clone(), c / z)).collect()))
        })
        .collect()
}

fn transpose(rows: &Nested) -> Nested {
    let mut out = Nested::new();
    for (a, row) in rows {
        for (b, v) in row {
            out.entry(b.clone()).or_default().insert(a.clone(), *v);
        }
    }
    out
}

impl TranslationTable {
    /// A table whose both directions are normalized from explicit (token, word, count) rows.
    pub fn from_counts<'a>(rows: impl IntoIterator<Item = (&'a str, &'a str, f64)>) -> Self {
        let mut counts = Nested::new();
        for (l, w, c) in rows {
            *counts.entry(l.to_string()).or_default().entry(w.to_string()).or_default() += c;
        }
        let known = counts.values().flat_map(|r| r.keys().cloned()).collect();
        TranslationTable {
            word_given_token: normalized(&counts),
            token_given_word: normalized(&transpose(&counts)),
            counts,
            known,
            new: BTreeSet::new(),
            log_likelihoods: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.word_given_token.is_empty()
    }

    /// `t[w|l]`, zero when unseen.
    pub fn word_given_token(&self, token: &str, word: &str) -> f64 {
        self.word_given_token
            .get(token)
            .and_then(|r| r.get(word))
            .copied()
            .unwrap_or(0.0)
    }

    /// `t[l|w]`, zero when unseen.
    pub fn token_given_word(&self, word: &str, token: &str) -> f64 {
        self.token_given_word
            .get(word)
            .and_then(|r| r.get(token))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn count(&self, token: &str, word: &str) -> f64 {
        self.counts.get(token).and_then(|r| r.get(word)).copied().unwrap_or(0.0)
    }

    pub fn known_words(&self) -> &BTreeSet<String> {
        &self.known
    }

    pub fn new_words(&self) -> &BTreeSet<String> {
        &self.new
    }

    /// Corpus log-likelihood of the `t[w|l]` direction before each M-step and after the last.
    pub fn log_likelihoods(&self) -> &[f64] {
        &self.log_likelihoods
    }

    /// Words with positive `t[w|l]`, most probable first (ties by word).
    pub fn words_for(&self, token: &str) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self
            .word_given_token
            .get(token)
            .map(|r| r.iter().map(|(w, p)| (w.as_str(), *p)).filter(|(_, p)| *p > 0.0).collect())
            .unwrap_or_default();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }

    /// Primitive tokens `l` (no binders or variables) with `t[l|w] ≥` [`ALIGNMENT_THRESHOLD`].
    pub fn aligned_tokens(&self, word: &str) -> BTreeSet<&str> {
        self.token_given_word
            .get(word)
            .map(|r| {
                r.iter()
                    .filter(|(l, p)| is_primitive_token(l) && **p >= ALIGNMENT_THRESHOLD)
                    .map(|(l, _)| l.as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Pseudo-alignments between each unseen word and each library production, with mass
    /// `α / P[l]` so that rarely used productions attract new words. Both directions are
    /// renormalized afterwards.
    pub fn apply_mutual_exclusivity<'a>(
        &self,
        grammar: &Grammar,
        new_words: impl IntoIterator<Item = &'a str>,
        alpha: f64,
    ) -> TranslationTable {
        let mut out = self.clone();
        let priors = grammar.unconditional_probabilities();
        let fresh: BTreeSet<String> = new_words
            .into_iter()
            .filter(|w| !self.known.contains(*w))
            .map(str::to_string)
            .collect();
        for w in &fresh {
            let row: BTreeMap<String, f64> = priors
                .iter()
                .filter(|(l, p)| is_primitive_token(l) && **p > 0.0)
                .map(|(l, p)| (l.to_string(), alpha / p))
                .collect();
            for (l, c) in &row {
                *out.counts.entry(l.clone()).or_default().entry(w.clone()).or_default() += c;
            }
            let z: f64 = row.values().sum();
            out.token_given_word
                .insert(w.clone(), row.into_iter().map(|(l, c)| (l, c / z)).collect());
        }
        out.word_given_token = normalized(&out.counts);
        out.new.extend(fresh);
        out
    }

    /// `log 𝓣(d | ρ)` with each word aligned to its most probable program token.
    pub fn score_description(&self, words: &[String], program: &Term) -> f64 {
        self.score_tokens(words, &linearize(program))
    }

    pub fn score_tokens(&self, words: &[String], tokens: &[String]) -> f64 {
        words
            .iter()
            .map(|w| {
                tokens
                    .iter()
                    .map(|l| self.word_given_token(l, w).max(FLOOR))
                    .fold(FLOOR, f64::max)
                    .ln()
            })
            .sum()
    }

    /// `Σ count(l,w) · −log t[w|l]` over alignments with positive mass.
    pub fn description_length(&self) -> f64 {
        self.counts
            .iter()
            .flat_map(|(l, row)| row.iter().map(move |(w, c)| (l, w, *c)))
            .filter(|(_, _, c)| *c > 0.0)
            .map(|(l, w, c)| c * -self.word_given_token(l, w).ln())
            .sum()
    }

    /// Description length after adding an abstraction built from `components`, without re-running
    /// EM. For each word whose aligned set contains every component (at least two of them), the
    /// alignments to those components collapse into one alignment to the abstraction, carrying
    /// their mean count at their best probability.
    pub fn refactored_description_length(&self, components: &[Arc<str>]) -> f64 {
        let base = self.description_length();
        let parts: BTreeSet<&str> = components
            .iter()
            .map(|c| c.as_ref())
            .filter(|c| is_primitive_token(c))
            .collect();
        if parts.len() < 2 {
            return base;
        }
        let mut saved = 0.0;
        for word in self.token_given_word.keys() {
            let aligned = self.aligned_tokens(word);
            if !parts.is_subset(&aligned) {
                continue;
            }
            let mut old = 0.0;
            let mut mass = 0.0;
            let mut best: f64 = 0.0;
            for l in &parts {
                let c = self.count(l, word);
                let t = self.word_given_token(l, word);
                if c > 0.0 && t > 0.0 {
                    old += c * -t.ln();
                    mass += c;
                    best = best.max(t);
                }
            }
            if mass > 0.0 {
                let new = mass / parts.len() as f64 * -best.ln();
                saved += (old - new).max(0.0);
            }
        }
        base - saved
    }

    /// Text checkpoint: set headers then rows `token word t[w|l] t[l|w] count`, sorted, with nine
    /// decimals.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |set: &BTreeSet<String>| set.iter().cloned().collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "# known\t{}", join(&self.known));
        let _ = writeln!(s, "# new\t{}", join(&self.new));
        let mut keys: BTreeSet<(&str, &str)> = BTreeSet::new();
        for (l, row) in self.word_given_token.iter().chain(self.counts.iter()) {
            keys.extend(row.keys().map(|w| (l.as_str(), w.as_str())));
        }
        for (w, row) in &self.token_given_word {
            keys.extend(row.keys().map(|l| (l.as_str(), w.as_str())));
        }
        for (l, w) in keys {
            let _ = writeln!(
                s,
                "{l}\t{w}\t{:.9}\t{:.9}\t{:.9}",
                self.word_given_token(l, w),
                self.token_given_word(w, l),
                self.count(l, w)
            );
        }
        s
    }

    pub fn from_text(text: &str) -> Result<TranslationTable, Error> {
        let bad = |l: &str| Error::Data(format!("bad translation row `{l}`"));
        let mut table = TranslationTable::default();
        for line in text.lines().filter(|l| !l.is_empty()) {
            let f: Vec<&str> = line.split('\t').collect();
            match f.as_slice() {
                ["# known", words] => table.known = words.split_whitespace().map(String::from).collect(),
                ["# new", words] => table.new = words.split_whitespace().map(String::from).collect(),
                [l, w, twl, tlw, c] => {
                    let num = |x: &str| x.parse::<f64>().map_err(|_| bad(line));
                    let (twl, tlw, c) = (num(twl)?, num(tlw)?, num(c)?);
                    let put = |m: &mut Nested, a: &str, b: &str, v: f64| {
                        if v != 0.0 {
                            m.entry(a.to_string()).or_default().insert(b.to_string(), v);
                        }
                    };
                    put(&mut table.word_given_token, l, w, twl);
                    put(&mut table.token_given_word, w, l, tlw);
                    put(&mut table.counts, l, w, c);
                }
                _ => return Err(bad(line)),
            }
        }
        Ok(table)
    }
}

/// One Model 1 estimate of `t[target | source]` over a parallel corpus.
struct Model1 {
    table: Nested,
    counts: Nested,
    log_likelihoods: Vec<f64>,
}

fn model1(pairs: &[(&[String], &[String])], iterations: usize) -> Model1 {
    let mut sources: BTreeMap<&str, usize> = BTreeMap::new();
    let mut targets: BTreeMap<&str, usize> = BTreeMap::new();
    for (s, t) in pairs {
        for x in s.iter() {
            let n = sources.len();
            sources.entry(x).or_insert(n);
        }
        for y in t.iter() {
            let n = targets.len();
            targets.entry(y).or_insert(n);
        }
    }
    let (ns, nt) = (sources.len(), targets.len());
    let encoded: Vec<(Vec<usize>, Vec<usize>)> = pairs
        .iter()
        .map(|(s, t)| {
            (
                s.iter().map(|x| sources[x.as_str()]).collect(),
                t.iter().map(|y| targets[y.as_str()]).collect(),
            )
        })
        .collect();
    let mut prob = vec![1.0 / nt.max(1) as f64; ns * nt];
    let mut counts = vec![0.0; ns * nt];
    let mut lls = Vec::with_capacity(iterations + 1);
    let e_step = |prob: &[f64], counts: &mut Vec<f64>| -> f64 {
        counts.iter_mut().for_each(|c| *c = 0.0);
        let mut ll = 0.0;
        for (s, t) in &encoded {
            for &y in t {
                let z: f64 = s.iter().map(|&x| prob[x * nt + y]).sum();
                ll += (z / s.len() as f64).ln();
                for &x in s {
                    counts[x * nt + y] += prob[x * nt + y] / z;
                }
            }
        }
        ll
    };
    for _ in 0..iterations {
        lls.push(e_step(&prob, &mut counts));
        for x in 0..ns {
            let row = &counts[x * nt..(x + 1) * nt];
            let z: f64 = row.iter().sum();
            for y in 0..nt {
                prob[x * nt + y] = if z > 0.0 { row[y] / z } else { 0.0 };
            }
        }
    }
    let mut final_counts = vec![0.0; ns * nt];
    lls.push(e_step(&prob, &mut final_counts));
    let nest = |m: &[f64]| -> Nested {
        sources
            .iter()
            .map(|(x, &i)| {
                let row = targets
                    .iter()
                    .filter(|(_, &j)| m[i * nt + j] > 0.0)
                    .map(|(y, &j)| (y.to_string(), m[i * nt + j]))
                    .collect();
                (x.to_string(), row)
            })
            .collect()
    };
    Model1 {
        table: nest(&prob),
        counts: nest(&counts),
        log_likelihoods: lls,
    }
}

/// Trains both translation directions by Model 1 EM on (program tokens, description words) pairs.
/// Pairs with an empty side are ignored.
pub fn train_em(pairs: &[(Vec<String>, Vec<String>)], params: &TranslationParams) -> TranslationTable {
    let usable: Vec<(&[String], &[String])> = pairs
        .iter()
        .filter(|(l, w)| !l.is_empty() && !w.is_empty())
        .map(|(l, w)| (l.as_slice(), w.as_slice()))
        .collect();
    if usable.is_empty() {
        return TranslationTable::default();
    }
    let iterations = params.em_iterations.max(1);
    let forward = model1(&usable, iterations);
    let flipped: Vec<(&[String], &[String])> = usable.iter().map(|(l, w)| (*w, *l)).collect();
    let backward = model1(&flipped, iterations);
    TranslationTable {
        word_given_token: forward.table,
        token_given_word: backward.table,
        counts: forward.counts,
        known: usable.iter().flat_map(|(_, w)| w.iter().cloned()).collect(),
        new: BTreeSet::new(),
        log_likelihoods: forward.log_likelihoods,
    }
}

const START: &str = "<s>";
const END: &str = "</s>";

/// Add-k smoothed bigram model over description tokens.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedLm {
    k: f64,
    bigrams: BTreeMap<String, BTreeMap<String, f64>>,
    unigrams: BTreeMap<String, f64>,
    /// Distinct next-token outcomes, including the end marker.
    vocab: usize,
}

impl SmoothedLm {
    pub fn train<'a>(descriptions: impl IntoIterator<Item = &'a [String]>, k: f64) -> SmoothedLm {
        let mut bigrams: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        let mut unigrams: BTreeMap<String, f64> = BTreeMap::new();
        let mut vocab: BTreeSet<&str> = BTreeSet::from([END]);
        let descriptions: Vec<&[String]> = descriptions.into_iter().collect();
        for d in &descriptions {
            let mut prev = START;
            for w in d.iter().map(String::as_str).chain([END]) {
                vocab.insert(w);
                *bigrams.entry(prev.to_string()).or_default().entry(w.to_string()).or_default() += 1.0;
                *unigrams.entry(prev.to_string()).or_default() += 1.0;
                prev = w;
            }
        }
        SmoothedLm {
            k,
            bigrams,
            unigrams,
            vocab: vocab.len(),
        }
    }

    /// `log P(word | prev)`; `None` stands for the sentence start and the end marker.
    pub fn log_prob(&self, prev: Option<&str>, word: Option<&str>) -> f64 {
        let prev = prev.unwrap_or(START);
        let word = word.unwrap_or(END);
        let c = self.bigrams.get(prev).and_then(|r| r.get(word)).copied().unwrap_or(0.0);
        let n = self.unigrams.get(prev).copied().unwrap_or(0.0);
        ((c + self.k) / (n + self.k * self.vocab as f64)).ln()
    }

    pub fn log_prob_sequence(&self, words: &[String]) -> f64 {
        let mut prev = None;
        let mut total = 0.0;
        for w in words {
            total += self.log_prob(prev, Some(w));
            prev = Some(w.as_str());
        }
        total + self.log_prob(prev, None)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decode {
    Greedy,
    Sample,
}

/// Weight of the language model relative to the translation score when decoding.
pub const LM_WEIGHT: f64 = 0.5;

/// Noisy-channel description for `program`: one word per program token that has aligned words,
/// chosen by translation score plus weighted bigram score. Greedy decoding keeps a small beam;
/// sampling draws each word from the combined local score.
pub fn generate_description(
    program: &Term,
    table: &TranslationTable,
    lm: &SmoothedLm,
    mode: Decode,
    seed: u64,
) -> Vec<String> {
    let options: Vec<Vec<(&str, f64)>> = linearize(program)
        .iter()
        .map(|l| {
            let mut ws = table.words_for(l);
            ws.truncate(CANDIDATES_PER_TOKEN);
            ws
        })
        .filter(|ws| !ws.is_empty())
        .collect();
    match mode {
        Decode::Greedy => {
            let mut beam: Vec<(Vec<&str>, f64)> = vec![(Vec::new(), 0.0)];
            for ws in &options {
                let mut next: Vec<(Vec<&str>, f64)> = Vec::with_capacity(beam.len() * ws.len());
                for (seq, score) in &beam {
                    for &(w, p) in ws {
                        let lm_score = lm.log_prob(seq.last().copied(), Some(w));
                        let mut s = seq.clone();
                        s.push(w);
                        next.push((s, score + p.ln() + LM_WEIGHT * lm_score));
                    }
                }
                next.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                next.truncate(DECODE_BEAM);
                beam = next;
            }
            beam.into_iter()
                .map(|(s, score)| {
                    let end = LM_WEIGHT * lm.log_prob(s.last().copied(), None);
                    (s, score + end)
                })
                .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
                .map(|(s, _)| s.into_iter().map(String::from).collect())
                .unwrap_or_default()
        }
        Decode::Sample => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out: Vec<String> = Vec::with_capacity(options.len());
            for ws in &options {
                let prev = out.last().map(String::as_str);
                let scores: Vec<f64> = ws
                    .iter()
                    .map(|(w, p)| p.ln() + LM_WEIGHT * lm.log_prob(prev, Some(w)))
                    .collect();
                let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
                let mut u = rng.gen::<f64>() * weights.iter().sum::<f64>();
                let mut pick = ws.len() - 1;
                for (i, wt) in weights.iter().enumerate() {
                    u -= wt;
                    if u <= 0.0 {
                        pick = i;
                        break;
                    }
                }
                out.push(ws[pick].0.to_string());
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn linearize_examples() {
        assert_eq!(linearize(&Term::parse("(f a b)").unwrap()), toks("f a b"));
        assert_eq!(linearize(&Term::parse("(lambda (f $0))").unwrap()), toks("λ f $0"));
    }

    #[test]
    fn forced_alignment() {
        let t = train_em(&[(toks("polygon_fn"), toks("gon"))], &TranslationParams::default());
        assert!((t.word_given_token("polygon_fn", "gon") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_corpus_after_one_iteration() {
        let pairs = [(toks("a"), toks("x")), (toks("a b"), toks("x y"))];
        let p = TranslationParams {
            em_iterations: 1,
            ..Default::default()
        };
        let t = train_em(&pairs, &p);
        // Uniform start: x is wholly a's in the first pair and split evenly in the second.
        assert!((t.word_given_token("a", "x") - 0.75).abs() < 1e-12);
        assert!((t.word_given_token("a", "y") - 0.25).abs() < 1e-12);
    }

    #[test]
    fn table_text_round_trip() {
        let pairs = [(toks("a"), toks("x")), (toks("a b"), toks("x y"))];
        let t = train_em(&pairs, &TranslationParams::default());
        let back = TranslationTable::from_text(&t.to_text()).unwrap();
        assert_eq!(back.to_text(), t.to_text());
    }

    #[test]
    fn lm_is_normalized() {
        let d = [toks("add x at the start"), toks("remove the first letter")];
        let lm = SmoothedLm::train(d.iter().map(Vec::as_slice), 0.1);
        let vocab: BTreeSet<&str> = d.iter().flatten().map(String::as_str).collect();
        for prev in [None, Some("the"), Some("unseen")] {
            let mut z: f64 = vocab.iter().map(|w| lm.log_prob(prev, Some(w)).exp()).sum();
            z += lm.log_prob(prev, None).exp();
            assert!((z - 1.0).abs() < 1e-12);
        }
    }
}
