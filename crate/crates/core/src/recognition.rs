//! Amortized search guide: feature encoders for task examples and descriptions, a small tanh
//! network, and a bigram tensor over the library that reweights enumeration per task.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domains::Domain;
use crate::error::Error;
use crate::eval::evaluate;
use crate::grammar::{sample_program, Child, Grammar, GrammarLike, Parent, Step};
use crate::task::{Split, Task};
use crate::term::Term;
use crate::translation::{generate_description, Decode, SmoothedLm, TranslationTable};
use crate::types::PolyType;
use crate::util::{derive_seed, log_sum_exp, stable_hash};

/// Width of each encoder's output.
pub const EMBED: usize = 64;
pub const HIDDEN: usize = 64;
const UNIGRAM_BUCKETS: usize = 128;
const BIGRAM_BUCKETS: usize = 128;
/// Length of raw language features.
pub const LANGUAGE_FEATURES: usize = UNIGRAM_BUCKETS + BIGRAM_BUCKETS;
pub const LEARNING_RATE: f64 = 0.05;
pub const DEFAULT_STEPS: usize = 10_000;
const SAMPLE_DEPTH: usize = 8;
const SAMPLE_TRIES_PER_TASK: usize = 50;

/// A 64-dimensional encoding.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Hashed unigram and bigram counts. Words outside the vocabulary share unigram bucket 0.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LanguageEncoder {
    vocab: BTreeSet<String>,
}

impl LanguageEncoder {
    pub fn new(vocab: impl IntoIterator<Item = String>) -> Self {
        LanguageEncoder {
            vocab: vocab.into_iter().collect(),
        }
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    fn unigram_bucket(&self, w: &str) -> usize {
        if self.vocab.contains(w) {
            1 + (stable_hash(w.as_bytes()) % (UNIGRAM_BUCKETS as u64 - 1)) as usize
        } else {
            0
        }
    }

    fn known<'a>(&self, w: &'a str) -> &'a str {
        if self.vocab.contains(w) {
            w
        } else {
            "<unk>"
        }
    }

    /// Raw features of a description, before projection.
    pub fn features(&self, tokens: &[String]) -> Vec<f64> {
        let mut f = vec![0.0; LANGUAGE_FEATURES];
        for w in tokens {
            f[self.unigram_bucket(w)] += 1.0;
        }
        for pair in tokens.windows(2) {
            let key = format!("{} {}", self.known(&pair[0]), self.known(&pair[1]));
            f[UNIGRAM_BUCKETS + (stable_hash(key.as_bytes()) % BIGRAM_BUCKETS as u64) as usize] += 1.0;
        }
        f
    }
}

/// Dense affine map `y = W x + b`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Layer {
    rows: usize,
    cols: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Layer {
    fn zeros(rows: usize, cols: usize) -> Layer {
        Layer {
            rows,
            cols,
            w: vec![0.0; rows * cols],
            b: vec![0.0; rows],
        }
    }

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Layer {
        let scale = 1.0 / (cols.max(1) as f64).sqrt();
        let mut l = Layer::zeros(rows, cols);
        l.w.iter_mut().for_each(|x| *x = rng.gen_range(-scale..scale));
        l
    }

    fn row(&self, r: usize, x: &[f64]) -> f64 {
        self.b[r] + dot(&self.w[r * self.cols..(r + 1) * self.cols], x)
    }

    fn tanh(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r, x).tanh()).collect()
    }

    fn len(&self) -> usize {
        self.w.len() + self.b.len()
    }

    fn get(&self, i: usize) -> f64 {
        if i < self.w.len() {
            self.w[i]
        } else {
            self.b[i - self.w.len()]
        }
    }

    fn get_mut(&mut self, i: usize) -> &mut f64 {
        let n = self.w.len();
        if i < n {
            &mut self.w[i]
        } else {
            &mut self.b[i - n]
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Names of the parameter blocks, in storage order.
pub const BLOCKS: [&str; 4] = ["task", "language", "trunk", "output"];

/// One training target: raw features and the derivation of the program to imitate.
#[derive(Clone, Debug)]
pub struct Example {
    pub task: Vec<f64>,
    pub language: Option<Vec<f64>>,
    pub steps: Vec<Step>,
}

struct Activations {
    task: Vec<f64>,
    language: Vec<f64>,
    hidden: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecognitionModel {
    grammar_version: u64,
    productions: usize,
    arity: usize,
    seed: u64,
    encoder: LanguageEncoder,
    layers: [Layer; 4],
}

/// Tensor dimensions `(|L|+1, |L|+2, A)` for a grammar.
pub fn tensor_shape(grammar: &Grammar) -> (usize, usize, usize) {
    (grammar.len() + 1, grammar.len() + 2, grammar.max_arity())
}

impl RecognitionModel {
    /// A fresh model for `grammar`; the output layer starts at zero so every context is uniform.
    pub fn new(grammar: &Grammar, task_features: usize, encoder: LanguageEncoder, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, c, a) = tensor_shape(grammar);
        RecognitionModel {
            grammar_version: grammar.version(),
            productions: grammar.len(),
            arity: a,
            seed,
            encoder,
            layers: [
                Layer::random(EMBED, task_features, &mut rng),
                Layer::random(EMBED, LANGUAGE_FEATURES, &mut rng),
                Layer::random(HIDDEN, 2 * EMBED, &mut rng),
                Layer::zeros(p * c * a, HIDDEN),
            ],
        }
    }

    pub fn grammar_version(&self) -> u64 {
        self.grammar_version
    }

    pub fn encoder(&self) -> &LanguageEncoder {
        &self.encoder
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.productions + 1, self.productions + 2, self.arity)
    }

    /// Replaces the output layer with small random values, so that every block carries gradient.
    pub fn randomize_output(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = &mut self.layers[3];
        *out = Layer::random(out.rows, out.cols, &mut rng);
    }

    pub fn encode_task(&self, features: &[f64]) -> FeatureVector {
        FeatureVector(self.layers[0].tanh(features))
    }

    pub fn encode_language(&self, tokens: &[String]) -> FeatureVector {
        FeatureVector(self.layers[1].tanh(&self.encoder.features(tokens)))
    }

    fn forward(&self, task: &[f64], language: Option<&[f64]>) -> Activations {
        let t = self.layers[0].tanh(task);
        let l = match language {
            Some(x) => self.layers[1].tanh(x),
            None => vec![0.0; EMBED],
        };
        let joined: Vec<f64> = t.iter().chain(&l).copied().collect();
        Activations {
            hidden: self.layers[2].tanh(&joined),
            task: t,
            language: l,
        }
    }

    fn row(&self, parent: Parent, child: Child, slot: usize) -> usize {
        let n = self.productions;
        let p = match parent {
            Parent::Prod(i) => i,
            Parent::Root => n,
        };
        let c = match child {
            Child::Prod(i) => i,
            Child::Var(_) => n,
        };
        (p * (n + 2) + c) * self.arity + slot.min(self.arity - 1)
    }

    /// Bigram tensor for one task. `language` is `None` to condition on examples only.
    pub fn predict(
        &self,
        grammar: &Arc<Grammar>,
        task_features: &[f64],
        language: Option<&[String]>,
    ) -> Result<BigramTensor, Error> {
        if grammar.version() != self.grammar_version || grammar.len() != self.productions {
            return Err(Error::VersionMismatch {
                model: self.grammar_version,
                grammar: grammar.version(),
            });
        }
        let lang = language.map(|d| self.encoder.features(d));
        let act = self.forward(task_features, lang.as_deref());
        let out = &self.layers[3];
        Ok(BigramTensor {
            grammar: grammar.clone(),
            logits: (0..out.rows).map(|r| out.row(r, &act.hidden)).collect(),
            shape: self.shape(),
        })
    }

    /// Builds a training example from a program that derives under the model's grammar.
    pub fn example(
        &self,
        grammar: &Grammar,
        task_features: Vec<f64>,
        language: Option<&[String]>,
        program: &Term,
        request: &PolyType,
    ) -> Result<Example, Error> {
        Ok(Example {
            task: task_features,
            language: language.map(|d| self.encoder.features(d)),
            steps: grammar.derivation(program, request)?,
        })
    }

    /// Negative log-likelihood of the example's derivation.
    pub fn loss(&self, ex: &Example) -> f64 {
        let act = self.forward(&ex.task, ex.language.as_deref());
        ex.steps.iter().map(|s| self.step_loss(s, &act.hidden).0).sum()
    }

    /// Loss of one step and `∂loss/∂logit` for each output row it touches.
    fn step_loss(&self, s: &Step, hidden: &[f64]) -> (f64, Vec<(usize, f64)>) {
        let out = &self.layers[3];
        let split = (s.var_count.max(1) as f64).ln();
        let rows: Vec<usize> = s.legal.iter().map(|&c| self.row(s.parent, c, s.slot)).collect();
        let scores: Vec<f64> = rows
            .iter()
            .zip(&s.legal)
            .map(|(&r, c)| out.row(r, hidden) - if matches!(c, Child::Var(_)) { split } else { 0.0 })
            .collect();
        let z = log_sum_exp(&scores);
        let mut grads: Vec<(usize, f64)> = Vec::with_capacity(rows.len());
        for (k, (&r, sc)) in rows.iter().zip(&scores).enumerate() {
            let g = (sc - z).exp() - f64::from(k == s.chosen);
            match grads.iter_mut().find(|(row, _)| *row == r) {
                Some(e) => e.1 += g,
                None => grads.push((r, g)),
            }
        }
        (z - scores[s.chosen], grads)
    }

    /// Loss and gradient for every parameter, block by block (weights then biases).
    fn gradient(&self, ex: &Example) -> (f64, [Layer; 4]) {
        let act = self.forward(&ex.task, ex.language.as_deref());
        let mut grads = self.layers.clone().map(|l| Layer::zeros(l.rows, l.cols));
        let mut loss = 0.0;
        let mut dh = vec![0.0; HIDDEN];
        for s in &ex.steps {
            let (l, gs) = self.step_loss(s, &act.hidden);
            loss += l;
            for (r, g) in gs {
                let w = &self.layers[3].w[r * HIDDEN..(r + 1) * HIDDEN];
                let gw = &mut grads[3].w[r * HIDDEN..(r + 1) * HIDDEN];
                for k in 0..HIDDEN {
                    gw[k] += g * act.hidden[k];
                    dh[k] += g * w[k];
                }
                grads[3].b[r] += g;
            }
        }
        let joined: Vec<f64> = act.task.iter().chain(&act.language).copied().collect();
        let mut d_joined = vec![0.0; 2 * EMBED];
        for r in 0..HIDDEN {
            let d = dh[r] * (1.0 - act.hidden[r] * act.hidden[r]);
            grads[2].b[r] += d;
            let w = &self.layers[2].w[r * 2 * EMBED..(r + 1) * 2 * EMBED];
            let gw = &mut grads[2].w[r * 2 * EMBED..(r + 1) * 2 * EMBED];
            for k in 0..2 * EMBED {
                gw[k] += d * joined[k];
                d_joined[k] += d * w[k];
            }
        }
        let inputs: [(&[f64], &[f64]); 2] = [
            (&ex.task, &act.task),
            (ex.language.as_deref().unwrap_or(&[]), &act.language),
        ];
        for (block, (x, y)) in inputs.into_iter().enumerate() {
            if x.is_empty() {
                continue;
            }
            let cols = self.layers[block].cols;
            for r in 0..EMBED {
                let d = d_joined[block * EMBED + r] * (1.0 - y[r] * y[r]);
                if d == 0.0 {
                    continue;
                }
                grads[block].b[r] += d;
                for (gw, xi) in grads[block].w[r * cols..(r + 1) * cols].iter_mut().zip(x) {
                    *gw += d * xi;
                }
            }
        }
        (loss, grads)
    }

    fn sgd(&mut self, grads: &[Layer; 4], lr: f64) {
        for (l, g) in self.layers.iter_mut().zip(grads) {
            l.w.iter_mut().zip(&g.w).for_each(|(w, d)| *w -= lr * d);
            l.b.iter_mut().zip(&g.b).for_each(|(b, d)| *b -= lr * d);
        }
    }

    /// Plain SGD with batch size one. Each step draws from `supervised` or `dreams` with equal
    /// probability (or from whichever is non-empty). Returns the mean loss of the last 100 steps.
    pub fn train(&mut self, supervised: &[Example], dreams: &[Example], steps: usize, seed: u64, lr: f64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut recent = std::collections::VecDeque::with_capacity(100);
        for _ in 0..steps {
            let pool = match (supervised.is_empty(), dreams.is_empty()) {
                (true, true) => return 0.0,
                (false, true) => supervised,
                (true, false) => dreams,
                (false, false) => {
                    if rng.gen_bool(0.5) {
                        supervised
                    } else {
                        dreams
                    }
                }
            };
            let ex = &pool[rng.gen_range(0..pool.len())];
            let (loss, grads) = self.gradient(ex);
            self.sgd(&grads, lr);
            if recent.len() == 100 {
                recent.pop_front();
            }
            recent.push_back(loss);
        }
        recent.iter().sum::<f64>() / recent.len().max(1) as f64
    }

    /// Largest relative error between analytic and central-difference gradients over a seeded
    /// sample of `per_block` parameters from each block.
    pub fn gradient_check(&self, ex: &Example, per_block: usize, seed: u64) -> f64 {
        let (_, grads) = self.gradient(ex);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for block in 0..4 {
            if block == 1 && ex.language.is_none() {
                continue;
            }
            let n = self.layers[block].len();
            for _ in 0..per_block.min(n) {
                let i = rng.gen_range(0..n);
                let mut plus = self.clone();
                *plus.layers[block].get_mut(i) += h;
                let mut minus = self.clone();
                *minus.layers[block].get_mut(i) -= h;
                let numeric = (plus.loss(ex) - minus.loss(ex)) / (2.0 * h);
                let analytic = grads[block].get(i);
                let scale = numeric.abs().max(analytic.abs()).max(1e-6);
                worst = worst.max((numeric - analytic).abs() / scale);
            }
        }
        worst
    }

    /// Text checkpoint: header then one line per block with shape and values, round-trip exact.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "grammar_version {} productions {} arity {} seed {}",
            self.grammar_version, self.productions, self.arity, self.seed
        );
        let _ = writeln!(s, "vocab {}", self.encoder.vocab.iter().cloned().collect::<Vec<_>>().join(" "));
        for (name, l) in BLOCKS.iter().zip(&self.layers) {
            let _ = write!(s, "{name} {} {}", l.rows, l.cols);
            for v in l.w.iter().chain(&l.b) {
                let _ = write!(s, " {v:.16e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<RecognitionModel, Error> {
        let bad = |what: &str| Error::Data(format!("bad recognition checkpoint: {what}"));
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split(' ').collect();
        let num = |i: usize| -> Result<u64, Error> {
            header.get(i).and_then(|x| x.parse().ok()).ok_or_else(|| bad("header"))
        };
        let (grammar_version, productions, arity, seed) = (num(1)?, num(3)? as usize, num(5)? as usize, num(7)?);
        let vocab = lines
            .next()
            .and_then(|l| l.strip_prefix("vocab"))
            .ok_or_else(|| bad("vocab"))?
            .split_whitespace()
            .map(String::from);
        let encoder = LanguageEncoder::new(vocab);
        let mut layers = Vec::new();
        for name in BLOCKS {
            let line = lines.next().ok_or_else(|| bad(name))?;
            let mut f = line.split(' ');
            if f.next() != Some(name) {
                return Err(bad(name));
            }
            let rows: usize = f.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad(name))?;
            let cols: usize = f.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad(name))?;
            let vals: Vec<f64> = f.map(|x| x.parse().map_err(|_| bad(name))).collect::<Result<_, _>>()?;
            if vals.len() != rows * cols + rows {
                return Err(bad(name));
            }
            layers.push(Layer {
                rows,
                cols,
                w: vals[..rows * cols].to_vec(),
                b: vals[rows * cols..].to_vec(),
            });
        }
        let layers: [Layer; 4] = layers.try_into().map_err(|_| bad("blocks"))?;
        Ok(RecognitionModel {
            grammar_version,
            productions,
            arity,
            seed,
            encoder,
            layers,
        })
    }
}

/// Per-task conditional distribution: logits indexed by (parent, child, argument slot).
#[derive(Clone, Debug)]
pub struct BigramTensor {
    grammar: Arc<Grammar>,
    logits: Vec<f64>,
    shape: (usize, usize, usize),
}

impl BigramTensor {
    pub fn shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    pub fn get(&self, parent: Parent, child: Child, slot: usize) -> f64 {
        let (_, c, a) = self.shape;
        let n = c - 2;
        let p = match parent {
            Parent::Prod(i) => i,
            Parent::Root => n,
        };
        let k = match child {
            Child::Prod(i) => i,
            Child::Var(_) => n,
        };
        self.logits[(p * c + k) * a + slot.min(a - 1)]
    }
}

impl GrammarLike for BigramTensor {
    fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    fn log_weight(&self, parent: Parent, slot: usize, child: Child) -> f64 {
        self.get(parent, child, slot)
    }
}

/// A task drawn from the generative model, with its description and generating program.
#[derive(Clone, Debug)]
pub struct JointSample<D> {
    pub task: Task<D>,
    pub description: Vec<String>,
    pub program: Term,
}

/// Samples from the joint model, and whether the retry budget ran out before `n`.
pub struct JointSamples<D> {
    pub samples: Vec<JointSample<D>>,
    pub exhausted: bool,
}

/// Draws programs from the prior, runs them on sampled inputs, and describes them with the
/// translation model (`None` leaves descriptions empty).
pub fn sample_joint<Dm: Domain>(
    grammar: &Grammar,
    language: Option<(&TranslationTable, &SmoothedLm)>,
    domain: &Dm,
    n: usize,
    seed: u64,
) -> JointSamples<Dm::Data> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let request = domain.request();
    let limit = domain.eval_limit();
    let mut samples = Vec::with_capacity(n);
    let mut tries = 0;
    while samples.len() < n && tries < n * SAMPLE_TRIES_PER_TASK {
        tries += 1;
        let Some(program) = sample_program(grammar, &request, &mut rng, SAMPLE_DEPTH) else {
            continue;
        };
        let inputs = domain.sample_inputs(&mut rng, domain.sample_example_count());
        let examples: Option<Vec<_>> = inputs
            .into_iter()
            .map(|i| {
                evaluate(&program, &i, domain, grammar.inventions(), limit)
                    .ok()
                    .map(|o| (i, o))
            })
            .collect();
        let Some(examples) = examples else { continue };
        if !domain.accept_sample(&examples) {
            continue;
        }
        let k = samples.len() as u64;
        let description = match language {
            Some((table, lm)) if !table.is_empty() => {
                generate_description(&program, table, lm, Decode::Sample, derive_seed(seed, "describe", k))
            }
            _ => Vec::new(),
        };
        samples.push(JointSample {
            task: Task {
                id: format!("sample-{k}"),
                request: request.clone(),
                examples,
                description: Some(description.clone()),
                split: Split::Train,
            },
            description,
            program,
        });
    }
    JointSamples {
        exhausted: samples.len() < n,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Grammar {
        let t = |s: &str| PolyType::parse(s).unwrap();
        Grammar::new(vec![
            ("f".into(), t("int → int")),
            ("g".into(), t("int → int → int")),
            ("z".into(), t("int")),
        ])
    }

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn untrained_model_is_uniform() {
        let g = Arc::new(toy());
        let m = RecognitionModel::new(&g, 3, LanguageEncoder::default(), 1);
        let tensor = m.predict(&g, &[0.5, -1.0, 2.0], None).unwrap();
        assert_eq!(tensor.shape(), (4, 5, 2));
        let p = Term::parse("(f z)").unwrap();
        let request = PolyType::parse("int").unwrap();
        let lp = crate::grammar::log_prob_under(&tensor, &p, &request).unwrap();
        let prior = g.log_prior(&p, &request).unwrap();
        assert!((lp - prior).abs() < 1e-12);
    }

    #[test]
    fn version_mismatch_is_an_error() {
        let g = toy();
        let m = RecognitionModel::new(&g, 3, LanguageEncoder::default(), 1);
        let g2 = Arc::new(g.with_weights(&[0.0; 3], 0.0));
        assert!(matches!(m.predict(&g2, &[0.0; 3], None), Err(Error::VersionMismatch { .. })));
    }

    #[test]
    fn language_features() {
        let enc = LanguageEncoder::new(words("double every letter"));
        assert!(enc.features(&[]).iter().all(|x| *x == 0.0));
        let a = enc.features(&words("double every letter"));
        let b = enc.features(&words("letter every double"));
        assert_eq!(a[..UNIGRAM_BUCKETS], b[..UNIGRAM_BUCKETS]);
        assert_ne!(a[UNIGRAM_BUCKETS..], b[UNIGRAM_BUCKETS..]);
        let unk = enc.features(&words("zebra"));
        assert_eq!(unk[0], 1.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let g = toy();
        let mut m = RecognitionModel::new(&g, 3, LanguageEncoder::new(words("a b")), 3);
        m.randomize_output(4);
        let ex = m
            .example(
                &g,
                vec![0.3, -0.2, 0.9],
                Some(&words("a b a")),
                &Term::parse("(lambda (g (f $0) z))").unwrap(),
                &PolyType::parse("int → int").unwrap(),
            )
            .unwrap();
        assert!(m.gradient_check(&ex, 40, 5) < 1e-4);
    }

    #[test]
    fn checkpoint_round_trip() {
        let g = toy();
        let mut m = RecognitionModel::new(&g, 3, LanguageEncoder::new(words("a b")), 3);
        m.randomize_output(9);
        let back = RecognitionModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
    }
}
