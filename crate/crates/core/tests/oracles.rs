//! Hand-computed and brute-force reference values for individual operations.

use std::sync::Arc;

use langsynth_core::compression::{baseline_objective, propose, rewrite, score, CompressionParams};
use langsynth_core::dataset;
use langsynth_core::domains::graphics::{GValue, Graphics, Turtle};
use langsynth_core::domains::strings::{StrValue, Strings};
use langsynth_core::domains::Domain;
use langsynth_core::eval::{evaluate, Inventions};
use langsynth_core::grammar::{Child, Grammar, Parent};
use langsynth_core::recognition::{sample_joint, LanguageEncoder, RecognitionModel};
use langsynth_core::search::{solve_task, Frontier, FrontierEntry, SearchBudget};
use langsynth_core::task::{check_task, Split, Task};
use langsynth_core::term::Term;
use langsynth_core::translation::{
    generate_description, linearize, train_em, Decode, SmoothedLm, TranslationParams, TranslationTable,
};
use langsynth_core::types::{PolyType, TypeContext};

fn ty(s: &str) -> PolyType {
    PolyType::parse(s).unwrap()
}

fn term(s: &str) -> Term {
    Term::parse(s).unwrap()
}

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn frontier(grammar: &Grammar, id: &str, request: &PolyType, programs: &[&str]) -> Frontier {
    let mut f = Frontier::empty(id, request.clone(), 5);
    f.merge(programs.iter().map(|p| {
        let program = term(p);
        let lp = grammar.log_prior(&program, request).unwrap();
        FrontierEntry {
            program,
            log_prior: lp,
            log_posterior: lp,
        }
    }));
    f
}

fn int_grammar() -> Grammar {
    Grammar::new(vec![
        ("f".into(), ty("int → int")),
        ("g".into(), ty("int → int")),
        ("a".into(), ty("int")),
        ("b".into(), ty("int")),
        ("c".into(), ty("int")),
        ("h".into(), ty("int → int → int")),
    ])
}

fn str_task(inputs: &[&str], f: impl Fn(&str) -> String) -> Task<StrValue> {
    Task {
        id: "t".into(),
        request: ty("fullstr → fullstr"),
        examples: inputs
            .iter()
            .map(|i| (vec![StrValue::str(i)], StrValue::str(&f(i))))
            .collect(),
        description: None,
        split: Split::Train,
    }
}

#[test]
fn substr_is_not_bool() {
    let g = Strings::default().initial_grammar();
    assert!(TypeContext::new().unify(&ty("int"), &ty("substr")).is_err());
    assert!(g
        .infer_type(&term("(lambda (flatten (cons (match a b) (regexsplit dot $0))))"))
        .is_err());
}

#[test]
fn nested_beta_reduction() {
    let r = term("((lambda (lambda ($1 $0))) f a)").beta_reduce(100);
    assert!(r.normal);
    assert_eq!(r.term, term("(f a)"));
}

#[test]
fn bool_requests_admit_match_but_not_cons() {
    let g = Strings::default().initial_grammar();
    let legal: Vec<&str> = g
        .legal_productions(&mut TypeContext::new(), &ty("bool"))
        .into_iter()
        .filter_map(|c| match c {
            Child::Prod(i) => Some(&*g.productions()[i].name),
            Child::Var(_) => None,
        })
        .collect();
    assert!(legal.contains(&"match"));
    assert!(!legal.contains(&"cons"));
}

#[test]
fn weight_fit_follows_counts() {
    let g = Grammar::new(vec![("p".into(), ty("int → int")), ("q".into(), ty("int → int"))]);
    let request = ty("int → int");
    let frontiers = [frontier(&g, "t", &request, &["(lambda (p (p (q $0))))"])];
    let share = |pseudo: f64| {
        let fit = g.fit_weights(&frontiers, pseudo);
        let (p, q) = (fit.get("p").unwrap().log_weight, fit.get("q").unwrap().log_weight);
        p.exp() / (p.exp() + q.exp())
    };
    assert!((share(1e-9) - 2.0 / 3.0).abs() < 1e-6);
    assert!((share(1e9) - 0.5).abs() < 1e-6);
}

#[test]
fn six_node_program_is_found() {
    let domain = Strings::new(8);
    let task = str_task(&["abc", "hello", "x", "zz", "carrot"], |s| format!("a{s}"));
    let g = domain.initial_grammar();
    let f = solve_task(&task, &g, &g, &domain, SearchBudget::default(), 1, domain.eval_limit());
    assert!(!f.is_empty());
    assert!(f.best().unwrap().program.size() <= 6);
}

#[test]
fn shared_context_becomes_a_candidate() {
    let g = int_grammar();
    let request = ty("int");
    let frontiers = [
        frontier(&g, "1", &request, &["(f (g a))"]),
        frontier(&g, "2", &request, &["(f (g b))"]),
    ];
    let cands = propose(&frontiers, &CompressionParams::default());
    let c = cands
        .iter()
        .find(|c| c.body == term("(lambda (f (g $0)))"))
        .expect("candidate proposed");
    assert_eq!(c.sites.len(), 2);
}

#[test]
fn accepting_a_shared_subtree_lowers_description_length() {
    let g = int_grammar();
    let request = ty("int");
    let shared = "(h (f (g a)) b)";
    let frontiers: Vec<Frontier> = ["a", "b", "c", "(f c)"]
        .iter()
        .enumerate()
        .map(|(i, x)| frontier(&g, &i.to_string(), &request, &[&format!("(h {shared} {x})")]))
        .collect();
    let params = CompressionParams {
        translation_weight: 0.0,
        ..CompressionParams::default()
    };
    let table = TranslationTable::default();
    let cand = propose(&frontiers, &params)
        .into_iter()
        .find(|c| c.body == term(shared))
        .expect("shared subtree proposed");
    let with = score(&cand, &frontiers, &g, &table, &params).expect("candidate applies");
    let without = baseline_objective(&frontiers, &g, &table, &params);
    assert!(with.total() < without.total());
}

#[test]
fn rewriting_one_site_saves_body_minus_arity_minus_one() {
    let domain = Strings::default();
    let g0 = domain.initial_grammar();
    let request = domain.request();
    let body = term("(lambda (lambda (flatten (cons $1 (regexsplit dot $0)))))");
    let program = term("(lambda (flatten (cons a (regexsplit dot $0))))");
    let frontiers = [
        frontier(&g0, "1", &request, &["(lambda (flatten (cons a (regexsplit dot $0))))"]),
        frontier(&g0, "2", &request, &["(lambda (flatten (cons b (regexsplit dot $0))))"]),
    ];
    let cand = propose(&frontiers, &CompressionParams::default())
        .into_iter()
        .find(|c| c.body == body)
        .expect("planted body proposed");
    let (g1, name) = g0.with_invention(body.clone()).unwrap();
    let rewritten = rewrite(&program, &name, &cand, &g1, &request);
    assert_eq!(rewritten, term(&format!("(lambda ({name} a $0))")));
    assert_eq!(program.size() - rewritten.size(), body.size() - cand.arity - 1);
}

#[test]
fn extra_poorly_aligned_word_lowers_the_score() {
    let pairs = [(toks("f a"), toks("red one")), (toks("g a"), toks("blue one")), (toks("f"), toks("red"))];
    let table = train_em(&pairs, &TranslationParams::default());
    let program = term("(f a)");
    let base = table.score_description(&toks("red one"), &program);
    let more = table.score_description(&toks("red one blue"), &program);
    assert!(more < base);
}

#[test]
fn aligned_word_dominates_generated_descriptions() {
    let pairs: Vec<(Vec<String>, Vec<String>)> = (0..12)
        .map(|i| {
            if i % 3 == 0 {
                (toks("#0 a"), toks("gon small"))
            } else if i % 3 == 1 {
                (toks("#0 b"), toks("gon big"))
            } else {
                (toks("f a"), toks("line small"))
            }
        })
        .collect();
    let table = train_em(&pairs, &TranslationParams::default());
    let lm = SmoothedLm::train(pairs.iter().map(|(_, w)| w.as_slice()), 0.1);
    let program = term("(#0 b)");
    let hits = (0..100)
        .filter(|&s| generate_description(&program, &table, &lm, Decode::Sample, s).contains(&"gon".to_string()))
        .count();
    assert!(hits > 90, "{hits}");
}

#[test]
fn description_length_matches_direct_sum() {
    let pairs = [
        (toks("f a"), toks("red one")),
        (toks("g a"), toks("blue one")),
        (toks("f b"), toks("red two")),
    ];
    let table = train_em(&pairs, &TranslationParams::default());
    let mut direct = 0.0;
    for l in ["f", "g", "a", "b"] {
        for w in ["red", "blue", "one", "two"] {
            let c = table.count(l, w);
            if c > 0.0 {
                direct -= c * table.word_given_token(l, w).ln();
            }
        }
    }
    assert!((table.description_length() - direct).abs() < 1e-9);
}

#[test]
fn refactoring_collapses_a_word_aligned_to_both_components() {
    let table = TranslationTable::from_counts([("f", "w", 1.0), ("g", "w", 1.0), ("f", "v", 1.0)]);
    let parts: Vec<Arc<str>> = vec![Arc::from("f"), Arc::from("g")];
    assert!(table.refactored_description_length(&parts) < table.description_length());
}

#[test]
fn one_changed_output_character_changes_task_features() {
    let d = Strings::default();
    let a = str_task(&["abc", "dog"], |s| format!("{s}x"));
    let mut b = a.clone();
    b.examples[1].1 = StrValue::str("dogy");
    assert_ne!(d.task_features(&a), d.task_features(&b));
    assert_eq!(d.task_features(&a), d.task_features(&a.clone()));
}

#[test]
fn appending_x_raises_the_x_count_feature() {
    let d = Strings::default();
    let t = str_task(&["abc", "dog", "tree"], |s| s.chars().flat_map(|c| [c, 'x']).collect());
    assert!(d.task_features(&t)[(b'x' - b'a') as usize] > 0.0);
}

#[test]
fn disjoint_descriptions_have_orthogonal_raw_features() {
    let enc = LanguageEncoder::new(toks("red circle blue square"));
    let a = enc.features(&toks("red circle"));
    let b = enc.features(&toks("blue square"));
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    assert_eq!(dot, 0.0);
    assert!(enc.features(&[]).iter().all(|&x| x == 0.0));
}

#[test]
fn cue_word_raises_its_primitive_at_the_root() {
    let g = Grammar::new(vec![
        ("dbl".into(), ty("int → int")),
        ("inc".into(), ty("int → int")),
        ("z".into(), ty("int")),
    ]);
    let request = ty("int → int");
    let mut m = RecognitionModel::new(&g, 2, LanguageEncoder::new(toks("double add one")), 7);
    let feats = vec![0.3, -0.3];
    let examples: Vec<_> = [("double it", "(lambda (dbl $0))"), ("add one", "(lambda (inc $0))")]
        .iter()
        .flat_map(|(d, p)| {
            [Some(toks(d)), None]
                .into_iter()
                .map(|lang| m.example(&g, feats.clone(), lang.as_deref(), &term(p), &request).unwrap())
                .collect::<Vec<_>>()
        })
        .collect();
    m.train(&examples, &[], 2000, 1, 0.05);
    let grammar = Arc::new(g.clone());
    let dbl = g.index_of("dbl").unwrap();
    let root_prob = |lang: Option<&[String]>| {
        let t = m.predict(&grammar, &feats, lang).unwrap();
        let legal = [
            Child::Prod(dbl),
            Child::Prod(g.index_of("inc").unwrap()),
            Child::Prod(g.index_of("z").unwrap()),
            Child::Var(0),
        ];
        let z: f64 = legal.iter().map(|&c| t.get(Parent::Root, c, 0).exp()).sum();
        t.get(Parent::Root, Child::Prod(dbl), 0).exp() / z
    };
    let cue = toks("double it");
    assert!(root_prob(Some(&cue)) > root_prob(None));
}

#[test]
fn single_example_is_fit_within_two_thousand_steps() {
    let g = Grammar::new(vec![
        ("f".into(), ty("int → int")),
        ("g".into(), ty("int → int → int")),
        ("z".into(), ty("int")),
    ]);
    let mut m = RecognitionModel::new(&g, 3, LanguageEncoder::default(), 2);
    let ex = m
        .example(&g, vec![0.1, 0.2, 0.3], None, &term("(lambda (g (f $0) z))"), &ty("int → int"))
        .unwrap();
    m.train(std::slice::from_ref(&ex), &[], 2000, 3, 0.05);
    assert!(m.loss(&ex) < 0.01, "{}", m.loss(&ex));
}

#[test]
fn sampled_descriptions_use_known_words() {
    let domain = Strings::new(5);
    let data = dataset::generate(&domain, 40, 0, 2);
    let pairs: Vec<(Vec<String>, Vec<String>)> = data
        .train
        .iter()
        .map(|t| (linearize(&data.solutions[&t.id]), t.description_tokens().to_vec()))
        .collect();
    let table = train_em(&pairs, &TranslationParams::default());
    let lm = SmoothedLm::train(pairs.iter().map(|(_, w)| w.as_slice()), 0.1);
    let out = sample_joint(&domain.initial_grammar(), Some((&table, &lm)), &domain, 60, 4);
    let known = table.known_words();
    let with_known = out
        .samples
        .iter()
        .filter(|s| s.description.iter().any(|w| known.contains(w)))
        .count();
    assert!(!out.samples.is_empty());
    assert!(2 * with_known >= out.samples.len(), "{with_known} of {}", out.samples.len());
}

#[test]
fn string_primitive_glosses() {
    let d = Strings::default();
    let run = |src: &str, args: &[&str]| {
        let inputs: Vec<StrValue> = args.iter().map(|a| StrValue::str(a)).collect();
        evaluate(&term(src), &inputs, &d, &Inventions::new(), d.eval_limit()).unwrap()
    };
    let parts = run("(lambda (regexsplit b $0))", &["abc"]);
    assert_eq!(
        parts,
        StrValue::List(vec![StrValue::str("a"), StrValue::str("b"), StrValue::str("c")].into())
    );
    assert_eq!(run("(lambda (flatten (regexsplit b $0)))", &["abc"]), StrValue::str("abc"));
    assert_eq!(run("(match dot x)", &[]), StrValue::Bool(true));
}

#[test]
fn small_triangle_closes_with_three_segments() {
    let out = evaluate(
        &term("(lambda (for 3 (lambda (move_pen unit_line (/ 2π 3) $0)) $0))"),
        &[GValue::Turtle(Arc::new(Turtle::start()))],
        &Graphics,
        &Inventions::new(),
        Graphics.eval_limit(),
    )
    .unwrap();
    let GValue::Turtle(t) = out else { panic!("expected a turtle") };
    assert_eq!(t.segments.len(), 3);
    assert_eq!(t.segments[0][..2], t.segments[2][2..]);
    assert!(t.x.abs() < 1e-9 && t.y.abs() < 1e-9);
}

#[test]
fn seeded_sampling_is_reproducible() {
    let d = Strings::new(4);
    let g = d.initial_grammar();
    let a = sample_joint(&g, None, &d, 20, 11);
    let b = sample_joint(&g, None, &d, 20, 11);
    let progs = |s: &langsynth_core::recognition::JointSamples<StrValue>| {
        s.samples.iter().map(|x| x.program.to_string()).collect::<Vec<_>>()
    };
    assert_eq!(progs(&a), progs(&b));
    assert!(a
        .samples
        .iter()
        .all(|s| check_task(&s.program, &s.task, &d, g.inventions(), d.eval_limit())));
}
