use std::collections::HashSet;
use std::ops::ControlFlow;

use langsynth_core::compression::{compress, CompressionParams};
use langsynth_core::domains::strings::{StrValue, Strings};
use langsynth_core::domains::Domain;
use langsynth_core::eval::{evaluate, Inventions};
use langsynth_core::grammar::{sample_program, Grammar};
use langsynth_core::search::{enumerate, Frontier, FrontierEntry, SearchBudget};
use langsynth_core::task::{check_task, Split, Task};
use langsynth_core::term::Term;
use langsynth_core::translation::{delinearize, linearize, train_em, TranslationParams, TranslationTable};
use langsynth_core::types::PolyType;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ty(s: &str) -> PolyType {
    PolyType::parse(s).unwrap()
}

fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["f", "g", "car", "2π", "#0", "a"]).prop_map(Term::prim),
        (0usize..4).prop_map(Term::Var),
    ];
    leaf.prop_recursive(5, 40, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Term::abs),
            (inner.clone(), inner).prop_map(|(f, x)| Term::app(f, x)),
        ]
    })
    .prop_map(|body| (0..4).fold(body, |t, _| Term::abs(t)))
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, n)
}

fn toy() -> Grammar {
    Grammar::new(vec![
        ("z".into(), ty("int")),
        ("s".into(), ty("int → int")),
        ("p".into(), ty("int → int → int")),
        ("nil".into(), ty("list(t0)")),
        ("cons".into(), ty("t0 → list(t0) → list(t0)")),
        ("len".into(), ty("list(t0) → int")),
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printing_then_parsing_is_identity(t in arb_term()) {
        prop_assert_eq!(Term::parse(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn sampled_programs_linearize_and_score(seed in any::<u64>(), w in weights(43), v in -2.0f64..2.0) {
        let d = Strings::default();
        let g0 = d.initial_grammar();
        let g = g0.with_weights(&w[..g0.len()], v);
        let request = d.request();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Some(p) = sample_program(&g, &request, &mut rng, 8) {
            prop_assert_eq!(delinearize(&linearize(&p), &g, &request).unwrap(), p.clone());
            let steps = g.derivation(&p, &request).unwrap();
            let by_steps: f64 = steps.iter().map(|s| s.log_prob(&g)).sum();
            let prior = g.log_prior(&p, &request).unwrap();
            prop_assert!(prior.is_finite() && prior <= 0.0);
            prop_assert!((prior - by_steps).abs() < 1e-9);
        }
    }

    #[test]
    fn enumeration_is_ordered_and_scored_by_the_prior(w in weights(6), v in -2.0f64..2.0, req in 0usize..3) {
        let g = toy().with_weights(&w, v);
        let request = ty(["int", "int → int", "list(int) → int"][req]);
        let mut out: Vec<(Term, f64)> = Vec::new();
        enumerate(&g, &request, SearchBudget::new(200_000).unwrap(), |t, lp| {
            out.push((t.clone(), lp));
            if out.len() >= 150 { ControlFlow::Break(()) } else { ControlFlow::Continue(()) }
        });
        prop_assert!(!out.is_empty());
        let mut seen = HashSet::new();
        for pair in out.windows(2) {
            prop_assert!(pair[1].1 <= pair[0].1 + 1e-9);
        }
        for (t, lp) in &out {
            prop_assert!(seen.insert(t.to_string()));
            prop_assert!((g.log_prior(t, &request).unwrap() - lp).abs() < 1e-9);
        }
    }

    #[test]
    fn em_never_lowers_the_likelihood(
        corpus in prop::collection::vec(
            (prop::collection::vec(0usize..5, 1..4), prop::collection::vec(0usize..6, 1..5)),
            1..20,
        )
    ) {
        let pairs: Vec<(Vec<String>, Vec<String>)> = corpus
            .iter()
            .map(|(l, w)| {
                (l.iter().map(|i| format!("p{i}")).collect(), w.iter().map(|i| format!("w{i}")).collect())
            })
            .collect();
        let table = train_em(&pairs, &TranslationParams { em_iterations: 10, ..TranslationParams::default() });
        for pair in table.log_likelihoods().windows(2) {
            prop_assert!(pair[1] >= pair[0] - 1e-9);
        }
    }

    #[test]
    fn mutual_exclusivity_prefers_the_rarest_primitive(w in weights(3)) {
        let base = Grammar::new(vec![
            ("p".into(), ty("int")),
            ("q".into(), ty("int")),
            ("r".into(), ty("int")),
        ]);
        let g = base.with_weights(&w, 0.0);
        let me = TranslationTable::default().apply_mutual_exclusivity(&g, ["new"], 0.1);
        let rarest = g
            .productions()
            .iter()
            .min_by(|a, b| a.log_weight.total_cmp(&b.log_weight))
            .unwrap()
            .name
            .to_string();
        for p in ["p", "q", "r"] {
            prop_assert!(me.token_given_word("new", &rarest) >= me.token_given_word("new", p) - 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn compression_preserves_task_solutions(
        letters in prop::collection::vec(prop::sample::select(vec!['a', 'e', 'k', 'o', 'x', 'z']), 4..9),
        shapes in prop::collection::vec(0usize..3, 4..9),
        seed in any::<u64>(),
    ) {
        let domain = Strings::new(4);
        let grammar = domain.initial_grammar();
        let request = domain.request();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tasks = Vec::new();
        let mut frontiers = Vec::new();
        for (i, (c, shape)) in letters.iter().zip(&shapes).enumerate() {
            let src = match shape {
                0 => format!("(lambda (flatten (cons {c} (regexsplit dot $0))))"),
                1 => format!("(lambda (flatten (append {c} (cdr (regexsplit dot $0)))))"),
                _ => format!("(lambda (flatten (cons {c} (revcdr (regexsplit dot $0)))))"),
            };
            let program = Term::parse(&src).unwrap();
            let examples: Vec<(Vec<StrValue>, StrValue)> = domain
                .sample_inputs(&mut rng, 4)
                .into_iter()
                .map(|inp| {
                    let out = evaluate(&program, &inp, &domain, &Inventions::new(), domain.eval_limit()).unwrap();
                    (inp, out)
                })
                .collect();
            let task = Task { id: format!("t{i}"), request: request.clone(), examples, description: None, split: Split::Train };
            let lp = grammar.log_prior(&program, &request).unwrap();
            let mut f = Frontier::empty(task.id.clone(), request.clone(), 3);
            f.merge([FrontierEntry { program, log_prior: lp, log_posterior: lp }]);
            frontiers.push(f);
            tasks.push(task);
        }
        let params = CompressionParams { translation_weight: 0.0, ..CompressionParams::default() };
        let result = compress(&frontiers, &grammar, &TranslationTable::default(), &params);
        prop_assert!(result.objective_after.total() <= result.objective_before.total() + 1e-9);
        for (f, t) in result.frontiers.iter().zip(&tasks) {
            prop_assert!(!f.is_empty());
            for e in &f.entries {
                prop_assert!(check_task(&e.program, t, &domain, result.grammar.inventions(), domain.eval_limit()));
                let inlined = e.program.inline(result.grammar.inventions()).beta_reduce(10_000);
                prop_assert!(inlined.normal);
                prop_assert!(check_task(&inlined.term, t, &domain, &Inventions::new(), domain.eval_limit()));
            }
        }
    }
}
