mod common;

use std::sync::Arc;

use ltlf_bt::ltlf::{
    evaluate, parse_formula, Alphabet, CompiledFormula, Formula, StateVector, Trace,
};
use ltlf_bt::mission::{expand_task, PpaTaskSpec, ACTION_PREFIX};
use ltlf_bt::verify::enumerate_language;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ATOMS: [&str; 3] = ["a", "b", "c"];

fn abc() -> Arc<Alphabet> {
    Arc::new(Alphabet::new(ATOMS).unwrap())
}

/// All traces of length 1..=max_len over `alphabet`, in the oracle's own order.
fn all_traces(alphabet: &Arc<Alphabet>, max_len: usize) -> Vec<Trace> {
    let mut out = Vec::new();
    let mut prefixes: Vec<Vec<StateVector>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for p in &prefixes {
            for bits in 0..(1u64 << alphabet.len()) {
                let mut q = p.clone();
                q.push(StateVector::from_bits(alphabet.clone(), bits));
                out.push(Trace::new(q.clone(), max_len).unwrap());
                next.push(q);
            }
        }
        prefixes = next;
    }
    out
}

fn language_matches_oracle(f: &Formula, alphabet: &Arc<Alphabet>, max_len: usize) {
    let mut got: Vec<String> = enumerate_language(f, alphabet, max_len)
        .unwrap()
        .iter()
        .map(|t| t.to_string())
        .collect();
    let mut want: Vec<String> = all_traces(alphabet, max_len)
        .into_iter()
        .filter(|t| common::naive_eval(f, t, 0))
        .map(|t| t.to_string())
        .collect();
    got.sort();
    want.sort();
    assert_eq!(got, want, "{f}");
}

#[test]
fn enumerated_languages_match_the_naive_evaluator() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let alphabet = abc();
    for _ in 0..100 {
        let f = common::random_formula(&mut rng, &ATOMS, 5);
        language_matches_oracle(&f, &alphabet, 4);
    }
}

#[test]
fn task_formula_language_matches_the_naive_evaluator() {
    let spec = PpaTaskSpec::new(
        "t",
        Formula::atom("a"),
        Formula::atom("b"),
        Formula::not(Formula::atom("c")),
        Formula::atom("b"),
        "t",
    )
    .unwrap();
    let alphabet = Arc::new(Alphabet::new(["a", "b", "c", &format!("{ACTION_PREFIX}t")]).unwrap());
    let f = expand_task(&spec).unwrap();
    language_matches_oracle(&f, &alphabet, 4);
}

#[test]
fn globally_language() {
    let a = Arc::new(Alphabet::new(["a"]).unwrap());
    let lang = enumerate_language(&parse_formula("G a").unwrap(), &a, 2).unwrap();
    assert_eq!(
        lang.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        ["[{a}]", "[{a} {a}]"]
    );
}

fn seeded_formula() -> impl Strategy<Value = Formula> {
    any::<u64>().prop_map(|seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        common::random_formula(&mut rng, &ATOMS, 6)
    })
}

fn seeded_trace() -> impl Strategy<Value = Trace> {
    any::<u64>().prop_map(|seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        common::random_trace(&mut rng, &abc(), 8)
    })
}

proptest! {
    #[test]
    fn evaluator_agrees_with_naive_semantics(f in seeded_formula(), trace in seeded_trace()) {
        let compiled = CompiledFormula::new(&f, trace.alphabet()).unwrap();
        let all = compiled.eval_all(&trace).unwrap();
        for (i, &value) in all.iter().enumerate() {
            prop_assert_eq!(value, common::naive_eval(&f, &trace, i));
            prop_assert_eq!(evaluate(&f, &trace, i).unwrap(), value);
        }
    }

    #[test]
    fn printing_then_parsing_is_identity(f in seeded_formula()) {
        prop_assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn suffix_shifts_evaluation(f in seeded_formula(), trace in seeded_trace(), k in 0usize..8) {
        let k = k % trace.len();
        let suffix = trace.suffix(k).unwrap();
        prop_assert_eq!(evaluate(&f, &suffix, 0).unwrap(), evaluate(&f, &trace, k).unwrap());
    }
}
