mod common;

use coherent::builtin;
use coherent::corpus::{parse_sequent_list, theory_by_stem, Expectation};
use coherent::parser::{parse_object, parse_sequent};
use coherent::prover::{is_provably_functional, prove, replay, ProofOutcome, ProverBudget, ProverError};
use coherent::semantics::{enumerate_models, SearchBudget};
use coherent::syntax::{Sequent, Theory};

fn seq(t: &Theory, text: &str) -> Sequent {
    parse_sequent(text, &t.signature).unwrap()
}

fn corpus() -> Vec<(Theory, Expectation, Sequent)> {
    let dir = common::corpus_dir();
    let text = std::fs::read_to_string(dir.join("sequents.cohseq")).unwrap();
    parse_sequent_list(&text, "sequents.cohseq")
        .unwrap()
        .into_iter()
        .map(|e| {
            let t = theory_by_stem(&dir, &e.theory).unwrap();
            let s = seq(&t, &e.text);
            (t, e.expectation, s)
        })
        .collect()
}

#[test]
fn corpus_is_large_and_covers_the_theories() {
    let c = corpus();
    assert!(c.len() >= 30);
    let names: std::collections::BTreeSet<_> = c.iter().map(|(t, ..)| t.name.clone()).collect();
    for n in ["EqRel", "AR", "AB", "Cov", "arrow", "idempotent", "retract"] {
        assert!(names.contains(n), "{n} missing from {names:?}");
    }
    assert_eq!(c.iter().filter(|(_, e, _)| *e == Expectation::Hand).count(), 5);
}

#[test]
fn proved_verdicts_hold_in_all_models_up_to_four() {
    for (t, _, s) in corpus() {
        let out = prove(&t, &s, ProverBudget::default()).unwrap();
        if !out.is_proved() {
            continue;
        }
        let ms = enumerate_models(&t, 4, SearchBudget::default()).unwrap();
        assert!(!ms.is_empty());
        for m in &ms {
            assert!(common::models(m, &t));
            assert!(common::holds(m, &s), "{s} fails in a model of {}", t.name);
        }
    }
}

#[test]
fn verdicts_match_expectations_and_countermodels_verify() {
    for (t, e, s) in corpus() {
        let out = prove(&t, &s, ProverBudget::default()).unwrap();
        match (&out, e) {
            (ProofOutcome::Proved { proof }, Expectation::Proved | Expectation::Hand) => {
                replay(&t, &s, proof).unwrap();
            }
            (ProofOutcome::Refuted { countermodel }, Expectation::Refuted) => {
                assert!(common::models(countermodel, &t), "{s}: countermodel is not a model");
                assert!(!common::holds(countermodel, &s), "{s}: countermodel satisfies the goal");
            }
            _ => panic!("{} {s}: expected {e:?}, got {:?}", t.name, out.verdict()),
        }
    }
}

#[test]
fn reflexive_sequent_needs_no_steps() {
    let t = builtin::cov();
    let s = seq(&t, "[x:X, a:A]: x = j1(a) => x = j1(a)");
    assert_eq!(prove(&t, &s, ProverBudget::default()).unwrap().steps(), 0);
}

#[test]
fn diagonal_countermodel_has_two_points() {
    let t = builtin::eqrel();
    let out = prove(&t, &seq(&t, "[a:A, a':A]: true => R(a, a')"), ProverBudget::default()).unwrap();
    let ProofOutcome::Refuted { countermodel } = out else { panic!() };
    assert_eq!(countermodel.size("A"), 2);
    assert_eq!(countermodel.relations["R"].tuples.len(), 2);
}

#[test]
fn graph_of_quotient_map_is_functional() {
    let t = builtin::ar();
    let phi = parse_object("[a:A]. true", &t.signature).unwrap();
    let psi = parse_object("[b:B]. true", &t.signature).unwrap();
    let theta = parse_object("[a:A, b:B]. b = p(a)", &t.signature).unwrap();
    let c = is_provably_functional(&t, &theta, &phi, &psi, ProverBudget::default()).unwrap();
    assert!(c.certified());
}

#[test]
fn identity_arrow_is_functional() {
    let t = builtin::eqrel();
    let phi = parse_object("[a:A]. R(a, a)", &t.signature).unwrap();
    let psi = parse_object("[a':A]. R(a', a')", &t.signature).unwrap();
    let theta = parse_object("[a:A, a':A]. R(a, a) & a = a'", &t.signature).unwrap();
    assert!(is_provably_functional(&t, &theta, &phi, &psi, ProverBudget::default()).unwrap().certified());
}

#[test]
fn relation_is_not_single_valued() {
    let t = builtin::eqrel();
    let phi = parse_object("[a:A]. true", &t.signature).unwrap();
    let psi = parse_object("[b:A]. true", &t.signature).unwrap();
    let theta = parse_object("[a:A, b:A]. R(a, b)", &t.signature).unwrap();
    let c = is_provably_functional(&t, &theta, &phi, &psi, ProverBudget::default()).unwrap();
    assert!(c.graph.is_proved() && c.total.is_proved());
    let ProofOutcome::Refuted { countermodel } = &c.single_valued else { panic!("{:?}", c.single_valued) };
    assert!(common::models(countermodel, &t));
    assert!(countermodel.relations["R"].tuples.len() > countermodel.size("A"));
}

#[test]
fn overlapping_contexts_are_rejected() {
    let t = builtin::eqrel();
    let o = parse_object("[a:A]. true", &t.signature).unwrap();
    let theta = parse_object("[a:A, b:A]. a = b", &t.signature).unwrap();
    let err = is_provably_functional(&t, &theta, &o, &o, ProverBudget::default()).unwrap_err();
    assert!(matches!(err, ProverError::ContextOverlap(v) if v == "a"));
}

#[test]
fn larger_budgets_keep_proofs() {
    let small = ProverBudget { max_steps: 200, max_branches: 64, max_model_size: 2 };
    for (t, _, s) in corpus() {
        if prove(&t, &s, small).unwrap().is_proved() {
            for b in [ProverBudget::default(), ProverBudget { max_steps: 50_000, max_branches: 2048, max_model_size: 3 }] {
                assert!(prove(&t, &s, b).unwrap().is_proved(), "{s}");
            }
        }
    }
}

#[test]
fn proofs_are_deterministic() {
    for (t, _, s) in corpus().into_iter().take(12) {
        let a = prove(&t, &s, ProverBudget::default()).unwrap();
        let b = prove(&t, &s, ProverBudget::default()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn inconsistent_theory_proves_everything() {
    let t = coherent::parser::parse_theory(
        "theory Bad { sort A rel P : A axiom boom [a:A]: true => false axiom inhabited []: true => exists a:A. true }",
    )
    .unwrap();
    let s = seq(&t, "[]: true => false");
    assert!(prove(&t, &s, ProverBudget::default()).unwrap().is_proved());
}
