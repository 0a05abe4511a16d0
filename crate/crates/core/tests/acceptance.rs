//! End-to-end acceptance run: one line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::cells::{budget, cell_invariance, curated_pair, factor_check};
use coherent::builtin;
use coherent::corpus::{load_theory, load_verified, parse_sequent_list, theory_by_stem, Expectation};
use coherent::modelstruct::{conceptual_smoke, pretopos_probe, pretopos_saturate, GeneratorTag};
use coherent::parser::{parse_sequent, parse_theory, render_theory};
use coherent::prover::{prove, ProofOutcome};
use coherent::semantics::{enumerate_models, models_equivalent, SearchBudget, TheoryMorphism};

const DICTIONARY_INSTANCES: usize = 200;
const DICTIONARY_LIMIT: Duration = Duration::from_secs(60);
const MIN_CORPUS: usize = 30;
const SOUNDNESS_SIZE: usize = 4;
const HAND_SEQUENTS: usize = 5;
const LAW_SAMPLES: usize = 50;
const CONSTRUCTION_SIZE: usize = 3;
const CELLS_PER_GENERATOR: usize = 3;
const CELL_LIMIT: Duration = Duration::from_secs(300);
const MORITA_K: usize = 3;
const MORITA_K_PRIME: usize = 6;
const FACTOR_DEPTH: usize = 2;
const FACTOR_MODEL_SIZE: usize = 2;
const SATURATE_DEPTH: usize = 2;
const SMOKE_DEPTH: usize = 2;
const GENERATED_THEORIES: usize = 500;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn dictionary() -> Outcome {
    let start = Instant::now();
    let rows = common::diagram::dictionary(&mut common::rng(2024), DICTIONARY_INSTANCES);
    let took = start.elapsed();
    let mismatches: usize = rows.iter().map(|r| r.mismatches).sum();
    let instances: usize = rows.iter().map(|r| r.instances).sum();
    let positive: usize = rows.iter().map(|r| r.positive).sum();
    outcome(
        mismatches == 0 && took < DICTIONARY_LIMIT && rows.len() == 10,
        format!("{instances} instances over 10 rows ({positive} positive), {mismatches} mismatches, {took:.1?}"),
    )
}

fn corpus() -> Vec<(coherent::syntax::Theory, Expectation, coherent::syntax::Sequent)> {
    let dir = common::corpus_dir();
    let text = std::fs::read_to_string(dir.join("sequents.cohseq")).unwrap();
    parse_sequent_list(&text, "sequents.cohseq")
        .unwrap()
        .into_iter()
        .map(|e| {
            let t = theory_by_stem(&dir, &e.theory).unwrap();
            let s = parse_sequent(&e.text, &t.signature).unwrap();
            (t, e.expectation, s)
        })
        .collect()
}

fn soundness() -> Outcome {
    let entries = corpus();
    let (mut proved, mut refuted, mut unknown, mut violations, mut bad_countermodels) = (0, 0, 0, 0, 0);
    let mut models = std::collections::BTreeMap::new();
    for (t, _, s) in &entries {
        match prove(t, s, budget()).unwrap() {
            ProofOutcome::Proved { .. } => {
                proved += 1;
                let ms = models
                    .entry(t.name.clone())
                    .or_insert_with(|| enumerate_models(t, SOUNDNESS_SIZE, SearchBudget::default()).unwrap());
                violations += ms.iter().filter(|m| !common::holds(m, s)).count();
            }
            ProofOutcome::Refuted { countermodel } => {
                refuted += 1;
                if !common::models(&countermodel, t) || common::holds(&countermodel, s) {
                    bad_countermodels += 1;
                }
            }
            ProofOutcome::Unknown { .. } => unknown += 1,
        }
    }
    outcome(
        entries.len() >= MIN_CORPUS && violations == 0 && bad_countermodels == 0,
        format!(
            "{} sequents: {proved} proved, {refuted} refuted, {unknown} unknown; {violations} violations in models <= {SOUNDNESS_SIZE}, {bad_countermodels} bad countermodels",
            entries.len()
        ),
    )
}

fn hand() -> Outcome {
    let hand: Vec<_> = corpus().into_iter().filter(|(_, e, _)| *e == Expectation::Hand).collect();
    let proved = hand.iter().filter(|(t, _, s)| prove(t, s, budget()).unwrap().is_proved()).count();
    outcome(hand.len() == HAND_SEQUENTS && proved == hand.len(), format!("{proved}/{} proved", hand.len()))
}

fn category() -> Outcome {
    let laws = common::cat::category_laws(&mut common::rng(50), LAW_SAMPLES);
    let cons = common::cat::constructions(CONSTRUCTION_SIZE);
    let mismatches: usize = cons.iter().map(|c| c.mismatches).sum();
    let models: usize = cons.iter().map(|c| c.models).sum();
    outcome(
        laws.failures == 0 && mismatches == 0,
        format!(
            "{} pairs + {} triples, {} law failures; {} constructions over {models} models <= {CONSTRUCTION_SIZE}, {mismatches} mismatches",
            laws.pairs,
            laws.triples,
            laws.failures,
            cons.len()
        ),
    )
}

fn cells() -> Outcome {
    let start = Instant::now();
    let checks = cell_invariance(1, CELLS_PER_GENERATOR, MORITA_K, MORITA_K_PRIME);
    let took = start.elapsed();
    let count = |g| checks.iter().filter(|c| c.generator == g && c.passed()).count();
    let (q, c) = (count(GeneratorTag::Quotient), count(GeneratorTag::Cover));
    outcome(
        q >= CELLS_PER_GENERATOR && c >= CELLS_PER_GENERATOR && took < CELL_LIMIT,
        format!("quotient {q}, cover {c} attachments pass models_equivalent({MORITA_K}, {MORITA_K_PRIME}), {took:.1?}"),
    )
}

fn factorization() -> Outcome {
    let dir = common::corpus_dir();
    let morphisms = [
        TheoryMorphism::identity(&builtin::eqrel()),
        load_verified(&dir.join("ar-inclusion.cohmor"), budget()).unwrap().0,
        load_verified(&dir.join("cov-inclusion.cohmor"), budget()).unwrap().0,
    ];
    let checks: Vec<_> = morphisms.iter().map(|f| factor_check(f, FACTOR_DEPTH, FACTOR_MODEL_SIZE)).collect();
    let pass = checks.iter().all(|c| c.disagreements == 0 && c.failed_probes == 0 && c.target_models > 0);
    let detail = checks
        .iter()
        .map(|c| format!("{}: {} glued, {}/{} probes pass, {} disagreements over {} models", c.morphism, c.glued, c.probes - c.failed_probes, c.probes, c.disagreements, c.target_models))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, detail)
}

fn is_eqrel_gap(g: &coherent::modelstruct::Gap) -> bool {
    g.attachment["A"].ends_with(". true") && g.attachment["R"].contains("R(")
}

fn saturation() -> Outcome {
    let eq = builtin::eqrel();
    let before = pretopos_probe(&eq, SATURATE_DEPTH, budget()).unwrap();
    let s = pretopos_saturate(&eq, 1, SATURATE_DEPTH, budget()).unwrap();
    let after = pretopos_probe(&s.theory, SATURATE_DEPTH, budget()).unwrap();
    let had = before.missing_quotients.iter().any(is_eqrel_gap);
    let closed = !after.missing_quotients.iter().any(is_eqrel_gap);
    let r = models_equivalent(&s.inclusion, MORITA_K, MORITA_K_PRIME, SearchBudget::default()).unwrap();
    let zero = parse_theory("theory Zero {}").unwrap();
    let z = pretopos_saturate(&zero, 2, SATURATE_DEPTH, budget()).unwrap();
    let fixed = z.fixpoint && z.theory == zero && z.log.is_empty();
    outcome(
        had && closed && r.ess_surj && r.fully_faithful && fixed,
        format!(
            "gap before {had}, closed {closed}; {} cells glued; ess_surj {} fully_faithful {}; zero-sort fixpoint {fixed}",
            s.log.len(),
            r.ess_surj,
            r.fully_faithful
        ),
    )
}

fn smoke() -> Outcome {
    let (_, _, f) = curated_pair();
    let r = models_equivalent(&f, MORITA_K, MORITA_K_PRIME, SearchBudget::default()).unwrap();
    let c = conceptual_smoke(&f, SMOKE_DEPTH, budget()).unwrap();
    outcome(
        r.ess_surj && r.fully_faithful && c.essentially_surjective(),
        format!(
            "morita {} / {}; {} target objects: {} by renaming, {} by isomorphism, {} missing",
            r.ess_surj,
            r.fully_faithful,
            c.objects,
            c.by_renaming,
            c.by_isomorphism,
            c.missing.len()
        ),
    )
}

fn round_trip() -> Outcome {
    let mut files = 0;
    let mut failures = 0;
    for entry in std::fs::read_dir(common::corpus_dir()).unwrap() {
        let path = entry.unwrap().path();
        if matches!(path.extension().and_then(|e| e.to_str()), Some("cohthy" | "cohcat")) {
            files += 1;
            let t = load_theory(&path).unwrap();
            failures += (parse_theory(&render_theory(&t)).ok() != Some(t)) as usize;
        }
    }
    let mut r = common::rng(9);
    for i in 0..GENERATED_THEORIES {
        let t = common::random_theory(&mut r, &format!("G{i}"));
        failures += (parse_theory(&render_theory(&t)).ok() != Some(t)) as usize;
    }
    outcome(failures == 0, format!("{files} corpus theories + {GENERATED_THEORIES} generated, {failures} failures"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("diagram dictionary", dictionary),
        ("prover soundness", soundness),
        ("hand sequents", hand),
        ("category laws and constructions", category),
        ("cell Morita invariance", cells),
        ("factorization", factorization),
        ("saturation", saturation),
        ("conceptual smoke", smoke),
        ("parser round trip", round_trip),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        failed += !o.pass as usize;
        println!(
            "criterion {}: {} {name}: {} [{:.1?}]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed()
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
