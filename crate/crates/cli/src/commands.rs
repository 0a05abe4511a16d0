use std::path::Path;

use coherent::corpus::{self, Expectation};
use coherent::modelstruct::{
    enumerate_attachments, factorize, generator, pretopos_probe, pretopos_saturate, pushout_cell, GeneratorTag, ProbeStatus,
    ProbeVerdict,
};
use coherent::parser::{self, render_object, render_structure, render_theory};
use coherent::prover::{self, ProofOutcome, ProverBudget};
use coherent::semantics::{
    enumerate_models, failing_axioms, is_model, iso_classes, models_equivalent, search::size_profile, TheoryMorphism,
};
use coherent::syncat::{free_coherent_category, FunctionalArrow, Limit, SubobjectRep, SyntacticCategory};
use coherent::syntax::{FormulaInContext, Theory};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::report::{CommandReport, Status};
use crate::{Budgets, Command, Generator, Op};

type Result<T> = std::result::Result<T, CliError>;

fn load(reference: &str) -> Result<Theory> {
    corpus::resolve_theory(reference, Path::new(".")).map_err(CliError::Input)
}

fn stem(reference: &str) -> String {
    if let Some(name) = reference.strip_prefix("builtin:") {
        return name.to_string();
    }
    Path::new(reference).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into())
}

fn outcome_status(o: &ProofOutcome) -> Status {
    match o {
        ProofOutcome::Proved { .. } => Status::Pass,
        ProofOutcome::Refuted { .. } => Status::Failed,
        ProofOutcome::Unknown { .. } => Status::Unknown,
    }
}

fn outcome_detail(o: &ProofOutcome, t: &Theory) -> Value {
    match o {
        ProofOutcome::Proved { .. } => json!({ "outcome": "proved", "steps": o.steps() }),
        ProofOutcome::Refuted { countermodel } => {
            json!({ "outcome": "refuted", "countermodel": render_structure(countermodel, &t.signature) })
        }
        ProofOutcome::Unknown { steps, reason } => json!({ "outcome": "unknown", "steps": steps, "reason": reason }),
    }
}

fn arrow_text(f: &FunctionalArrow) -> String {
    format!("{} ; {} ; {}", render_object(&f.domain), render_object(&f.codomain), f.theta)
}

fn verified(
    path: &Path,
    budget: ProverBudget,
    report: &mut CommandReport,
) -> Result<Option<TheoryMorphism>> {
    let (f, r) = report.time("verify", || corpus::load_verified(path, budget))?;
    let pending: Vec<&str> = r.axioms.iter().filter(|a| !a.outcome.is_proved()).map(|a| a.axiom.as_str()).collect();
    report.check("verified", r.verified(), json!({ "morphism": f.name, "unproved_axioms": pending }));
    Ok(r.verified().then_some(f))
}

pub fn run(cmd: &Command, b: &Budgets, report: &mut CommandReport) -> Result<()> {
    match cmd {
        Command::Check { file, theory } => check(file, theory.as_deref(), b, report),
        Command::Models { theory, k } => {
            report.input("theory", theory);
            report.input("k", k);
            let t = load(theory)?;
            let ms = report.time("enumerate", || enumerate_models(&t, *k, b.search))?;
            let classes = report.time("classify", || iso_classes(&t.signature, &ms));
            report.verdict("models", Status::Info, json!({ "count": ms.len(), "iso_classes": classes.len() }));
            let dump: Vec<Value> = ms
                .iter()
                .map(|m| json!({ "sizes": size_profile(m), "structure": render_structure(m, &t.signature) }))
                .collect();
            report.write(&format!("{}.models.json", stem(theory)), &serde_json::to_string_pretty(&dump).unwrap())
        }
        Command::Prove { theory, sequent } => {
            report.input("theory", theory);
            report.input("sequent", sequent);
            let t = load(theory)?;
            let s = parser::parse_sequent(sequent, &t.signature)?;
            let o = report.time("prove", || prover::prove(&t, &s, b.prover))?;
            report.verdict("sequent", outcome_status(&o), outcome_detail(&o, &t));
            Ok(())
        }
        Command::Syncat { theory, op, objects, arrows, formulas } => {
            report.input("theory", theory);
            report.input("op", format!("{op:?}").to_lowercase());
            report.input("objects", objects);
            report.input("arrows", arrows);
            report.input("formulas", formulas);
            let t = load(theory)?;
            syncat(&t, *op, objects, arrows, formulas, b, report)
        }
        Command::FreeCat { file } => {
            report.input("category", file.display().to_string());
            let text = std::fs::read_to_string(file)
                .map_err(|e| CliError::Input(format!("cannot read `{}`: {e}", file.display())))?;
            let c = parser::parse_category(&text)?;
            let name = stem(&file.display().to_string());
            let t = report.time("build", || free_coherent_category(&name, &c))?;
            report.verdict(
                "theory",
                Status::Info,
                json!({
                    "sorts": t.signature.sorts.len(),
                    "functions": t.signature.functions.len(),
                    "axioms": t.axioms.len(),
                }),
            );
            report.write(&format!("{name}.cohthy"), &render_theory(&t))
        }
        Command::Glue { theory, generator: g, depth, index } => {
            report.input("theory", theory);
            report.input("generator", format!("{g:?}").to_lowercase());
            report.input("depth", depth);
            report.input("index", index);
            let t = load(theory)?;
            let tag = match g {
                Generator::Quotient => GeneratorTag::Quotient,
                Generator::Cover => GeneratorTag::Cover,
            };
            let found = report.time("attach", || enumerate_attachments(&t, &generator(tag), *depth, b.prover))?;
            report.verdict(
                "attachments",
                Status::Info,
                json!({ "found": found.attachments.len(), "refuted": found.refuted, "unknown": found.unknown }),
            );
            let Some(cell) = found.attachments.get(*index) else {
                return Err(CliError::Usage(format!(
                    "--index {index} out of range: {} attachments",
                    found.attachments.len()
                )));
            };
            let p = report.time("glue", || pushout_cell(&t, cell))?;
            report.verdict(
                "glued",
                Status::Info,
                json!({ "generator": tag, "attachment": cell.describe(), "new_symbols": p.new_symbols }),
            );
            report.write(&format!("{}.glued.cohthy", stem(theory)), &render_theory(&p.theory))
        }
        Command::Factor { morphism, rounds, depth } => {
            report.input("morphism", morphism.display().to_string());
            report.input("rounds", rounds);
            report.input("depth", depth);
            let Some(f) = verified(morphism, b.prover, report)? else { return Ok(()) };
            let r = report.time("factorize", || factorize(&f, *rounds, *depth, b.prover))?;
            report.check("right_verified", r.right_report.verified(), &r.right_report.morphism);
            report.verdict("glued", Status::Info, json!({ "cells": r.log.len(), "undecided_squares": r.unknown }));
            for (i, p) in r.probes.iter().enumerate() {
                let status = match p.status {
                    ProbeStatus::Pass => Status::Pass,
                    ProbeStatus::Fail => Status::Failed,
                    ProbeStatus::Unknown => Status::Unknown,
                };
                report.verdict(&format!("lifting[{i}]"), status, json!({ "generator": p.generator, "attachment": p.attachment }));
            }
            let name = stem(&morphism.display().to_string());
            report.write(&format!("{name}.middle.cohthy"), &render_theory(&r.middle))?;
            report.write(&format!("{name}.gluing.json"), &serde_json::to_string_pretty(&r.log).unwrap())
        }
        Command::Probe { theory, depth } => {
            report.input("theory", theory);
            report.input("depth", depth);
            let t = load(theory)?;
            let r = report.time("probe", || pretopos_probe(&t, *depth, b.prover))?;
            let status = match r.verdict {
                ProbeVerdict::Unknown => Status::Unknown,
                _ => Status::Info,
            };
            let gaps: Vec<Value> = r.gaps().map(|g| json!({ "generator": g.generator, "attachment": g.attachment })).collect();
            report.verdict(
                "probe",
                status,
                json!({
                    "verdict": r.verdict,
                    "equivalence_relations": r.equivalence_relations,
                    "sum_pairs": r.sum_pairs,
                    "undecided": r.unknown,
                    "gaps": gaps,
                }),
            );
            Ok(())
        }
        Command::Saturate { theory, rounds, depth } => {
            report.input("theory", theory);
            report.input("rounds", rounds);
            report.input("depth", depth);
            let t = load(theory)?;
            let s = report.time("saturate", || pretopos_saturate(&t, *rounds, *depth, b.prover))?;
            let count = |g| s.log.iter().filter(|e| e.generator == g).count();
            report.verdict(
                "saturation",
                Status::Info,
                json!({
                    "rounds": s.rounds,
                    "fixpoint": s.fixpoint,
                    "quotient_cells": count(GeneratorTag::Quotient),
                    "cover_cells": count(GeneratorTag::Cover),
                }),
            );
            report.check("inclusion_verified", s.inclusion.is_verified(), &s.inclusion.name);
            let name = stem(theory);
            report.write(&format!("{name}.sat.cohthy"), &render_theory(&s.theory))?;
            report.write(&format!("{name}.gluing.json"), &serde_json::to_string_pretty(&s.log).unwrap())
        }
        Command::Morita { from, via, k, k_prime } => {
            let k_prime = k_prime.unwrap_or(2 * k);
            report.input("from", from);
            report.input("via", via.display().to_string());
            report.input("k", k);
            report.input("k_prime", k_prime);
            let t = load(from)?;
            let Some(f) = verified(via, b.prover, report)? else { return Ok(()) };
            if f.source.signature != t.signature {
                return Err(CliError::Input(format!("`{}` does not start at `{from}`", via.display())));
            }
            let r = report.time("compare", || models_equivalent(&f, *k, k_prime, b.search))?;
            let witnesses = serde_json::to_value(&r.counterexamples).unwrap();
            report.check("ess_surj", r.ess_surj, json!({ "target_classes": r.target_classes }));
            report.check("fully_faithful", r.fully_faithful, json!({ "source_classes": r.source_classes }));
            report.verdict("counterexamples", Status::Info, witnesses);
            Ok(())
        }
    }
}

fn check(file: &Path, theory: Option<&str>, b: &Budgets, report: &mut CommandReport) -> Result<()> {
    report.input("file", file.display().to_string());
    if let Some(t) = theory {
        report.input("theory", t);
    }
    let ext = file.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_default();
    match ext.as_str() {
        "cohthy" | "cohcat" => {
            let t = corpus::load_theory(file)?;
            let sig = &t.signature;
            report.verdict(
                "well_formed",
                Status::Pass,
                json!({
                    "name": t.name,
                    "sorts": sig.sorts.len(),
                    "functions": sig.functions.len(),
                    "relations": sig.relations.len(),
                    "axioms": t.axioms.len(),
                }),
            );
        }
        "cohmor" => {
            verified(file, b.prover, report)?;
        }
        "cohstr" => {
            let Some(t) = theory else { return Err(CliError::Usage("structure files need --theory".into())) };
            let t = load(t)?;
            let m = parser::parse_structure_file(file, &t.signature)?;
            report.check("model", is_model(&m, &t), json!({ "failing_axioms": failing_axioms(&m, &t) }));
        }
        "cohseq" => {
            let text = std::fs::read_to_string(file)
                .map_err(|e| CliError::Input(format!("cannot read `{}`: {e}", file.display())))?;
            let dir = file.parent().unwrap_or(Path::new("."));
            for e in corpus::parse_sequent_list(&text, &file.display().to_string())? {
                let t = corpus::theory_by_stem(dir, &e.theory)?;
                let s = parser::parse_sequent(&e.text, &t.signature)?;
                let o = report.time("prove", || prover::prove(&t, &s, b.prover))?;
                let status = match (e.expectation, &o) {
                    (_, ProofOutcome::Unknown { .. }) => Status::Unknown,
                    (Expectation::Refuted, ProofOutcome::Refuted { .. }) => Status::Pass,
                    (Expectation::Proved | Expectation::Hand, ProofOutcome::Proved { .. }) => Status::Pass,
                    _ => Status::Failed,
                };
                report.verdict(&format!("line {}", e.line), status, json!({ "sequent": e.text, "result": outcome_detail(&o, &t) }));
            }
        }
        _ => return Err(CliError::Usage(format!("unknown file type `{}`", file.display()))),
    }
    Ok(())
}

fn parse_arrow(text: &str, t: &Theory) -> Result<FunctionalArrow> {
    let parts: Vec<&str> = text.split(';').map(str::trim).collect();
    let [dom, cod, theta] = parts[..] else {
        return Err(CliError::Usage(format!("arrow `{text}` is not `DOM ; COD ; THETA`")));
    };
    let dom = parser::parse_object(dom, &t.signature)?;
    let cod = parser::parse_object(cod, &t.signature)?;
    let theta = parser::parse_formula(theta, &t.signature, &dom.context.concat(&cod.context))?;
    Ok(FunctionalArrow::new(dom, cod, theta)?)
}

fn cone_detail(apex: &FormulaInContext, legs: &[FunctionalArrow]) -> Value {
    json!({ "apex": render_object(apex), "legs": legs.iter().map(arrow_text).collect::<Vec<_>>() })
}

fn syncat(
    t: &Theory,
    op: Op,
    objects: &[String],
    arrows: &[String],
    formulas: &[String],
    b: &Budgets,
    report: &mut CommandReport,
) -> Result<()> {
    let want = |what: &str, n: usize, have: usize| {
        if n == have {
            Ok(())
        } else {
            Err(CliError::Usage(format!("{op:?} takes {n} {what}, got {have}").to_lowercase()))
        }
    };
    let cat = SyntacticCategory::new(t, b.prover);
    let objs = objects.iter().map(|o| parser::parse_object(o, &t.signature)).collect::<std::result::Result<Vec<_>, _>>()?;
    let mut certified = Vec::new();
    for (i, text) in arrows.iter().enumerate() {
        let f = parse_arrow(text, t)?;
        let check = report.time("certify", || cat.functionality(&f))?;
        let outcomes = [&check.graph, &check.total, &check.single_valued];
        let status = if check.certified() {
            Status::Pass
        } else if outcomes.iter().any(|o| matches!(o, ProofOutcome::Refuted { .. })) {
            Status::Failed
        } else {
            Status::Unknown
        };
        report.verdict(&format!("arrow[{i}] functional"), status, arrow_text(&f));
        certified.push(cat.certify(&f)?);
    }
    if certified.iter().any(|f| !f.is_certified()) {
        return Ok(());
    }
    let result = match op {
        Op::Terminal => {
            want("objects", 0, objs.len())?;
            let c = cat.finite_limit(&Limit::Terminal)?;
            cone_detail(&c.apex, &c.legs)
        }
        Op::Product => {
            want("objects", 2, objs.len())?;
            let c = cat.finite_limit(&Limit::Product(&objs[0], &objs[1]))?;
            cone_detail(&c.apex, &c.legs)
        }
        Op::Equalizer | Op::Pullback => {
            want("arrows", 2, certified.len())?;
            let (f, g) = (&certified[0], &certified[1]);
            let kind = if matches!(op, Op::Equalizer) { Limit::Equalizer(f, g) } else { Limit::Pullback(f, g) };
            let c = report.time("limit", || cat.finite_limit(&kind))?;
            cone_detail(&c.apex, &c.legs)
        }
        Op::Image => {
            want("arrows", 1, certified.len())?;
            let i = report.time("image", || cat.image_factorization(&certified[0]))?;
            json!({
                "image": render_object(&i.image.object()),
                "epi": arrow_text(&i.epi),
                "mono": arrow_text(&i.mono),
            })
        }
        Op::Union => {
            want("objects", 1, objs.len())?;
            let ambient = &objs[0];
            let parts = formulas
                .iter()
                .map(|p| Ok(SubobjectRep::new(ambient.clone(), parser::parse_formula(p, &t.signature, &ambient.context)?)))
                .collect::<Result<Vec<_>>>()?;
            let u = report.time("union", || cat.union(ambient, &parts))?;
            json!({ "union": render_object(&u.object()) })
        }
    };
    report.verdict("result", Status::Info, result);
    Ok(())
}
