//! Bounded comparison of model categories along a theory morphism.
//!
//! The restriction functor `F*` is tested for full faithfulness on the
//! isomorphism-class representatives of small target models and for
//! essential surjectivity onto the representatives of small source models.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::morphism::{restrict_hom, restrict_with_elements, Renaming, Restriction};
use super::search::{ModelSearch, SearchBudget};
use super::{enumerate_models, homomorphisms, iso_classes, isomorphic, FiniteStructure, FuncTable, Homomorphism};
use super::{RelTable, SemanticsError, TheoryMorphism};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Counterexample {
    /// A source model with no preimage among target models of bounded size.
    NotEssentiallySurjective { source_model: FiniteStructure },
    /// Two distinct homomorphisms with equal restrictions.
    NotFaithful { from: FiniteStructure, to: FiniteStructure, homs: (Homomorphism, Homomorphism) },
    /// A homomorphism between restrictions that does not come from one.
    NotFull { from: FiniteStructure, to: FiniteStructure, missing: Homomorphism },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoritaReport {
    pub ess_surj: bool,
    pub fully_faithful: bool,
    pub counterexamples: Vec<Counterexample>,
    pub source_classes: usize,
    pub target_classes: usize,
    pub k: usize,
    pub k_prime: usize,
}

fn representatives(sig: &crate::syntax::Signature, models: Vec<FiniteStructure>) -> Vec<FiniteStructure> {
    let classes = iso_classes(sig, &models);
    classes.iter().map(|c| models[c[0]].clone()).collect()
}

/// Transport a source structure along a renaming to a partial target structure.
fn transport(f: &TheoryMorphism, ren: &Renaming, m: &FiniteStructure) -> FiniteStructure {
    let tsig = &f.target.signature;
    let carriers = ren.sorts.iter().map(|(s, t)| (t.clone(), m.carriers[s].clone())).collect();
    let functions = ren
        .funcs
        .iter()
        .map(|(g, h)| {
            let d = tsig.function(h).expect("renaming target");
            (h.clone(), FuncTable { args: d.args.clone(), result: d.result.clone(), values: m.functions[g].values.clone() })
        })
        .collect();
    let relations = ren
        .rels
        .iter()
        .map(|(r, s)| {
            let d = tsig.relation(s).expect("renaming target");
            (s.clone(), RelTable { args: d.args.clone(), tuples: m.relations[r].tuples.clone() })
        })
        .collect();
    FiniteStructure { carriers, functions, relations }
}

fn has_preimage(
    f: &TheoryMorphism,
    m: &FiniteStructure,
    k_prime: usize,
    targets: &Option<Vec<Restriction>>,
    budget: SearchBudget,
) -> Result<bool, SemanticsError> {
    let ssig = &f.source.signature;
    match (f.as_renaming(), targets) {
        (Some(ren), _) => {
            let partial = transport(f, &ren, m);
            let mut search = super::search::expansions(&f.target, &partial, k_prime, budget);
            Ok(search.first()?.is_some())
        }
        (None, Some(restrictions)) => {
            Ok(restrictions.iter().any(|r| isomorphic(ssig, &r.structure, m).is_some()))
        }
        (None, None) => unreachable!("restrictions are computed for non-renaming morphisms"),
    }
}

/// Compare `T_target`-models (size ≤ k for full faithfulness, ≤ k′ as
/// preimages) with `T_source`-models of size ≤ k along `F*`.
pub fn models_equivalent(
    f: &TheoryMorphism,
    k: usize,
    k_prime: usize,
    budget: SearchBudget,
) -> Result<MoritaReport, SemanticsError> {
    if !f.is_verified() {
        return Err(SemanticsError::UnverifiedMorphism(f.name.clone()));
    }
    let ssig = &f.source.signature;
    let tsig = &f.target.signature;
    let mut counterexamples = Vec::new();

    // Full faithfulness on representatives of target models.
    let targets = representatives(tsig, enumerate_models(&f.target, k, budget)?);
    let restricted: Vec<Restriction> =
        targets.iter().map(|n| restrict_with_elements(f, n)).collect::<Result<_, _>>()?;
    let pairs: Vec<(usize, usize)> =
        (0..targets.len()).flat_map(|i| (0..targets.len()).map(move |j| (i, j))).collect();
    let failures: Vec<Vec<Counterexample>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut out = Vec::new();
            let (n, n2) = (&targets[i], &targets[j]);
            let mut seen: BTreeMap<Homomorphism, Homomorphism> = BTreeMap::new();
            for h in homomorphisms(tsig, n, n2) {
                let r = restrict_hom(f, &restricted[i], &restricted[j], &h).expect("homomorphisms preserve coherent formulas");
                if let Some(prev) = seen.insert(r, h.clone()) {
                    out.push(Counterexample::NotFaithful { from: n.clone(), to: n2.clone(), homs: (prev, h) });
                    return out;
                }
            }
            for g in homomorphisms(ssig, &restricted[i].structure, &restricted[j].structure) {
                if !seen.contains_key(&g) {
                    out.push(Counterexample::NotFull { from: n.clone(), to: n2.clone(), missing: g });
                    return out;
                }
            }
            out
        })
        .collect();
    let fully_faithful = failures.iter().all(|v| v.is_empty());
    counterexamples.extend(failures.into_iter().flatten());

    // Essential surjectivity on representatives of source models.
    let sources = representatives(ssig, enumerate_models(&f.source, k, budget)?);
    let pool = if f.as_renaming().is_some() {
        None
    } else {
        let mut out = Vec::new();
        let mut err = None;
        let _ = ModelSearch::new(&f.target, k_prime).budget(budget).for_each(&mut |n| match restrict_with_elements(f, &n) {
            Ok(r) => {
                out.push(r);
                ControlFlow::Continue(())
            }
            Err(e) => {
                err = Some(e);
                ControlFlow::Break(())
            }
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        Some(out)
    };
    let missing: Vec<Result<Option<FiniteStructure>, SemanticsError>> = sources
        .par_iter()
        .map(|m| Ok(if has_preimage(f, m, k_prime, &pool, budget)? { None } else { Some(m.clone()) }))
        .collect();
    let mut ess_surj = true;
    for r in missing {
        if let Some(m) = r? {
            ess_surj = false;
            counterexamples.push(Counterexample::NotEssentiallySurjective { source_model: m });
        }
    }
    Ok(MoritaReport {
        ess_surj,
        fully_faithful,
        counterexamples,
        source_classes: sources.len(),
        target_classes: targets.len(),
        k,
        k_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{Context, Formula, Sequent, Signature, Term, Theory};

    fn eqrel() -> Theory {
        let r = |a: &str, b: &str| Formula::rel("R", vec![Term::var(a), Term::var(b)]);
        Theory::new("EqRel", Signature::new().with_sort("A").with_relation("R", &["A", "A"]))
            .with_axiom("refl", Sequent::new(Context::from_pairs(&[("a", "A")]), Formula::top(), r("a", "a")))
            .with_axiom(
                "sym",
                Sequent::new(Context::from_pairs(&[("a", "A"), ("b", "A")]), r("a", "b"), r("b", "a")),
            )
    }

    #[test]
    fn identity_is_an_equivalence() {
        let t = eqrel();
        let rep = models_equivalent(&TheoryMorphism::identity(&t), 2, 2, SearchBudget::default()).unwrap();
        assert!(rep.ess_surj && rep.fully_faithful, "{rep:?}");
    }

    #[test]
    fn inconsistent_target_misses_inhabited_source_models() {
        let src = eqrel();
        let tgt = eqrel().with_axiom(
            "empty",
            Sequent::new(Context::from_pairs(&[("a", "A")]), Formula::top(), Formula::bot()),
        );
        let f = TheoryMorphism::inclusion("inc", &src, &tgt);
        let rep = models_equivalent(&f, 1, 2, SearchBudget::default()).unwrap();
        assert!(!rep.ess_surj);
        assert!(matches!(&rep.counterexamples[0], Counterexample::NotEssentiallySurjective { source_model } if source_model.size("A") == 1));
    }
}
