//! Bounded enumeration of coherent formulas by connective depth.
//!
//! Depth 0 gives `true` and `false`; depth 1 adds atoms over terms of
//! height at most one; depth 2 and beyond adds binary conjunctions and
//! disjunctions of atoms and single existentials over an atom, a pair of
//! atoms or `true`.

use std::collections::BTreeSet;

use crate::syntax::{Context, Formula, Signature, Term};

fn product(pools: &[Vec<Term>]) -> Vec<Vec<Term>> {
    let mut out = vec![Vec::new()];
    for pool in pools {
        let mut next = Vec::new();
        for prefix in &out {
            for t in pool {
                let mut p = prefix.clone();
                p.push(t.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Terms of height ≤ 1 over the context, grouped with their sorts.
pub fn terms(sig: &Signature, ctx: &Context) -> Vec<(Term, String)> {
    let vars: Vec<(Term, String)> = ctx.vars.iter().map(|v| (Term::var(&v.name), v.sort.clone())).collect();
    let mut out = vars.clone();
    for f in &sig.functions {
        let pools: Vec<Vec<Term>> = f
            .args
            .iter()
            .map(|s| vars.iter().filter(|(_, vs)| vs == s).map(|(t, _)| t.clone()).collect())
            .collect();
        for args in product(&pools) {
            out.push((Term::app(&f.name, args), f.result.clone()));
        }
    }
    out
}

/// Atomic formulas over terms of height ≤ 1, omitting `t = t`.
pub fn atoms(sig: &Signature, ctx: &Context) -> Vec<Formula> {
    let ts = terms(sig, ctx);
    let mut out = Vec::new();
    for (i, (t, s)) in ts.iter().enumerate() {
        for (u, s2) in &ts[i + 1..] {
            if s == s2 {
                out.push(Formula::eq(t.clone(), u.clone()));
            }
        }
    }
    for r in &sig.relations {
        let pools: Vec<Vec<Term>> = r
            .args
            .iter()
            .map(|s| ts.iter().filter(|(_, ts)| ts == s).map(|(t, _)| t.clone()).collect())
            .collect();
        for args in product(&pools) {
            out.push(Formula::rel(&r.name, args));
        }
    }
    out
}

/// Candidate formulas over `ctx` up to the given depth, without duplicates.
pub fn formulas(sig: &Signature, ctx: &Context, depth: usize) -> Vec<Formula> {
    let mut out = vec![Formula::top(), Formula::bot()];
    if depth >= 1 {
        out.extend(atoms(sig, ctx));
    }
    if depth >= 2 {
        let base = atoms(sig, ctx);
        for (i, a) in base.iter().enumerate() {
            for b in &base[i + 1..] {
                out.push(Formula::And(vec![a.clone(), b.clone()]));
                out.push(Formula::Or(vec![a.clone(), b.clone()]));
            }
        }
        let avoid: BTreeSet<String> = ctx.names().into_iter().collect();
        let y = super::search::unused("y", &avoid);
        for s in &sig.sorts {
            out.push(Formula::exists(&y, s, Formula::top()));
            let mut wider = ctx.clone();
            wider.push(&y, s);
            let with_y: Vec<Formula> =
                atoms(sig, &wider).into_iter().filter(|a| a.free_vars().contains(&y)).collect();
            for a in &with_y {
                out.push(Formula::exists(&y, s, a.clone()));
            }
            for (i, a) in with_y.iter().enumerate() {
                for b in &with_y[i + 1..] {
                    out.push(Formula::exists(&y, s, Formula::And(vec![a.clone(), b.clone()])));
                }
            }
        }
    }
    let mut seen = BTreeSet::new();
    out.retain(|f| seen.insert(f.to_string()));
    out
}
