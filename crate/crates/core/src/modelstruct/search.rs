//! Search for interpretations of a theory in another, given part of the
//! interpretation: open sorts range over a pool of objects, open function
//! symbols over certified functional formulas, open relation symbols over
//! guarded formulas, all up to a formula depth.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::candidates;
use super::ModelstructError;
use crate::prover::Verdict;
use crate::semantics::{TheoryMorphism, Verification};
use crate::syncat::{Certificate, FunctionalArrow, SyntacticCategory};
use crate::syntax::{fresh_name, Context, Formula, FormulaInContext, Sequent, Signature, Theory};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Images {
    pub sorts: BTreeMap<String, FormulaInContext>,
    pub funcs: BTreeMap<String, FormulaInContext>,
    pub rels: BTreeMap<String, FormulaInContext>,
}

impl Images {
    pub fn of(m: &TheoryMorphism) -> Self {
        Images { sorts: m.sort_map.clone(), funcs: m.function_map.clone(), rels: m.relation_map.clone() }
    }

    pub fn morphism(&self, name: &str, source: &Theory, target: &Theory) -> TheoryMorphism {
        TheoryMorphism {
            name: name.to_string(),
            source: source.clone(),
            target: target.clone(),
            sort_map: self.sorts.clone(),
            function_map: self.funcs.clone(),
            relation_map: self.rels.clone(),
            verification: Verification::Unchecked,
        }
    }
}

/// `base` itself when free, otherwise its first primed variant.
pub fn unused(base: &str, avoid: &BTreeSet<String>) -> String {
    if avoid.contains(base) {
        fresh_name(base, avoid)
    } else {
        base.to_string()
    }
}

/// Blocks of variables for the images of `sorts`, renamed apart.
pub fn joint(sorts: &BTreeMap<String, FormulaInContext>, list: &[String]) -> (Context, Vec<FormulaInContext>) {
    let mut avoid = BTreeSet::new();
    for s in list {
        let o = &sorts[s];
        let own: BTreeSet<String> = o.context.names().into_iter().collect();
        avoid.extend(o.formula.all_vars().into_iter().filter(|v| !own.contains(v)));
    }
    let mut ctx = Context::new();
    let mut blocks = Vec::new();
    for s in list {
        let obj = &sorts[s];
        let names: Vec<String> = obj
            .context
            .vars
            .iter()
            .map(|v| {
                let n = unused(&v.name, &avoid);
                avoid.insert(n.clone());
                n
            })
            .collect();
        let b = obj.rename_context(&names);
        ctx.vars.extend(b.context.vars.iter().cloned());
        blocks.push(b);
    }
    (ctx, blocks)
}

fn conj(blocks: &[FormulaInContext]) -> Formula {
    Formula::And(blocks.iter().map(|b| b.formula.clone()).collect()).simplify()
}

fn ctx_of(blocks: &[FormulaInContext]) -> Context {
    Context { vars: blocks.iter().flat_map(|b| b.context.vars.iter().cloned()).collect() }
}

#[derive(Debug, Default)]
pub struct Found {
    pub morphisms: Vec<TheoryMorphism>,
    /// Candidates rejected only because some prover call was inconclusive.
    pub unknown: usize,
    pub refuted: usize,
}

pub struct Extension<'x> {
    pub source: &'x Theory,
    pub fixed: Images,
    pub sort_pool: &'x [FormulaInContext],
    /// Names of source axioms that must be proved after translation.
    pub check: Vec<String>,
    /// Symbols candidate formulas may use.
    pub lang: &'x Signature,
    pub depth: usize,
    pub limit: Option<usize>,
}

/// Certified functional formulas `[φ] → [ψ]` at a depth, cached by the
/// rendering of the endpoints.
#[derive(Default)]
pub struct ArrowPool {
    cache: HashMap<String, (Vec<Formula>, usize)>,
}

impl ArrowPool {
    pub fn arrows(
        &mut self,
        cat: &SyntacticCategory,
        lang: &Signature,
        dom: &FormulaInContext,
        cod: &FormulaInContext,
        depth: usize,
    ) -> Result<(Vec<Formula>, usize), ModelstructError> {
        let key = format!("{dom} ~> {cod} @{depth}");
        if let Some(v) = self.cache.get(&key) {
            return Ok(v.clone());
        }
        let joint = dom.context.concat(&cod.context);
        let mut out = Vec::new();
        let mut unknown = 0;
        for theta in candidates::formulas(lang, &joint, depth) {
            let arrow = FunctionalArrow::new(dom.clone(), cod.clone(), theta.clone())?;
            match cat.certify(&arrow)?.certificate {
                Certificate::Certified => out.push(theta),
                Certificate::Failed { verdict: Verdict::Unknown, .. } => unknown += 1,
                _ => {}
            }
        }
        self.cache.insert(key, (out.clone(), unknown));
        Ok((out, unknown))
    }
}

/// Prove the named axioms of `m.source` after translation along `m`,
/// stopping at the first failure.
pub fn check_axioms(cat: &SyntacticCategory, m: &TheoryMorphism, names: &[String]) -> Result<Verdict, ModelstructError> {
    let mut verdict = Verdict::Proved;
    for ax in &m.source.axioms {
        if !names.contains(&ax.name) {
            continue;
        }
        let s: Sequent = m.translate_sequent(&ax.sequent);
        match cat.prove(&s)?.verdict() {
            Verdict::Proved => {}
            Verdict::Refuted => return Ok(Verdict::Refuted),
            Verdict::Unknown => verdict = Verdict::Unknown,
        }
    }
    Ok(verdict)
}

fn odometer(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if sizes.contains(&0) {
        return out;
    }
    let mut cur = vec![0; sizes.len()];
    loop {
        out.push(cur.clone());
        let mut pos = sizes.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            cur[pos] += 1;
            if cur[pos] < sizes[pos] {
                break;
            }
            cur[pos] = 0;
        }
    }
}

/// All (or up to `limit`) completions of the fixed images that prove the
/// checked axioms, in a deterministic order.
pub fn extend(cat: &SyntacticCategory, ext: &Extension, pool: &mut ArrowPool) -> Result<Found, ModelstructError> {
    let src = ext.source;
    let target = cat.theory().clone();
    let open_sorts: Vec<&String> = src.signature.sorts.iter().filter(|s| !ext.fixed.sorts.contains_key(*s)).collect();
    let open_funcs: Vec<_> = src.signature.functions.iter().filter(|f| !ext.fixed.funcs.contains_key(&f.name)).collect();
    let open_rels: Vec<_> = src.signature.relations.iter().filter(|r| !ext.fixed.rels.contains_key(&r.name)).collect();
    let mut found = Found::default();
    for choice in odometer(&vec![ext.sort_pool.len(); open_sorts.len()]) {
        let mut images = ext.fixed.clone();
        for (s, &i) in open_sorts.iter().zip(&choice) {
            images.sorts.insert((*s).clone(), ext.sort_pool[i].clone());
        }
        // Candidate images per open symbol.
        let mut options: Vec<Vec<(String, bool, FormulaInContext)>> = Vec::new();
        for f in &open_funcs {
            let mut list = f.args.clone();
            list.push(f.result.clone());
            let (ctx, blocks) = joint(&images.sorts, &list);
            let n = blocks.len() - 1;
            let dom = FormulaInContext::new(ctx_of(&blocks[..n]), conj(&blocks[..n]));
            let cod = blocks[n].clone();
            let (thetas, unknown) = pool.arrows(cat, ext.lang, &dom, &cod, ext.depth)?;
            found.unknown += unknown;
            options.push(thetas.into_iter().map(|t| (f.name.clone(), true, FormulaInContext::new(ctx.clone(), t))).collect());
        }
        for r in &open_rels {
            let (ctx, blocks) = joint(&images.sorts, &r.args);
            let guard = conj(&blocks);
            let mut seen = BTreeSet::new();
            let list: Vec<_> = candidates::formulas(ext.lang, &ctx, ext.depth)
                .into_iter()
                .map(|f| Formula::and2(f, guard.clone()).simplify())
                .filter(|f| seen.insert(f.to_string()))
                .map(|f| (r.name.clone(), false, FormulaInContext::new(ctx.clone(), f)))
                .collect();
            options.push(list);
        }
        let sizes: Vec<usize> = options.iter().map(|o| o.len()).collect();
        for pick in odometer(&sizes) {
            let mut full = images.clone();
            for (opts, &i) in options.iter().zip(&pick) {
                let (name, is_func, img) = &opts[i];
                if *is_func {
                    full.funcs.insert(name.clone(), img.clone());
                } else {
                    full.rels.insert(name.clone(), img.clone());
                }
            }
            let m = full.morphism("candidate", src, &target);
            match check_axioms(cat, &m, &ext.check)? {
                Verdict::Proved => {
                    found.morphisms.push(m);
                    if ext.limit.is_some_and(|l| found.morphisms.len() >= l) {
                        return Ok(found);
                    }
                }
                Verdict::Refuted => found.refuted += 1,
                Verdict::Unknown => found.unknown += 1,
            }
        }
    }
    Ok(found)
}

/// Objects over the given contexts at a depth, deduplicated up to provable
/// equivalence (inconclusive comparisons keep both). Provably empty objects
/// are all isomorphic, so only the first is kept.
pub fn objects(cat: &SyntacticCategory, lang: &Signature, contexts: &[Context], depth: usize) -> Result<Vec<FormulaInContext>, ModelstructError> {
    let mut out: Vec<FormulaInContext> = Vec::new();
    let mut have_empty = false;
    for ctx in contexts {
        let start = out.len();
        for f in candidates::formulas(lang, ctx, depth) {
            let o = FormulaInContext::new(ctx.clone(), f);
            let empty = cat.prove(&Sequent::new(ctx.clone(), o.formula.clone(), Formula::bot()))?.is_proved();
            if empty && have_empty {
                continue;
            }
            let mut dup = false;
            for k in &out[start..] {
                if cat.equivalent(k, &o)?.is_proved() {
                    dup = true;
                    break;
                }
            }
            if !dup {
                have_empty |= empty;
                out.push(o);
            }
        }
    }
    Ok(out)
}

/// `[x:S]` for each sort.
pub fn unary_contexts(t: &Theory) -> Vec<Context> {
    t.signature.sorts.iter().map(|s| Context::from_pairs(&[("x", s)])).collect()
}

/// Same sort images and provably equivalent symbol images.
pub fn same_images(cat: &SyntacticCategory, k: &TheoryMorphism, m: &TheoryMorphism) -> Result<bool, ModelstructError> {
    if k.sort_map != m.sort_map {
        return Ok(false);
    }
    let pairs = k.function_map.values().zip(m.function_map.values()).chain(k.relation_map.values().zip(m.relation_map.values()));
    for (a, b) in pairs {
        if a != b && !cat.equivalent(a, b)?.is_proved() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Drop solutions whose images match those of an earlier solution.
pub fn dedupe(cat: &SyntacticCategory, ms: Vec<TheoryMorphism>) -> Result<Vec<TheoryMorphism>, ModelstructError> {
    let mut out: Vec<TheoryMorphism> = Vec::new();
    for m in ms {
        let mut dup = false;
        for k in &out {
            if same_images(cat, k, &m)? {
                dup = true;
                break;
            }
        }
        if !dup {
            out.push(m);
        }
    }
    Ok(out)
}
