use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::search::{self, ArrowPool, Extension, Images};
use super::{builtin_j, generator, pushout_cell, CellAttachment, GeneratorTag, GluingEntry, JGenerator, ModelstructError};
use crate::prover::{ProverBudget, Verdict};
use crate::semantics::{TheoryMorphism, Verification};
use crate::syncat::{check_theory_morphism, Certificate, FunctionalArrow, MorphismReport, SyntacticCategory};
use crate::syntax::{Context, Formula, FormulaInContext, Signature, Theory};

/// A theory together with its syntactic category and cached search pools.
struct Bench<'a> {
    cat: SyntacticCategory<'a>,
    arrows: ArrowPool,
    depth: usize,
    unary: Option<Vec<FormulaInContext>>,
    pool: Option<Vec<FormulaInContext>>,
    /// Language for attachment images; the whole signature when absent.
    lang: Option<Signature>,
    lang_arrows: ArrowPool,
}

impl<'a> Bench<'a> {
    fn new(t: &'a Theory, depth: usize, budget: ProverBudget) -> Self {
        Bench { cat: SyntacticCategory::new(t, budget), arrows: ArrowPool::default(), depth, unary: None, pool: None, lang: None, lang_arrows: ArrowPool::default() }
    }

    fn unary(&mut self) -> Result<Vec<FormulaInContext>, ModelstructError> {
        if self.unary.is_none() {
            let lang = self.lang.clone().unwrap_or_else(|| self.cat.signature().clone());
            let ctxs: Vec<Context> = lang.sorts.iter().map(|s| Context::from_pairs(&[("x", s)])).collect();
            self.unary = Some(search::objects(&self.cat, &lang, &ctxs, self.depth)?);
        }
        Ok(self.unary.clone().unwrap())
    }

    /// Objects over the empty context and single variables.
    fn pool(&mut self) -> Result<Vec<FormulaInContext>, ModelstructError> {
        if self.pool.is_none() {
            let mut ctxs = vec![Context::new()];
            ctxs.extend(search::unary_contexts(self.cat.theory()));
            let p = search::objects(&self.cat, self.cat.signature(), &ctxs, self.depth)?;
            self.pool = Some(p);
        }
        Ok(self.pool.clone().unwrap())
    }

    fn attachments(&mut self, g: &JGenerator) -> Result<AttachmentSearch, ModelstructError> {
        let pool = self.unary()?;
        let lang = self.lang.clone().unwrap_or_else(|| self.cat.signature().clone());
        let ext = Extension {
            source: &g.domain,
            fixed: Images::default(),
            sort_pool: &pool,
            check: g.domain_axioms(),
            lang: &lang,
            depth: self.depth,
            limit: None,
        };
        let arrows = if self.lang.is_some() { &mut self.lang_arrows } else { &mut self.arrows };
        let found = search::extend(&self.cat, &ext, arrows)?;
        let solutions = search::dedupe(&self.cat, found.morphisms)?;
        let attachments = solutions
            .into_iter()
            .enumerate()
            .map(|(i, mut m)| {
                m.name = format!("{}#{i}", g.tag);
                m.verification = Verification::Verified;
                CellAttachment { generator: g.clone(), morphism: m }
            })
            .collect();
        Ok(AttachmentSearch { generator: g.tag, attachments, unknown: found.unknown, refuted: found.refuted })
    }

    /// A completion of `fixed` (images of the generator domain) to the
    /// whole generator codomain; the count is of inconclusive candidates.
    fn witness(&mut self, g: &JGenerator, fixed: &TheoryMorphism) -> Result<(Option<TheoryMorphism>, usize), ModelstructError> {
        let pool = self.pool()?;
        let ext = Extension {
            source: &g.codomain,
            fixed: Images::of(fixed),
            sort_pool: &pool,
            check: g.extra_axioms(),
            lang: self.cat.signature(),
            depth: self.depth,
            limit: Some(1),
        };
        let found = search::extend(&self.cat, &ext, &mut self.arrows)?;
        let w = found.morphisms.into_iter().next().map(|mut m| {
            m.name = format!("{}_witness", g.tag);
            m.verification = Verification::Verified;
            m
        });
        Ok((w, found.unknown))
    }

    /// The disjoint-sum attachment `S ↦ ⊥` for a pair of objects, if its
    /// monicity obligations are proved.
    fn sum_attachment(&mut self, g: &JGenerator, p: &FormulaInContext, q: &FormulaInContext) -> Result<Option<CellAttachment>, ModelstructError> {
        let mut images = Images::default();
        images.sorts.insert("S".into(), FormulaInContext::new(Context::new(), Formula::bot()));
        images.sorts.insert("A".into(), p.clone());
        images.sorts.insert("B".into(), q.clone());
        for (f, cod) in [("i1", "A"), ("i2", "B")] {
            let (ctx, _) = search::joint(&images.sorts, &["S".to_string(), cod.to_string()]);
            images.funcs.insert(f.into(), FormulaInContext::new(ctx, Formula::bot()));
        }
        let mut m = images.morphism("sum", &g.domain, self.cat.theory());
        if search::check_axioms(&self.cat, &m, &g.domain_axioms())? != Verdict::Proved {
            return Ok(None);
        }
        m.verification = Verification::Verified;
        Ok(Some(CellAttachment { generator: g.clone(), morphism: m }))
    }
}

#[derive(Debug, Clone)]
pub struct AttachmentSearch {
    pub generator: GeneratorTag,
    pub attachments: Vec<CellAttachment>,
    /// Candidates excluded because some obligation was inconclusive.
    pub unknown: usize,
    pub refuted: usize,
}

/// All attachments of `g` into `t` whose images have at most the given
/// depth, up to provable equivalence.
pub fn enumerate_attachments(t: &Theory, g: &JGenerator, depth: usize, budget: ProverBudget) -> Result<AttachmentSearch, ModelstructError> {
    Bench::new(t, depth, budget).attachments(g)
}

/// A map from the generator codomain into the attachment's target that
/// extends the attachment.
pub fn witness(c: &CellAttachment, depth: usize, budget: ProverBudget) -> Result<Option<TheoryMorphism>, ModelstructError> {
    let t = c.morphism.target.clone();
    Ok(Bench::new(&t, depth, budget).witness(&c.generator, &c.morphism)?.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct Gap {
    pub generator: GeneratorTag,
    pub attachment: BTreeMap<String, String>,
    #[serde(skip)]
    pub cell: CellAttachment,
}

impl Gap {
    fn of(c: CellAttachment) -> Self {
        Gap { generator: c.generator.tag, attachment: c.describe(), cell: c }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeVerdict {
    #[serde(rename = "Pretopos-like")]
    PretoposLike,
    Deficient,
    Unknown,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub missing_quotients: Vec<Gap>,
    pub missing_sums: Vec<Gap>,
    pub verdict: ProbeVerdict,
    pub equivalence_relations: usize,
    pub sum_pairs: usize,
    pub unknown: usize,
}

impl ProbeReport {
    pub fn gaps(&self) -> impl Iterator<Item = &Gap> {
        self.missing_quotients.iter().chain(&self.missing_sums)
    }
}

/// Look for equivalence relations without quotients and pairs of objects
/// without disjoint sums, at the given depth. A clean report is evidence,
/// not a certificate.
pub fn pretopos_probe(t: &Theory, depth: usize, budget: ProverBudget) -> Result<ProbeReport, ModelstructError> {
    let (q, c) = builtin_j();
    let mut bench = Bench::new(t, depth, budget);
    let rels = bench.attachments(&q)?;
    let mut unknown = rels.unknown;
    let mut missing_quotients = Vec::new();
    for a in &rels.attachments {
        let (w, u) = bench.witness(&q, &a.morphism)?;
        if w.is_none() {
            unknown += u;
            missing_quotients.push(Gap::of(a.clone()));
        }
    }
    let objects = bench.unary()?;
    let mut missing_sums = Vec::new();
    let mut sum_pairs = 0;
    for i in 0..objects.len() {
        for j in i..objects.len() {
            let Some(a) = bench.sum_attachment(&c, &objects[i], &objects[j])? else {
                unknown += 1;
                continue;
            };
            sum_pairs += 1;
            let (w, u) = bench.witness(&c, &a.morphism)?;
            if w.is_none() {
                unknown += u;
                missing_sums.push(Gap::of(a));
            }
        }
    }
    let verdict = if !missing_quotients.is_empty() || !missing_sums.is_empty() {
        ProbeVerdict::Deficient
    } else if unknown > 0 {
        ProbeVerdict::Unknown
    } else {
        ProbeVerdict::PretoposLike
    };
    Ok(ProbeReport { missing_quotients, missing_sums, verdict, equivalence_relations: rels.attachments.len(), sum_pairs, unknown })
}

#[derive(Debug, Clone, Serialize)]
pub struct Saturation {
    pub theory: Theory,
    pub inclusion: TheoryMorphism,
    pub log: Vec<GluingEntry>,
    pub rounds: usize,
    pub fixpoint: bool,
}

/// Repeatedly probe and glue one cell per reported gap.
pub fn pretopos_saturate(t: &Theory, rounds: usize, depth: usize, budget: ProverBudget) -> Result<Saturation, ModelstructError> {
    let mut current = t.clone();
    let mut log = Vec::new();
    let mut fixpoint = false;
    let mut ran = 0;
    for round in 1..=rounds {
        let report = pretopos_probe(&current, depth, budget)?;
        if report.gaps().next().is_none() {
            fixpoint = true;
            break;
        }
        ran = round;
        for gap in report.gaps() {
            let p = pushout_cell(&current, &gap.cell.retarget(&current))?;
            log.push(GluingEntry {
                round,
                generator: gap.generator,
                attachment: gap.attachment.clone(),
                new_symbols: p.new_symbols.clone(),
            });
            current = p.theory;
        }
    }
    let inclusion = TheoryMorphism::inclusion(&format!("{}_saturation", t.name), t, &current);
    Ok(Saturation { theory: current, inclusion, log, rounds: ran, fixpoint })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeStatus {
    Pass,
    Fail,
    Unknown,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftingProbe {
    pub generator: GeneratorTag,
    pub attachment: BTreeMap<String, String>,
    pub status: ProbeStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationResult {
    pub middle: Theory,
    /// Source to middle: the composite of the recorded gluings.
    pub left: TheoryMorphism,
    /// Middle to target.
    pub right: TheoryMorphism,
    pub right_report: MorphismReport,
    pub log: Vec<GluingEntry>,
    pub probes: Vec<LiftingProbe>,
    /// Attachments whose square could not be decided.
    pub unknown: usize,
}

/// `G` extended over the symbols of one glued cell, using the square's
/// witness `w` in the target.
fn extend_right(g: &mut TheoryMorphism, p: &super::Pushout, w: &TheoryMorphism) {
    for e in p.embedded.iter().filter(|e| !e.embeddings.is_empty() || !e.object.formula.is_top() || e.object.context.len() != 1) {
        let image = g.translate_object(&e.object);
        g.sort_map.insert(e.sort.clone(), image.clone());
        let mut at = 0;
        for (name, v) in e.embeddings.iter().zip(&e.object.context.vars) {
            let block = g.sort_map[&v.sort].clone();
            let n = block.context.len();
            let mut avoid: BTreeSet<String> = image.formula.all_vars();
            avoid.extend(image.context.names());
            let copy: Vec<String> = block
                .context
                .vars
                .iter()
                .map(|b| {
                    let c = search::unused(&b.name, &avoid);
                    avoid.insert(c.clone());
                    c
                })
                .collect();
            let copy = block.rename_context(&copy);
            let here: Vec<String> = image.context.names()[at..at + n].to_vec();
            let theta = Formula::and2(image.formula.clone(), Formula::vars_eq(&here, &copy.context.names())).simplify();
            g.function_map.insert(name.clone(), FormulaInContext::new(image.context.concat(&copy.context), theta));
            at += n;
        }
    }
    for (sym, fresh) in &p.fresh {
        if let Some(o) = w.sort_map.get(sym) {
            g.sort_map.insert(fresh.clone(), o.clone());
        } else if let Some(o) = w.function_map.get(sym) {
            g.function_map.insert(fresh.clone(), o.clone());
        } else if let Some(o) = w.relation_map.get(sym) {
            g.relation_map.insert(fresh.clone(), o.clone());
        }
    }
    g.source = p.theory.clone();
}

/// Bounded small-object factorization of a verified morphism `F: S → T`
/// into gluings `S → Z` followed by `G: Z → T`.
pub fn factorize(f: &TheoryMorphism, rounds: usize, depth: usize, budget: ProverBudget) -> Result<FactorizationResult, ModelstructError> {
    if !f.is_verified() {
        return Err(ModelstructError::UnverifiedMorphism(f.name.clone()));
    }
    let gens = [generator(GeneratorTag::Quotient), generator(GeneratorTag::Cover)];
    let target = f.target.clone();
    let mut tbench = Bench::new(&target, depth, budget);
    let mut z = f.source.clone();
    let mut g = f.clone();
    g.name = format!("{}_right", f.name);
    let mut log = Vec::new();
    let mut unknown = 0;
    let mut glued: Vec<TheoryMorphism> = Vec::new();
    for round in 1..=rounds {
        let zt = z.clone();
        let mut zbench = Bench::new(&zt, depth, budget);
        zbench.lang = Some(f.source.signature.clone());
        let mut squares = Vec::new();
        for gen in &gens {
            let found = zbench.attachments(gen)?;
            unknown += found.unknown;
            'next: for a in found.attachments {
                for old in glued.iter().filter(|m| m.source == a.morphism.source) {
                    if search::same_images(&zbench.cat, old, &a.morphism)? {
                        continue 'next;
                    }
                }
                let (w, u) = tbench.witness(gen, &a.morphism.then(&g))?;
                match w {
                    Some(w) => squares.push((a, w)),
                    None => unknown += u,
                }
            }
        }
        if squares.is_empty() {
            break;
        }
        for (a, w) in squares {
            let p = pushout_cell(&z, &a.retarget(&z))?;
            extend_right(&mut g, &p, &w);
            log.push(GluingEntry { round, generator: a.generator.tag, attachment: a.describe(), new_symbols: p.new_symbols });
            glued.push(a.morphism);
            z = p.theory;
        }
    }
    g.source = z.clone();
    g.verification = Verification::Unchecked;
    let right_report = check_theory_morphism(&g, budget)?;
    g.verification = right_report.verification;

    // Lifting probes: squares from attachments into the middle theory.
    let mut probes = Vec::new();
    let mut zbench = Bench::new(&z, depth, budget);
    zbench.lang = Some(f.source.signature.clone());
    for gen in &gens {
        for a in zbench.attachments(gen)?.attachments {
            let (w, u) = tbench.witness(gen, &a.morphism.then(&g))?;
            if w.is_none() {
                unknown += u;
                continue;
            }
            let mut cell = false;
            for old in glued.iter().filter(|m| m.source == a.morphism.source) {
                if search::same_images(&zbench.cat, old, &a.morphism)? {
                    cell = true;
                    break;
                }
            }
            if cell {
                probes.push(LiftingProbe { generator: gen.tag, attachment: a.describe(), status: ProbeStatus::Pass });
                continue;
            }
            let (filler, u) = zbench.witness(gen, &a.morphism)?;
            let status = match (filler, u) {
                (Some(_), _) => ProbeStatus::Pass,
                (None, 0) => ProbeStatus::Fail,
                (None, _) => ProbeStatus::Unknown,
            };
            probes.push(LiftingProbe { generator: gen.tag, attachment: a.describe(), status });
        }
    }
    let left = TheoryMorphism::inclusion(&format!("{}_left", f.name), &f.source, &z);
    Ok(FactorizationResult { middle: z, left, right: g, right_report, log, probes, unknown })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConceptualReport {
    pub objects: usize,
    pub by_renaming: usize,
    pub by_isomorphism: usize,
    pub missing: Vec<String>,
    pub unknown: usize,
}

impl ConceptualReport {
    pub fn essentially_surjective(&self) -> bool {
        self.missing.is_empty()
    }
}

fn sorts_and_symbols(f: &Formula, sorts: &mut BTreeSet<String>, syms: &mut BTreeSet<String>) {
    f.function_symbols_into(syms);
    f.relation_symbols_into(syms);
    match f {
        Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|g| sorts_and_symbols(g, sorts, syms)),
        Formula::Exists(_, s, body) => {
            sorts.insert(s.clone());
            sorts_and_symbols(body, sorts, syms);
        }
        _ => {}
    }
}

/// For a verified morphism, check that every target object at the given
/// depth is provably isomorphic to the image of a source object.
pub fn conceptual_smoke(f: &TheoryMorphism, depth: usize, budget: ProverBudget) -> Result<ConceptualReport, ModelstructError> {
    if !f.is_verified() {
        return Err(ModelstructError::UnverifiedMorphism(f.name.clone()));
    }
    let ren = f.as_renaming();
    let image_syms: BTreeSet<String> = ren
        .iter()
        .flat_map(|r| r.sorts.values().chain(r.funcs.values()).chain(r.rels.values()).cloned().collect::<Vec<_>>())
        .collect();
    let mut tbench = Bench::new(&f.target, depth, budget);
    let mut sbench = Bench::new(&f.source, depth, budget);
    let targets = tbench.unary()?;
    let sources: Vec<FormulaInContext> = sbench.unary()?.iter().map(|p| f.translate_object(p)).collect();
    let mut report = ConceptualReport { objects: targets.len(), by_renaming: 0, by_isomorphism: 0, missing: Vec::new(), unknown: 0 };
    for o in &targets {
        let mut sorts: BTreeSet<String> = o.context.sorts().into_iter().collect();
        let mut syms = BTreeSet::new();
        sorts_and_symbols(&o.formula, &mut sorts, &mut syms);
        if ren.is_some() && sorts.iter().chain(&syms).all(|s| image_syms.contains(s)) {
            report.by_renaming += 1;
            continue;
        }
        let mut hit = false;
        'search: for fp in &sources {
            let mut avoid: BTreeSet<String> = o.formula.all_vars();
            avoid.extend(o.context.names());
            avoid.extend(fp.formula.all_vars());
            let names: Vec<String> = fp
                .context
                .vars
                .iter()
                .map(|v| {
                    let n = search::unused(&v.name, &avoid);
                    avoid.insert(n.clone());
                    n
                })
                .collect();
            let fp = fp.rename_context(&names);
            let joint = o.context.concat(&fp.context);
            for theta in super::candidates::formulas(tbench.cat.signature(), &joint, depth) {
                let there = tbench.cat.certify(&FunctionalArrow::new(o.clone(), fp.clone(), theta.clone())?)?;
                if !there.is_certified() {
                    if matches!(there.certificate, Certificate::Failed { verdict: Verdict::Unknown, .. }) {
                        report.unknown += 1;
                    }
                    continue;
                }
                let back = tbench.cat.certify(&FunctionalArrow::new(fp.clone(), o.clone(), theta)?)?;
                if back.is_certified() {
                    hit = true;
                    break 'search;
                }
                if matches!(back.certificate, Certificate::Failed { verdict: Verdict::Unknown, .. }) {
                    report.unknown += 1;
                }
            }
        }
        if hit {
            report.by_isomorphism += 1;
        } else {
            report.missing.push(o.to_string());
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::parser::parse_theory;

    fn budget() -> ProverBudget {
        ProverBudget::default()
    }

    #[test]
    fn eqrel_quotient_attachments_at_depth_one() {
        let (q, _) = builtin_j();
        let found = enumerate_attachments(&builtin::eqrel(), &q, 1, budget()).unwrap();
        let described: Vec<_> = found.attachments.iter().map(|a| a.describe()["R"].clone()).collect();
        assert!(described.iter().any(|r| r.ends_with("R(x, x')")), "{described:?}");
        assert!(described.iter().any(|r| r.ends_with("x = x'")), "{described:?}");
        assert_eq!(found.attachments.len(), 4, "{described:?}");
    }

    #[test]
    fn zero_sort_theory_has_no_attachments_and_no_gaps() {
        let (q, c) = builtin_j();
        let t = parse_theory("theory Z {}").unwrap();
        assert!(enumerate_attachments(&t, &q, 2, budget()).unwrap().attachments.is_empty());
        assert!(enumerate_attachments(&t, &c, 2, budget()).unwrap().attachments.is_empty());
        let r = pretopos_probe(&t, 2, budget()).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::PretoposLike);
        let s = pretopos_saturate(&t, 2, 2, budget()).unwrap();
        assert!(s.fixpoint);
        assert_eq!(s.theory, t);
    }

    #[test]
    fn depth_zero_excludes_the_empty_relation_on_top() {
        let (q, _) = builtin_j();
        let found = enumerate_attachments(&builtin::eqrel(), &q, 0, budget()).unwrap();
        for a in &found.attachments {
            let d = a.describe();
            assert!(!(d["A"].ends_with("true") && d["R"].ends_with("false")), "{d:?}");
        }
        assert!(found.refuted > 0);
    }
}
