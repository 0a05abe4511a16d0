//! Theory-level model-structure machinery: the two generating inclusions,
//! attaching and gluing cells along them, bounded factorization, pretopos
//! probes and saturation.

pub mod candidates;
mod probe;
pub mod search;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builtin;
use crate::prover::ProverError;
use crate::semantics::{SemanticsError, TheoryMorphism, Verification};
use crate::syncat::SyncatError;
use crate::syntax::{Axiom, Context, Formula, FormulaInContext, LogicError, Sequent, Subst, Term, Theory};

pub use probe::{
    conceptual_smoke, enumerate_attachments, factorize, pretopos_probe, pretopos_saturate, witness, AttachmentSearch,
    ConceptualReport, FactorizationResult, Gap, LiftingProbe, ProbeReport, ProbeStatus, ProbeVerdict, Saturation,
};

#[derive(Debug, Error)]
pub enum ModelstructError {
    #[error("attachment {0} is not verified")]
    UnverifiedAttachment(String),
    #[error("morphism {0} is not verified")]
    UnverifiedMorphism(String),
    #[error("attachment source is not the domain of {0}")]
    WrongGenerator(GeneratorTag),
    #[error(transparent)]
    Syncat(#[from] SyncatError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

impl From<ProverError> for ModelstructError {
    fn from(e: ProverError) -> Self {
        ModelstructError::Syncat(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GeneratorTag {
    #[serde(rename = "M_{A/R}")]
    Quotient,
    #[serde(rename = "M_{cov}")]
    Cover,
}

impl fmt::Display for GeneratorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorTag::Quotient => write!(f, "M_{{A/R}}"),
            GeneratorTag::Cover => write!(f, "M_{{cov}}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JGenerator {
    pub tag: GeneratorTag,
    pub domain: Theory,
    pub codomain: Theory,
    pub inclusion: TheoryMorphism,
}

impl JGenerator {
    fn new(tag: GeneratorTag, domain: Theory, codomain: Theory) -> Self {
        let inclusion = TheoryMorphism::inclusion(&tag.to_string(), &domain, &codomain);
        JGenerator { tag, domain, codomain, inclusion }
    }

    /// Names of the codomain axioms not already in the domain.
    pub fn extra_axioms(&self) -> Vec<String> {
        self.codomain
            .axioms
            .iter()
            .filter(|a| self.domain.axiom(&a.name) != Some(&a.sequent))
            .map(|a| a.name.clone())
            .collect()
    }

    pub fn domain_axioms(&self) -> Vec<String> {
        self.domain.axioms.iter().map(|a| a.name.clone()).collect()
    }
}

/// The quotient generator and the covering generator.
pub fn builtin_j() -> (JGenerator, JGenerator) {
    (
        JGenerator::new(GeneratorTag::Quotient, builtin::eqrel(), builtin::ar()),
        JGenerator::new(GeneratorTag::Cover, builtin::ab(), builtin::cov()),
    )
}

pub fn generator(tag: GeneratorTag) -> JGenerator {
    let (q, c) = builtin_j();
    match tag {
        GeneratorTag::Quotient => q,
        GeneratorTag::Cover => c,
    }
}

/// An interpretation of a generator's domain in some theory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellAttachment {
    pub generator: JGenerator,
    pub morphism: TheoryMorphism,
}

impl CellAttachment {
    pub fn new(generator: JGenerator, morphism: TheoryMorphism) -> Result<Self, ModelstructError> {
        if morphism.source != generator.domain {
            return Err(ModelstructError::WrongGenerator(generator.tag));
        }
        Ok(CellAttachment { generator, morphism })
    }

    /// Symbol to rendered image.
    pub fn describe(&self) -> BTreeMap<String, String> {
        let m = &self.morphism;
        m.sort_map
            .iter()
            .chain(&m.function_map)
            .chain(&m.relation_map)
            .map(|(k, v)| (k.clone(), v.to_string()))
            .collect()
    }

    pub fn retarget(&self, t: &Theory) -> CellAttachment {
        let mut c = self.clone();
        c.morphism.target = t.clone();
        c
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluingEntry {
    pub round: usize,
    pub generator: GeneratorTag,
    pub attachment: BTreeMap<String, String>,
    pub new_symbols: Vec<String>,
}

/// How a generator-domain sort lands in the glued theory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedded {
    pub domain_sort: String,
    pub object: FormulaInContext,
    pub sort: String,
    /// One embedding per variable of `object`; empty when the image is a
    /// plain sort.
    pub embeddings: Vec<String>,
}

impl Embedded {
    fn is_plain(&self) -> bool {
        self.embeddings.is_empty() && self.object.context.len() == 1 && self.object.formula.is_top()
    }

    fn terms(&self, u: &str) -> Vec<Term> {
        if self.is_plain() {
            vec![Term::var(u)]
        } else {
            self.embeddings.iter().map(|e| Term::app(e, vec![Term::var(u)])).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pushout {
    pub theory: Theory,
    /// `T → T′`.
    pub inclusion: TheoryMorphism,
    /// `codomain → T′`, agreeing with the attachment on the domain up to the
    /// embeddings.
    pub cell_map: TheoryMorphism,
    pub embedded: Vec<Embedded>,
    /// Codomain symbol to fresh symbol, for sorts, functions and relations
    /// the generator adds.
    pub fresh: BTreeMap<String, String>,
    pub new_symbols: Vec<String>,
}

fn symbol_names(t: &Theory) -> BTreeSet<String> {
    let sig = &t.signature;
    sig.sorts
        .iter()
        .cloned()
        .chain(sig.functions.iter().map(|f| f.name.clone()))
        .chain(sig.relations.iter().map(|r| r.name.clone()))
        .collect()
}

fn first_free(used: &BTreeSet<String>, make: impl Fn(usize) -> Vec<String>) -> usize {
    (0..).find(|&n| make(n).iter().all(|s| !used.contains(s))).expect("unbounded")
}

fn substitute_blocks(image: &FormulaInContext, terms: &[Term]) -> Formula {
    let s: Subst = image.context.vars.iter().map(|v| v.name.clone()).zip(terms.iter().cloned()).collect();
    image.formula.substitute(&s)
}

/// Glue one cell: add the generator's new symbols to `t`, identifying its
/// domain with the attached formulas.
pub fn pushout_cell(t: &Theory, c: &CellAttachment) -> Result<Pushout, ModelstructError> {
    let a = &c.morphism;
    if !a.is_verified() {
        return Err(ModelstructError::UnverifiedAttachment(a.name.clone()));
    }
    let mut checked = a.clone();
    checked.target = t.clone();
    checked.check_arity()?;

    let gen = &c.generator;
    let mut out = t.clone();
    let mut used = symbol_names(t);
    let axiom_names: BTreeSet<String> = t.axioms.iter().map(|ax| ax.name.clone()).collect();
    let mut new_symbols = Vec::new();
    let mut embedded = Vec::new();

    for s in &gen.domain.signature.sorts {
        let object = a.sort_map[s].clone();
        if object.context.len() == 1 && object.formula.is_top() {
            let sort = object.context.vars[0].sort.clone();
            embedded.push(Embedded { domain_sort: s.clone(), object, sort, embeddings: Vec::new() });
            continue;
        }
        let k = first_free(&used, |n| {
            let mut v = vec![format!("__x{n}")];
            v.extend((1..=object.context.len()).map(|i| format!("__e{n}_{i}")));
            v
        });
        let x = format!("__x{k}");
        out.signature = out.signature.with_sort(&x);
        used.insert(x.clone());
        new_symbols.push(x.clone());
        let mut embeddings = Vec::new();
        for (i, v) in object.context.vars.iter().enumerate() {
            let e = format!("__e{k}_{}", i + 1);
            out.signature = out.signature.with_function(&e, &[&x], &v.sort);
            used.insert(e.clone());
            new_symbols.push(e.clone());
            embeddings.push(e);
        }
        let avoid = object.formula.all_vars().into_iter().chain(object.context.names()).collect::<BTreeSet<_>>();
        let u = search::unused("u", &avoid);
        let u2 = search::unused(&format!("{u}'"), &avoid);
        let emb = Embedded { domain_sort: s.clone(), object: object.clone(), sort: x.clone(), embeddings };
        let at_u = emb.terms(&u);
        let at_u2 = emb.terms(&u2);
        let one = Context::from_pairs(&[(&u, &x)]);
        let two = Context::from_pairs(&[(&u, &x), (&u2, &x)]);
        out.axioms.push(Axiom {
            name: format!("{x}_into"),
            sequent: Sequent::new(one, Formula::top(), substitute_blocks(&object, &at_u)),
        });
        let same: Vec<Formula> = at_u.iter().zip(&at_u2).map(|(p, q)| Formula::eq(p.clone(), q.clone())).collect();
        out.axioms.push(Axiom {
            name: format!("{x}_monic"),
            sequent: Sequent::new(two, Formula::And(same).simplify(), Formula::eq(Term::var(&u), Term::var(&u2))),
        });
        let hits: Vec<Formula> =
            at_u.iter().zip(&object.context.vars).map(|(p, v)| Formula::eq(p.clone(), Term::var(&v.name))).collect();
        out.axioms.push(Axiom {
            name: format!("{x}_onto"),
            sequent: Sequent::new(
                object.context.clone(),
                object.formula.clone(),
                Formula::exists(&u, &x, Formula::And(hits).simplify()),
            ),
        });
        embedded.push(emb);
    }
    let by_sort: BTreeMap<&str, &Embedded> = embedded.iter().map(|e| (e.domain_sort.as_str(), e)).collect();

    let dsig = &gen.domain.signature;
    let csig = &gen.codomain.signature;
    let mut fresh = BTreeMap::new();
    let mut sort_of: BTreeMap<String, String> = embedded.iter().map(|e| (e.domain_sort.clone(), e.sort.clone())).collect();
    for s in csig.sorts.iter().filter(|s| !dsig.has_sort(s)) {
        let k = first_free(&used, |n| vec![format!("__q{n}")]);
        let q = format!("__q{k}");
        out.signature = out.signature.with_sort(&q);
        used.insert(q.clone());
        new_symbols.push(q.clone());
        fresh.insert(s.clone(), q.clone());
        sort_of.insert(s.clone(), q);
    }
    let new_funcs: Vec<_> = csig.functions.iter().filter(|f| dsig.function(&f.name).is_none()).collect();
    let new_rels: Vec<_> = csig.relations.iter().filter(|r| dsig.relation(&r.name).is_none()).collect();
    let cell = first_free(&used, |n| {
        let mut v: Vec<String> = new_funcs.iter().map(|f| format!("__{}_{n}", f.name)).collect();
        v.extend(new_rels.iter().map(|r| format!("__{}_{n}", r.name)));
        v.extend(gen.extra_axioms().iter().map(|ax| format!("{ax}__{n}")).filter(|ax| axiom_names.contains(ax)));
        v
    });
    for f in &new_funcs {
        let name = format!("__{}_{cell}", f.name);
        let args: Vec<&str> = f.args.iter().map(|s| sort_of[s].as_str()).collect();
        out.signature = out.signature.with_function(&name, &args, &sort_of[&f.result]);
        new_symbols.push(name.clone());
        fresh.insert(f.name.clone(), name);
    }
    for r in &new_rels {
        let name = format!("__{}_{cell}", r.name);
        let args: Vec<&str> = r.args.iter().map(|s| sort_of[s].as_str()).collect();
        out.signature = out.signature.with_relation(&name, &args);
        new_symbols.push(name.clone());
        fresh.insert(r.name.clone(), name);
    }

    // The map from the generator codomain into the glued theory.
    let var_names = |n: usize, avoid: &BTreeSet<String>| -> Vec<String> {
        let mut taken = avoid.clone();
        (0..n)
            .map(|i| {
                let v = search::unused(&format!("u{}", i + 1), &taken);
                taken.insert(v.clone());
                v
            })
            .collect()
    };
    let mut h = TheoryMorphism {
        name: format!("{}_cell{cell}", gen.tag),
        source: gen.codomain.clone(),
        target: out.clone(),
        sort_map: BTreeMap::new(),
        function_map: BTreeMap::new(),
        relation_map: BTreeMap::new(),
        verification: Verification::Verified,
    };
    for s in &csig.sorts {
        h.sort_map.insert(s.clone(), FormulaInContext::sort("u", &sort_of[s]));
    }
    let image_of = |name: &str, sorts: Vec<String>, from: Option<&FormulaInContext>, fresh_sym: Option<&String>, result: bool| {
        let avoid: BTreeSet<String> = from.map(|o| o.formula.all_vars()).unwrap_or_default();
        let names = var_names(sorts.len(), &avoid);
        let mut ctx = Context::new();
        for (n, s) in names.iter().zip(&sorts) {
            ctx.push(n, &sort_of[s]);
        }
        let formula = if let Some(img) = from {
            let terms: Vec<Term> = names
                .iter()
                .zip(&sorts)
                .flat_map(|(n, s)| match by_sort.get(s.as_str()) {
                    Some(e) => e.terms(n),
                    None => vec![Term::var(n)],
                })
                .collect();
            substitute_blocks(img, &terms)
        } else {
            let sym = fresh_sym.expect("fresh symbol");
            if result {
                let (args, y) = names.split_at(names.len() - 1);
                Formula::eq(Term::app(sym, args.iter().map(|v| Term::var(v)).collect()), Term::var(&y[0]))
            } else {
                Formula::rel(sym, names.iter().map(|v| Term::var(v)).collect())
            }
        };
        (name.to_string(), FormulaInContext::new(ctx, formula))
    };
    for f in &csig.functions {
        let mut sorts = f.args.clone();
        sorts.push(f.result.clone());
        let (k, v) = image_of(&f.name, sorts, a.function_map.get(&f.name), fresh.get(&f.name), true);
        h.function_map.insert(k, v);
    }
    for r in &csig.relations {
        let (k, v) = image_of(&r.name, r.args.clone(), a.relation_map.get(&r.name), fresh.get(&r.name), false);
        h.relation_map.insert(k, v);
    }
    for name in gen.extra_axioms() {
        let ax = gen.codomain.axiom(&name).expect("codomain axiom");
        out.axioms.push(Axiom { name: format!("{name}__{cell}"), sequent: h.translate_sequent(ax) });
    }
    h.target = out.clone();
    let inclusion = TheoryMorphism::inclusion(&format!("{}_glue", t.name), t, &out);
    Ok(Pushout { theory: out, inclusion, cell_map: h, embedded, fresh, new_symbols })
}
