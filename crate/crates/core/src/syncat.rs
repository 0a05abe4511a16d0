//! The syntactic category of a theory, computed lazily: objects are
//! formulas in context, arrows are provably functional formulas, equality
//! of arrows is provable equivalence.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::ControlFlow;
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prover::{functionality_sequents, FunctionalityCheck, ProofOutcome, Prover, ProverBudget, ProverError, Verdict};
use crate::semantics::compile::{CompiledSequent, SymbolIndex, Truth};
use crate::semantics::{FiniteStructure, ModelSearch, SearchBudget, TheoryMorphism, Verification, View};
use crate::syntax::{
    alpha_equiv, fresh_name, validate_object, validate_sequent, Context, Formula, FormulaInContext, LogicError, Sequent, Signature,
    Term, Theory,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyncatError {
    #[error("object mismatch: expected {expected}, found {found}")]
    ObjectMismatch { expected: String, found: String },
    #[error("subobjects live in different ambients: {0} and {1}")]
    AmbientMismatch(String, String),
    #[error("arrow is not certified")]
    UncertifiedArrow,
    #[error("{0}")]
    BadDiagram(String),
    #[error(transparent)]
    Prover(#[from] ProverError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Graph,
    Total,
    SingleValued,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Certificate {
    Certified,
    Assumed,
    Failed { condition: Condition, verdict: Verdict },
}

/// An arrow `[φ(x⃗)] → [ψ(y⃗)]` given by `θ(x⃗, y⃗)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionalArrow {
    pub domain: FormulaInContext,
    pub codomain: FormulaInContext,
    pub theta: Formula,
    pub certificate: Certificate,
}

impl FunctionalArrow {
    pub fn new(domain: FormulaInContext, codomain: FormulaInContext, theta: Formula) -> Result<Self, SyncatError> {
        if let Some(v) = domain.context.vars.iter().find(|v| codomain.context.contains(&v.name)) {
            return Err(ProverError::ContextOverlap(v.name.clone()).into());
        }
        Ok(FunctionalArrow { domain, codomain, theta, certificate: Certificate::Assumed })
    }

    pub fn context(&self) -> Context {
        self.domain.context.concat(&self.codomain.context)
    }

    /// θ as an object over the joint context.
    pub fn graph(&self) -> FormulaInContext {
        FormulaInContext::new(self.context(), self.theta.clone())
    }

    pub fn is_certified(&self) -> bool {
        self.certificate == Certificate::Certified
    }
}

/// A subobject of `ambient = [ψ(x⃗)]` represented by `φ(x⃗)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubobjectRep {
    pub ambient: FormulaInContext,
    pub predicate: Formula,
}

impl SubobjectRep {
    pub fn new(ambient: FormulaInContext, predicate: Formula) -> Self {
        SubobjectRep { ambient, predicate }
    }

    pub fn object(&self) -> FormulaInContext {
        FormulaInContext::new(self.ambient.context.clone(), self.predicate.clone())
    }

    /// The monomorphism `[φ(x⃗′)] → [ψ(x⃗)]` given by `φ(x⃗′) ∧ x⃗′ ≈ x⃗`.
    pub fn inclusion(&self) -> FunctionalArrow {
        let obj = self.object();
        let mut avoid = names_of(&obj);
        let primed = freshen(&obj, &mut avoid);
        let theta = Formula::and2(
            primed.formula.clone(),
            Formula::vars_eq(&primed.context.names(), &self.ambient.context.names()),
        );
        FunctionalArrow { domain: primed, codomain: self.ambient.clone(), theta, certificate: Certificate::Assumed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitKind {
    Terminal,
    Product,
    Equalizer,
    Pullback,
}

#[derive(Debug, Clone)]
pub enum Limit<'a> {
    Terminal,
    Product(&'a FormulaInContext, &'a FormulaInContext),
    Equalizer(&'a FunctionalArrow, &'a FunctionalArrow),
    Pullback(&'a FunctionalArrow, &'a FunctionalArrow),
}

/// A limit cone: the apex with its legs (projections, or the inclusion of
/// an equalizer).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cone {
    pub kind: LimitKind,
    pub apex: FormulaInContext,
    pub legs: Vec<FunctionalArrow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageFactorization {
    pub middle: FormulaInContext,
    pub epi: FunctionalArrow,
    pub mono: FunctionalArrow,
    pub image: SubobjectRep,
}

fn names_of(o: &FormulaInContext) -> BTreeSet<String> {
    let mut s: BTreeSet<String> = o.context.names().into_iter().collect();
    s.extend(o.formula.all_vars());
    s
}

/// `o` with its context renamed to names fresh for `avoid`, which is updated.
fn freshen(o: &FormulaInContext, avoid: &mut BTreeSet<String>) -> FormulaInContext {
    avoid.extend(o.formula.all_vars());
    let names: Vec<String> = o
        .context
        .vars
        .iter()
        .map(|v| {
            let n = fresh_name(&v.name, avoid);
            avoid.insert(n.clone());
            n
        })
        .collect();
    o.rename_context(&names)
}

fn rendered(o: &FormulaInContext) -> String {
    o.to_string()
}

fn same_object(expected: &FormulaInContext, found: &FormulaInContext) -> Result<(), SyncatError> {
    if alpha_equiv(expected, found) {
        Ok(())
    } else {
        Err(SyncatError::ObjectMismatch { expected: rendered(expected), found: rendered(found) })
    }
}

/// θ of `g` restated over the joint context of `f` (same endpoints).
fn theta_over(g: &FunctionalArrow, ctx: &Context) -> Formula {
    g.graph().rename_context(&ctx.names()).formula
}

/// Combine two outcomes that must both be proved.
pub fn both(a: ProofOutcome, b: ProofOutcome) -> ProofOutcome {
    match (a, b) {
        (ProofOutcome::Proved { proof: mut p }, ProofOutcome::Proved { proof: q }) => {
            p.steps.extend(q.steps);
            p.leaves.extend(q.leaves);
            ProofOutcome::Proved { proof: p }
        }
        (r @ ProofOutcome::Refuted { .. }, _) | (_, r @ ProofOutcome::Refuted { .. }) => r,
        (u @ ProofOutcome::Unknown { .. }, _) | (_, u @ ProofOutcome::Unknown { .. }) => u,
    }
}

/// The syntactic category of a theory with a prover budget and a cache of
/// prover outcomes keyed by the rendered sequent.
pub struct SyntacticCategory<'a> {
    prover: Prover<'a>,
    budget: ProverBudget,
    cache: Mutex<HashMap<String, ProofOutcome>>,
    /// Small models of the theory, tried before the prover.
    samples: OnceLock<Vec<FiniteStructure>>,
}

const SAMPLE_MODELS: usize = 128;
const SAMPLE_NODES: u64 = 300_000;

fn sample_models(t: &Theory) -> Vec<FiniteStructure> {
    let mut out = Vec::new();
    // The size odometer alone is (k+1)^sorts, so larger carriers are only
    // sampled for small signatures.
    let n = t.signature.sorts.len();
    let top = if n <= 6 { 2 } else if n <= 16 { 1 } else { 0 };
    for k in 1..=top {
        let mut found = 0;
        let mut search = ModelSearch::new(t, k).budget(SearchBudget { max_nodes: SAMPLE_NODES });
        let _ = search.for_each(&mut |m| {
            if k == 2 && m.max_size() < 2 {
                return ControlFlow::Continue(());
            }
            out.push(m);
            found += 1;
            if found >= SAMPLE_MODELS {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
    }
    out
}

impl<'a> SyntacticCategory<'a> {
    pub fn new(theory: &'a Theory, budget: ProverBudget) -> Self {
        SyntacticCategory { prover: Prover::new(theory), budget, cache: Mutex::new(HashMap::new()), samples: OnceLock::new() }
    }

    pub fn theory(&self) -> &Theory {
        self.prover.theory()
    }

    pub fn signature(&self) -> &Signature {
        &self.prover.theory().signature
    }

    pub fn budget(&self) -> ProverBudget {
        self.budget
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    /// `T ⊢ s`, memoized.
    pub fn prove(&self, s: &Sequent) -> Result<ProofOutcome, SyncatError> {
        let key = s.to_string();
        if let Some(o) = self.cache.lock().unwrap().get(&key) {
            return Ok(o.clone());
        }
        let o = match self.sample_countermodel(s) {
            Some(m) => ProofOutcome::Refuted { countermodel: m },
            None => self.prover.prove(s, self.budget)?,
        };
        self.cache.lock().unwrap().insert(key, o.clone());
        Ok(o)
    }

    fn sample_countermodel(&self, s: &Sequent) -> Option<FiniteStructure> {
        let sig = self.signature();
        validate_sequent(sig, s).ok()?;
        let samples = self.samples.get_or_init(|| sample_models(self.theory()));
        let idx = SymbolIndex::new(sig);
        let c = CompiledSequent::new(&idx, &s.context, &s.lhs, &s.rhs);
        samples.iter().find(|m| c.check(&View::new(sig, m)) == Truth::False).cloned()
    }

    /// `T ⊢ a ⇔ b` for objects over alpha-equivalent contexts.
    pub fn equivalent(&self, a: &FormulaInContext, b: &FormulaInContext) -> Result<ProofOutcome, SyncatError> {
        if a.context.sorts() != b.context.sorts() {
            return Err(SyncatError::ObjectMismatch { expected: rendered(a), found: rendered(b) });
        }
        let b = b.rename_context(&a.context.names());
        let fwd = self.prove(&Sequent::new(a.context.clone(), a.formula.clone(), b.formula.clone()))?;
        if fwd.is_refuted() {
            return Ok(fwd);
        }
        let bwd = self.prove(&Sequent::new(a.context.clone(), b.formula, a.formula.clone()))?;
        Ok(both(fwd, bwd))
    }

    pub fn identity(&self, obj: &FormulaInContext) -> FunctionalArrow {
        identity(obj)
    }

    pub fn compose(&self, f: &FunctionalArrow, g: &FunctionalArrow) -> Result<FunctionalArrow, SyncatError> {
        compose(f, g)
    }

    /// The three functionality conditions for `f`.
    pub fn functionality(&self, f: &FunctionalArrow) -> Result<FunctionalityCheck, SyncatError> {
        let theta = f.graph();
        let [g, t, s] = functionality_sequents(&theta, &f.domain, &f.codomain)?;
        let graph = self.prove(&g)?;
        let total = self.prove(&t)?;
        let single_valued = self.prove(&s)?;
        Ok(FunctionalityCheck { graph, total, single_valued })
    }

    /// `f` with its certificate computed by the prover.
    pub fn certify(&self, f: &FunctionalArrow) -> Result<FunctionalArrow, SyncatError> {
        let mut out = f.clone();
        if f.certificate == Certificate::Certified {
            return Ok(out);
        }
        validate_object(self.signature(), &f.graph())?;
        let c = self.functionality(f)?;
        let conds = [Condition::Graph, Condition::Total, Condition::SingleValued];
        out.certificate = match conds.iter().zip(c.outcomes()).find(|(_, o)| !o.is_proved()) {
            None => Certificate::Certified,
            Some((cond, o)) => Certificate::Failed { condition: *cond, verdict: o.verdict() },
        };
        Ok(out)
    }

    /// `T ⊢ θ_f ⇔ θ_g` for arrows with the same endpoints.
    pub fn arrows_equal(&self, f: &FunctionalArrow, g: &FunctionalArrow) -> Result<ProofOutcome, SyncatError> {
        same_object(&f.domain, &g.domain)?;
        same_object(&f.codomain, &g.codomain)?;
        let ctx = f.context();
        let gt = theta_over(g, &ctx);
        let fwd = self.prove(&Sequent::new(ctx.clone(), f.theta.clone(), gt.clone()))?;
        if fwd.is_refuted() {
            return Ok(fwd);
        }
        let bwd = self.prove(&Sequent::new(ctx, gt, f.theta.clone()))?;
        Ok(both(fwd, bwd))
    }

    /// `T ⊢ φ ⇒ ψ` for a subobject `φ` of `[ψ]`.
    pub fn certify_subobject(&self, s: &SubobjectRep) -> Result<ProofOutcome, SyncatError> {
        self.prove(&Sequent::new(s.ambient.context.clone(), s.predicate.clone(), s.ambient.formula.clone()))
    }

    pub fn finite_limit(&self, kind: &Limit) -> Result<Cone, SyncatError> {
        finite_limit(kind)
    }

    pub fn image_factorization(&self, f: &FunctionalArrow) -> Result<ImageFactorization, SyncatError> {
        image_factorization(f)
    }

    pub fn union(&self, ambient: &FormulaInContext, parts: &[SubobjectRep]) -> Result<SubobjectRep, SyncatError> {
        union(ambient, parts)
    }
}

/// `[φ(x⃗) ∧ x⃗ ≈ x⃗′]`, certified by construction.
pub fn identity(obj: &FormulaInContext) -> FunctionalArrow {
    let mut avoid = names_of(obj);
    let cod = freshen(obj, &mut avoid);
    let theta = Formula::and2(obj.formula.clone(), Formula::vars_eq(&obj.context.names(), &cod.context.names()));
    FunctionalArrow { domain: obj.clone(), codomain: cod, theta, certificate: Certificate::Certified }
}

/// `g ∘ f`, given by `∃y⃗ (θ(x⃗, y⃗) ∧ μ(y⃗, z⃗))`.
pub fn compose(f: &FunctionalArrow, g: &FunctionalArrow) -> Result<FunctionalArrow, SyncatError> {
    same_object(&f.codomain, &g.domain)?;
    let mut avoid = names_of(&f.graph());
    avoid.extend(g.theta.all_vars());
    let cod = freshen(&g.codomain, &mut avoid);
    let names: Vec<String> = f.codomain.context.names().into_iter().chain(cod.context.names()).collect();
    let mu = g.graph().rename_context(&names).formula;
    let theta = Formula::exists_many(&f.codomain.context, Formula::and2(f.theta.clone(), mu));
    Ok(FunctionalArrow { domain: f.domain.clone(), codomain: cod, theta, certificate: Certificate::Assumed })
}

fn product(a: &FormulaInContext, b: &FormulaInContext) -> Cone {
    let mut avoid = names_of(a);
    avoid.extend(b.formula.all_vars());
    let b = if b.context.vars.iter().any(|v| a.context.contains(&v.name)) { freshen(b, &mut avoid) } else { b.clone() };
    let ctx = a.context.concat(&b.context);
    let body = Formula::and2(a.formula.clone(), b.formula.clone());
    let apex = FormulaInContext::new(ctx, body.clone());
    let mut avoid = names_of(&apex);
    let leg = |factor: &FormulaInContext, avoid: &mut BTreeSet<String>| {
        let cod = freshen(factor, avoid);
        let theta = Formula::and2(body.clone(), Formula::vars_eq(&factor.context.names(), &cod.context.names()));
        FunctionalArrow { domain: apex.clone(), codomain: cod, theta, certificate: Certificate::Assumed }
    };
    let p1 = leg(a, &mut avoid);
    let p2 = leg(&b, &mut avoid);
    Cone { kind: LimitKind::Product, apex, legs: vec![p1, p2] }
}

fn equalizer(f: &FunctionalArrow, g: &FunctionalArrow) -> Result<Cone, SyncatError> {
    same_object(&f.domain, &g.domain)?;
    same_object(&f.codomain, &g.codomain)?;
    let nu = theta_over(g, &f.context());
    let body = Formula::exists_many(&f.codomain.context, Formula::and2(f.theta.clone(), nu));
    let apex = FormulaInContext::new(f.domain.context.clone(), body.clone());
    let mut avoid = names_of(&apex);
    let cod = freshen(&f.domain, &mut avoid);
    let theta = Formula::and2(body, Formula::vars_eq(&f.domain.context.names(), &cod.context.names()));
    let incl = FunctionalArrow { domain: apex.clone(), codomain: cod, theta, certificate: Certificate::Assumed };
    Ok(Cone { kind: LimitKind::Equalizer, apex, legs: vec![incl] })
}

pub fn finite_limit(kind: &Limit) -> Result<Cone, SyncatError> {
    match kind {
        Limit::Terminal => {
            Ok(Cone { kind: LimitKind::Terminal, apex: FormulaInContext::new(Context::new(), Formula::top()), legs: vec![] })
        }
        Limit::Product(a, b) => Ok(product(a, b)),
        Limit::Equalizer(f, g) => equalizer(f, g),
        Limit::Pullback(f, g) => {
            same_object(&f.codomain, &g.codomain)?;
            let prod = product(&f.domain, &g.domain);
            let u = compose(&prod.legs[0], f)?;
            let v = compose(&prod.legs[1], g)?;
            let v = FunctionalArrow { codomain: u.codomain.clone(), theta: theta_over(&v, &u.context()), ..v };
            let eq = equalizer(&u, &v)?;
            let incl = &eq.legs[0];
            let l1 = compose(incl, &prod.legs[0])?;
            let l2 = compose(incl, &prod.legs[1])?;
            Ok(Cone { kind: LimitKind::Pullback, apex: eq.apex, legs: vec![l1, l2] })
        }
    }
}

/// `f = mono ∘ epi` through `[∃x⃗ μ(x⃗, y⃗′)]`.
pub fn image_factorization(f: &FunctionalArrow) -> Result<ImageFactorization, SyncatError> {
    if !f.is_certified() {
        return Err(SyncatError::UncertifiedArrow);
    }
    let mut avoid = names_of(&f.graph());
    let cod = freshen(&f.codomain, &mut avoid);
    let names: Vec<String> = f.domain.context.names().into_iter().chain(cod.context.names()).collect();
    let mu = f.graph().rename_context(&names).formula;
    let exists_mu = Formula::exists_many(&f.domain.context, mu.clone());
    let middle = FormulaInContext::new(cod.context.clone(), exists_mu.clone());
    let epi = FunctionalArrow { domain: f.domain.clone(), codomain: middle.clone(), theta: mu, certificate: Certificate::Assumed };
    let mono = FunctionalArrow {
        domain: middle.clone(),
        codomain: f.codomain.clone(),
        theta: Formula::and2(exists_mu, Formula::vars_eq(&cod.context.names(), &f.codomain.context.names())),
        certificate: Certificate::Assumed,
    };
    let image = SubobjectRep::new(f.codomain.clone(), Formula::exists_many(&f.domain.context, f.theta.clone()));
    Ok(ImageFactorization { middle, epi, mono, image })
}

/// `⋁ᵢ φᵢ` as a subobject of `ambient`.
pub fn union(ambient: &FormulaInContext, parts: &[SubobjectRep]) -> Result<SubobjectRep, SyncatError> {
    let mut disjuncts = Vec::new();
    for p in parts {
        if !alpha_equiv(ambient, &p.ambient) {
            return Err(SyncatError::AmbientMismatch(rendered(ambient), rendered(&p.ambient)));
        }
        disjuncts.push(p.object().rename_context(&ambient.context.names()).formula);
    }
    let predicate = if disjuncts.len() == 1 { disjuncts.pop().unwrap() } else { Formula::Or(disjuncts) };
    Ok(SubobjectRep::new(ambient.clone(), predicate))
}

/// A row of the diagram dictionary, with arrows named by unary function
/// symbols and objects by sorts of the canonical language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "row", rename_all = "snake_case")]
pub enum DiagramRow {
    /// `f` is the identity.
    Identity { f: String },
    /// `g ∘ f = h`.
    Commutes { f: String, g: String, h: String },
    Mono { f: String },
    Surjective { f: String },
    Terminal { sort: String },
    Initial { sort: String },
    /// `A ← C → B` via `f`, `g` is a product diagram.
    Product { f: String, g: String },
    /// `e` is an equalizer of `f` and `g`.
    Equalizer { e: String, f: String, g: String },
    /// The subobject `g` is the union of the subobjects `parts`.
    Union { parts: Vec<String>, g: String },
    /// The subobject `g` is the intersection of the subobjects `parts`.
    Intersection { parts: Vec<String>, g: String },
}

impl DiagramRow {
    pub fn number(&self) -> usize {
        match self {
            DiagramRow::Identity { .. } => 1,
            DiagramRow::Commutes { .. } => 2,
            DiagramRow::Mono { .. } => 3,
            DiagramRow::Surjective { .. } => 4,
            DiagramRow::Terminal { .. } => 5,
            DiagramRow::Initial { .. } => 6,
            DiagramRow::Product { .. } => 7,
            DiagramRow::Equalizer { .. } => 8,
            DiagramRow::Union { .. } => 9,
            DiagramRow::Intersection { .. } => 10,
        }
    }
}

fn unary<'s>(sig: &'s Signature, f: &str) -> Result<(&'s str, &'s str), SyncatError> {
    let d = sig.function(f).ok_or_else(|| SyncatError::BadDiagram(format!("unknown function `{f}`")))?;
    if d.args.len() != 1 {
        return Err(SyncatError::BadDiagram(format!("`{f}` is not unary")));
    }
    Ok((&d.args[0], &d.result))
}

fn app(f: &str, x: &str) -> Term {
    Term::app(f, vec![Term::var(x)])
}

fn iff(ctx: Context, a: Formula, b: Formula) -> Vec<Sequent> {
    vec![Sequent::new(ctx.clone(), a.clone(), b.clone()), Sequent::new(ctx, b, a)]
}

/// The sequents expressing a diagram property.
pub fn diagram_to_sequents(sig: &Signature, row: &DiagramRow) -> Result<Vec<Sequent>, SyncatError> {
    let expect = |cond: bool, msg: String| if cond { Ok(()) } else { Err(SyncatError::BadDiagram(msg)) };
    let ctx = |pairs: &[(&str, &str)]| Context::from_pairs(pairs);
    let top = Formula::top;
    Ok(match row {
        DiagramRow::Identity { f } => {
            let (a, b) = unary(sig, f)?;
            expect(a == b, format!("`{f}` is not an endomorphism"))?;
            vec![Sequent::new(ctx(&[("a", a)]), top(), Formula::eq(app(f, "a"), Term::var("a")))]
        }
        DiagramRow::Commutes { f, g, h } => {
            let (a, b) = unary(sig, f)?;
            let (b2, c) = unary(sig, g)?;
            let (a2, c2) = unary(sig, h)?;
            expect(b == b2 && a == a2 && c == c2, "triangle does not typecheck".into())?;
            let gf = Term::app(g, vec![app(f, "a")]);
            vec![Sequent::new(ctx(&[("a", a)]), top(), Formula::eq(gf, app(h, "a")))]
        }
        DiagramRow::Mono { f } => {
            let (a, _) = unary(sig, f)?;
            vec![Sequent::new(
                ctx(&[("a", a), ("a'", a)]),
                Formula::eq(app(f, "a"), app(f, "a'")),
                Formula::eq(Term::var("a"), Term::var("a'")),
            )]
        }
        DiagramRow::Surjective { f } => {
            let (a, b) = unary(sig, f)?;
            vec![Sequent::new(ctx(&[("b", b)]), top(), Formula::exists("a", a, Formula::eq(app(f, "a"), Term::var("b"))))]
        }
        DiagramRow::Terminal { sort } => {
            expect(sig.has_sort(sort), format!("unknown sort `{sort}`"))?;
            vec![
                Sequent::new(ctx(&[("a", sort), ("a'", sort)]), top(), Formula::eq(Term::var("a"), Term::var("a'"))),
                Sequent::new(Context::new(), top(), Formula::exists("a", sort, Formula::eq(Term::var("a"), Term::var("a")))),
            ]
        }
        DiagramRow::Initial { sort } => {
            expect(sig.has_sort(sort), format!("unknown sort `{sort}`"))?;
            vec![Sequent::new(ctx(&[("a", sort)]), Formula::eq(Term::var("a"), Term::var("a")), Formula::bot())]
        }
        DiagramRow::Product { f, g } => {
            let (c, a) = unary(sig, f)?;
            let (c2, b) = unary(sig, g)?;
            expect(c == c2, "span legs have different domains".into())?;
            vec![
                Sequent::new(
                    ctx(&[("c", c), ("c'", c)]),
                    Formula::And(vec![
                        Formula::eq(app(f, "c"), app(f, "c'")),
                        Formula::eq(app(g, "c"), app(g, "c'")),
                    ]),
                    Formula::eq(Term::var("c"), Term::var("c'")),
                ),
                Sequent::new(
                    ctx(&[("a", a), ("b", b)]),
                    top(),
                    Formula::exists(
                        "c",
                        c,
                        Formula::And(vec![
                            Formula::eq(app(f, "c"), Term::var("a")),
                            Formula::eq(app(g, "c"), Term::var("b")),
                        ]),
                    ),
                ),
            ]
        }
        DiagramRow::Equalizer { e, f, g } => {
            let (es, a) = unary(sig, e)?;
            let (a1, b1) = unary(sig, f)?;
            let (a2, b2) = unary(sig, g)?;
            expect(a == a1 && a == a2 && b1 == b2, "equalizer does not typecheck".into())?;
            iff(
                ctx(&[("a", a)]),
                Formula::eq(app(f, "a"), app(g, "a")),
                Formula::exists("e", es, Formula::eq(app(e, "e"), Term::var("a"))),
            )
        }
        DiagramRow::Union { parts, g } | DiagramRow::Intersection { parts, g } => {
            let (bs, x) = unary(sig, g)?;
            let mut terms = Vec::new();
            for (i, p) in parts.iter().enumerate() {
                let (ai, xi) = unary(sig, p)?;
                expect(xi == x, format!("`{p}` does not land in `{x}`"))?;
                let v = format!("a{}", i + 1);
                terms.push(Formula::exists(&v, ai, Formula::eq(app(p, &v), Term::var("x"))));
            }
            let lhs = if matches!(row, DiagramRow::Union { .. }) { Formula::Or(terms) } else { Formula::And(terms) };
            iff(ctx(&[("x", x)]), lhs, Formula::exists("b", bs, Formula::eq(app(g, "b"), Term::var("x"))))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatArrow {
    pub name: String,
    pub dom: String,
    pub cod: String,
}

/// A finitely presented category: objects, arrows (identities included)
/// and the composition table `(f, g) ↦ g ∘ f` on composable pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinCat {
    pub objects: Vec<String>,
    pub arrows: Vec<CatArrow>,
    pub identities: BTreeMap<String, String>,
    pub composites: BTreeMap<(String, String), String>,
}

impl FinCat {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add an object together with its identity `id_X`.
    pub fn with_object(mut self, name: &str) -> Self {
        let id = format!("id_{name}");
        self.objects.push(name.to_string());
        self.arrows.push(CatArrow { name: id.clone(), dom: name.to_string(), cod: name.to_string() });
        self.identities.insert(name.to_string(), id);
        self
    }

    pub fn with_arrow(mut self, name: &str, dom: &str, cod: &str) -> Self {
        self.arrows.push(CatArrow { name: name.to_string(), dom: dom.to_string(), cod: cod.to_string() });
        self
    }

    /// Record `g ∘ f = h`.
    pub fn with_composite(mut self, f: &str, g: &str, h: &str) -> Self {
        self.composites.insert((f.to_string(), g.to_string()), h.to_string());
        self
    }

    fn arrow(&self, name: &str) -> Option<&CatArrow> {
        self.arrows.iter().find(|a| a.name == name)
    }

    fn is_identity(&self, name: &str) -> bool {
        self.identities.values().any(|i| i == name)
    }

    /// `g ∘ f`, with unit laws built in.
    pub fn composite(&self, f: &str, g: &str) -> Option<String> {
        if self.is_identity(f) {
            return Some(g.to_string());
        }
        if self.is_identity(g) {
            return Some(f.to_string());
        }
        self.composites.get(&(f.to_string(), g.to_string())).cloned()
    }

    /// Composable pairs `(f, g)` other than identity with identity.
    pub fn composable_pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for f in &self.arrows {
            for g in &self.arrows {
                if f.cod == g.dom && !(self.is_identity(&f.name) && self.is_identity(&g.name)) {
                    out.push((f.name.clone(), g.name.clone()));
                }
            }
        }
        out
    }
}

/// The theory of the free coherent category on `a`: one sort per object,
/// one unary function per arrow, an identity axiom per object and a
/// triangle axiom per composable pair.
pub fn free_coherent_category(name: &str, a: &FinCat) -> Result<Theory, SyncatError> {
    let mut sig = Signature::new();
    for o in &a.objects {
        sig = sig.with_sort(o);
    }
    for f in &a.arrows {
        sig = sig.with_function(&f.name, &[&f.dom], &f.cod);
    }
    sig.check()?;
    let mut t = Theory::new(name, sig);
    for o in &a.objects {
        let id = a.identities.get(o).ok_or_else(|| SyncatError::BadDiagram(format!("no identity on `{o}`")))?;
        for s in diagram_to_sequents(&t.signature, &DiagramRow::Identity { f: id.clone() })? {
            t = t.with_axiom(&format!("id_{o}"), s);
        }
    }
    for (f, g) in a.composable_pairs() {
        let h = a.composite(&f, &g).ok_or_else(|| SyncatError::BadDiagram(format!("no composite for `{g}` after `{f}`")))?;
        let hd = a.arrow(&h).ok_or_else(|| SyncatError::BadDiagram(format!("unknown arrow `{h}`")))?;
        let (fd, gd) = (a.arrow(&f).unwrap(), a.arrow(&g).unwrap());
        if hd.dom != fd.dom || hd.cod != gd.cod {
            return Err(SyncatError::BadDiagram(format!("`{h}` cannot be `{g}` after `{f}`")));
        }
        for s in diagram_to_sequents(&t.signature, &DiagramRow::Commutes { f: f.clone(), g: g.clone(), h })? {
            t = t.with_axiom(&format!("comp_{f}_{g}"), s);
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub axiom: String,
    pub translated: String,
    pub outcome: ProofOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolCheck {
    pub symbol: String,
    pub outcomes: Vec<ProofOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphismReport {
    pub morphism: String,
    pub axioms: Vec<AxiomCheck>,
    pub symbols: Vec<SymbolCheck>,
    pub verification: Verification,
}

impl MorphismReport {
    pub fn verified(&self) -> bool {
        self.verification == Verification::Verified
    }
}

/// The sequents saying the image of each function symbol is functional and
/// the image of each relation symbol lies in its product of sort images.
pub fn symbol_obligations(f: &TheoryMorphism) -> Result<Vec<(String, Vec<Sequent>)>, SyncatError> {
    let ssig = &f.source.signature;
    let mut out = Vec::new();
    let split = |sorts: &[String], names: &[String]| -> (Formula, usize) {
        let mut parts = Vec::new();
        let mut at = 0;
        for s in sorts {
            let obj = &f.sort_map[s];
            let n = obj.context.len();
            parts.push(obj.rename_context(&names[at..at + n]).formula);
            at += n;
        }
        (Formula::And(parts).simplify(), at)
    };
    for d in &ssig.functions {
        let img = &f.function_map[&d.name];
        let names = img.context.names();
        let (phi, n) = split(&d.args, &names);
        let (psi, _) = split(std::slice::from_ref(&d.result), &names[n..]);
        let x = Context { vars: img.context.vars[..n].to_vec() };
        let y = Context { vars: img.context.vars[n..].to_vec() };
        let seqs = functionality_sequents(img, &FormulaInContext::new(x, phi), &FormulaInContext::new(y, psi))?;
        out.push((d.name.clone(), seqs.to_vec()));
    }
    for d in &ssig.relations {
        let img = &f.relation_map[&d.name];
        let (guard, _) = split(&d.args, &img.context.names());
        out.push((d.name.clone(), vec![Sequent::new(img.context.clone(), img.formula.clone(), guard)]));
    }
    Ok(out)
}

fn verification_of<'o>(outcomes: impl Iterator<Item = &'o ProofOutcome>) -> Verification {
    let mut v = Verification::Verified;
    for o in outcomes {
        match o.verdict() {
            Verdict::Refuted => return Verification::Failed,
            Verdict::Unknown => v = Verification::Unchecked,
            Verdict::Proved => {}
        }
    }
    v
}

/// Translate every source axiom along `f` and prove it in the target; also
/// discharge the functionality of symbol images.
pub fn check_theory_morphism(f: &TheoryMorphism, budget: ProverBudget) -> Result<MorphismReport, SyncatError> {
    f.check_arity()?;
    let cat = SyntacticCategory::new(&f.target, budget);
    let axioms: Vec<AxiomCheck> = f
        .source
        .axioms
        .par_iter()
        .map(|ax| {
            let s = f.translate_sequent(&ax.sequent);
            Ok(AxiomCheck { axiom: ax.name.clone(), translated: s.to_string(), outcome: cat.prove(&s)? })
        })
        .collect::<Result<_, SyncatError>>()?;
    let symbols: Vec<SymbolCheck> = symbol_obligations(f)?
        .par_iter()
        .map(|(name, seqs)| {
            let outcomes = seqs.iter().map(|s| cat.prove(s)).collect::<Result<_, _>>()?;
            Ok(SymbolCheck { symbol: name.clone(), outcomes })
        })
        .collect::<Result<_, SyncatError>>()?;
    let verification =
        verification_of(axioms.iter().map(|a| &a.outcome).chain(symbols.iter().flat_map(|s| s.outcomes.iter())));
    Ok(MorphismReport { morphism: f.name.clone(), axioms, symbols, verification })
}

/// `f` with its verification status set by [`check_theory_morphism`].
pub fn verify(f: &TheoryMorphism, budget: ProverBudget) -> Result<(TheoryMorphism, MorphismReport), SyncatError> {
    let report = check_theory_morphism(f, budget)?;
    let mut g = f.clone();
    g.verification = report.verification;
    Ok((g, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::parser::{parse_formula, parse_object};

    fn obj(t: &Theory, text: &str) -> FormulaInContext {
        parse_object(text, &t.signature).unwrap()
    }

    fn arrow(t: &Theory, dom: &str, cod: &str, theta: &str) -> FunctionalArrow {
        let d = obj(t, dom);
        let c = obj(t, cod);
        let th = parse_formula(theta, &t.signature, &d.context.concat(&c.context)).unwrap();
        FunctionalArrow::new(d, c, th).unwrap()
    }

    #[test]
    fn identity_is_literal() {
        let t = builtin::eqrel();
        let id = identity(&obj(&t, "[x:A]. true"));
        assert_eq!(id.theta.to_string(), "x = x'");
        assert!(id.is_certified());
        let id = identity(&obj(&t, "[a:A, b:A]. R(a,b)"));
        assert_eq!(id.codomain.context.len(), 2);
    }

    #[test]
    fn symmetric_graphs_are_equal() {
        let t = builtin::eqrel();
        let cat = SyntacticCategory::new(&t, ProverBudget::default());
        let f = arrow(&t, "[a:A]. true", "[b:A]. true", "R(a,b)");
        let g = arrow(&t, "[a:A]. true", "[b:A]. true", "R(b,a)");
        assert!(cat.arrows_equal(&f, &g).unwrap().is_proved());
    }

    #[test]
    fn empty_graph_is_not_total() {
        let t = Theory::new("One", Signature::new().with_sort("A"));
        let cat = SyntacticCategory::new(&t, ProverBudget::default());
        let f = arrow(&t, "[x:A]. true", "[y:A]. true", "x = y");
        let g = arrow(&t, "[x:A]. true", "[y:A]. true", "false");
        assert!(cat.arrows_equal(&f, &g).unwrap().is_refuted());
        let g = cat.certify(&g).unwrap();
        assert!(matches!(g.certificate, Certificate::Failed { condition: Condition::Total, verdict: Verdict::Refuted }));
    }

    #[test]
    fn kernel_pair_of_p() {
        let t = builtin::ar();
        let cat = SyntacticCategory::new(&t, ProverBudget::default());
        let p = cat.certify(&arrow(&t, "[a:A]. true", "[b:B]. true", "p(a) = b")).unwrap();
        assert!(p.is_certified());
        let cone = cat.finite_limit(&Limit::Pullback(&p, &p)).unwrap();
        let names = cone.apex.context.names();
        let r = FormulaInContext::new(
            cone.apex.context.clone(),
            Formula::rel("R", vec![Term::var(&names[0]), Term::var(&names[1])]),
        );
        assert!(cat.equivalent(&cone.apex, &r).unwrap().is_proved());
    }

    #[test]
    fn image_of_p_is_everything() {
        let t = builtin::ar();
        let cat = SyntacticCategory::new(&t, ProverBudget::default());
        let p = cat.certify(&arrow(&t, "[a:A]. true", "[b:B]. true", "p(a) = b")).unwrap();
        let im = cat.image_factorization(&p).unwrap();
        assert_eq!(im.middle.to_string(), "[b':B]. exists a:A. p(a) = b'");
        let top = FormulaInContext::new(im.middle.context.clone(), Formula::top());
        assert!(cat.equivalent(&im.middle, &top).unwrap().is_proved());
        let f = arrow(&t, "[a:A]. true", "[b:B]. true", "p(a) = b");
        assert_eq!(cat.image_factorization(&f), Err(SyncatError::UncertifiedArrow));
    }

    #[test]
    fn cover_union_is_top() {
        let t = builtin::cov();
        let x = obj(&t, "[x:X]. true");
        let j1 = SubobjectRep::new(x.clone(), parse_formula("exists a:A. x = j1(a)", &t.signature, &x.context).unwrap());
        let j2 = SubobjectRep::new(x.clone(), parse_formula("exists b:B. x = j2(b)", &t.signature, &x.context).unwrap());
        let u = union(&x, &[j1.clone(), j2]).unwrap();
        let cat = SyntacticCategory::new(&t, ProverBudget::default());
        assert!(cat.equivalent(&u.object(), &x).unwrap().is_proved());
        assert_eq!(union(&x, std::slice::from_ref(&j1)).unwrap(), j1);
        assert!(union(&x, &[]).unwrap().predicate.is_bot());
    }

    #[test]
    fn rows_render_as_in_the_table() {
        let sig = Signature::new().with_sort("A").with_sort("B").with_function("f", &["A"], "B");
        let s = diagram_to_sequents(&sig, &DiagramRow::Mono { f: "f".into() }).unwrap();
        assert_eq!(s[0].to_string(), "[a:A, a':A] f(a) = f(a') => a = a'");
        let s = diagram_to_sequents(&sig, &DiagramRow::Terminal { sort: "A".into() }).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].to_string(), "[] true => exists a:A. a = a");
    }

    #[test]
    fn free_category_on_an_arrow() {
        let a = FinCat::new().with_object("X").with_object("Y").with_arrow("u", "X", "Y");
        let t = free_coherent_category("Arr", &a).unwrap();
        assert_eq!(t.signature.sorts.len(), 2);
        assert_eq!(t.signature.functions.len(), 3);
        assert_eq!(t.axioms.len(), 4);
        let empty = free_coherent_category("Nil", &FinCat::new()).unwrap();
        assert!(empty.signature.sorts.is_empty() && empty.axioms.is_empty());
    }

    #[test]
    fn relation_sent_to_bottom_loses_reflexivity() {
        let t = builtin::eqrel();
        let mut f = TheoryMorphism::identity(&t);
        f.relation_map.get_mut("R").unwrap().formula = Formula::bot();
        let rep = check_theory_morphism(&f, ProverBudget::default()).unwrap();
        assert_eq!(rep.verification, Verification::Failed);
        assert!(rep.axioms.iter().find(|a| a.axiom == "refl").unwrap().outcome.is_refuted());
    }

    #[test]
    fn kernel_pair_inclusion_verifies() {
        let f = TheoryMorphism::inclusion("inc", &builtin::eqrel(), &builtin::ar());
        let rep = check_theory_morphism(&f, ProverBudget::default()).unwrap();
        assert!(rep.verified(), "{rep:?}");
    }
}
