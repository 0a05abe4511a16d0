//! Finite `Set`-models: interpretation of terms and coherent formulas,
//! validity, model enumeration, homomorphisms, restriction along theory
//! morphisms, and bounded comparison of model categories.

pub mod compile;
pub mod hom;
pub mod morita;
pub mod morphism;
pub mod search;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{validate_formula, Context, FormulaInContext, LogicError, Sequent, Signature, Term, Theory};
use compile::{for_each_assignment, Compiled, CompiledSequent, Interp, SymbolIndex, Truth};

pub use hom::{homomorphisms, is_homomorphism, isomorphic, iso_classes};
pub use morita::{models_equivalent, MoritaReport};
pub use morphism::{restrict_along, restrict_hom, TheoryMorphism, Verification};
pub use search::{enumerate_models, ModelSearch, SearchBudget};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("theory morphism `{0}` has not been verified")]
    UnverifiedMorphism(String),
    #[error("structure does not fit the signature: {0}")]
    BadStructure(String),
    #[error("`{symbol}` is not interpreted as a total single-valued graph in the given model")]
    NotFunctional { symbol: String },
    #[error(transparent)]
    Logic(#[from] LogicError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FuncTable {
    pub args: Vec<String>,
    pub result: String,
    /// Row-major over the argument carriers, first argument most significant.
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelTable {
    pub args: Vec<String>,
    pub tuples: BTreeSet<Vec<usize>>,
}

/// Finite carriers per sort (as element labels) with total function tables
/// and relation tuple sets. Elements are addressed by their index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteStructure {
    pub carriers: BTreeMap<String, Vec<String>>,
    pub functions: BTreeMap<String, FuncTable>,
    pub relations: BTreeMap<String, RelTable>,
}

pub fn row_index(args: &[usize], sizes: &[usize]) -> usize {
    args.iter().zip(sizes).fold(0, |acc, (a, s)| acc * s + a)
}

pub fn row_args(mut index: usize, sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for i in (0..sizes.len()).rev() {
        out[i] = index % sizes[i];
        index /= sizes[i];
    }
    out
}

/// All tuples over the given carrier sizes in row-major order.
pub fn all_tuples(sizes: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = sizes.iter().product();
    (0..total).map(|i| row_args(i, sizes)).collect()
}

impl FiniteStructure {
    /// Structure with carriers `0..n` labelled by their index. Function
    /// tables are filled with zeros and must be overwritten when the result
    /// carrier is empty but the domain is not.
    pub fn with_sizes(sig: &Signature, sizes: &BTreeMap<String, usize>) -> Self {
        let carriers: BTreeMap<String, Vec<String>> = sig
            .sorts
            .iter()
            .map(|s| {
                let n = sizes.get(s).copied().unwrap_or(0);
                (s.clone(), (0..n).map(|i| i.to_string()).collect())
            })
            .collect();
        let size = |s: &String| carriers[s].len();
        let functions = sig
            .functions
            .iter()
            .map(|f| {
                let rows: usize = f.args.iter().map(size).product();
                (f.name.clone(), FuncTable { args: f.args.clone(), result: f.result.clone(), values: vec![0; rows] })
            })
            .collect();
        let relations = sig
            .relations
            .iter()
            .map(|r| (r.name.clone(), RelTable { args: r.args.clone(), tuples: BTreeSet::new() }))
            .collect();
        FiniteStructure { carriers, functions, relations }
    }

    pub fn size(&self, sort: &str) -> usize {
        self.carriers.get(sort).map_or(0, Vec::len)
    }

    pub fn sizes(&self, sorts: &[String]) -> Vec<usize> {
        sorts.iter().map(|s| self.size(s)).collect()
    }

    /// Largest carrier.
    pub fn max_size(&self) -> usize {
        self.carriers.values().map(Vec::len).max().unwrap_or(0)
    }

    pub fn apply(&self, f: &str, args: &[usize]) -> usize {
        let t = &self.functions[f];
        t.values[row_index(args, &self.sizes(&t.args))]
    }

    pub fn set_function(&mut self, f: &str, args: &[usize], value: usize) {
        let sizes = self.sizes(&self.functions[f].args);
        let t = self.functions.get_mut(f).unwrap();
        t.values[row_index(args, &sizes)] = value;
    }

    pub fn holds_rel(&self, r: &str, args: &[usize]) -> bool {
        self.relations[r].tuples.contains(args)
    }

    /// Tables are total, carrier-closed and match the signature.
    pub fn check(&self, sig: &Signature) -> Result<(), SemanticsError> {
        for s in &sig.sorts {
            if !self.carriers.contains_key(s) {
                return Err(SemanticsError::BadStructure(format!("missing carrier for sort {s}")));
            }
        }
        for f in &sig.functions {
            let t = self
                .functions
                .get(&f.name)
                .ok_or_else(|| SemanticsError::BadStructure(format!("missing table for {}", f.name)))?;
            if t.args != f.args || t.result != f.result {
                return Err(SemanticsError::BadStructure(format!("table for {} has the wrong arity", f.name)));
            }
            let rows: usize = self.sizes(&f.args).iter().product();
            if t.values.len() != rows {
                return Err(SemanticsError::BadStructure(format!("table for {} is not total", f.name)));
            }
            let n = self.size(&f.result);
            if t.values.iter().any(|&v| v >= n) {
                return Err(SemanticsError::BadStructure(format!("table for {} leaves its carrier", f.name)));
            }
        }
        for r in &sig.relations {
            let t = self
                .relations
                .get(&r.name)
                .ok_or_else(|| SemanticsError::BadStructure(format!("missing relation {}", r.name)))?;
            let sizes = self.sizes(&r.args);
            if t.args != r.args || t.tuples.iter().any(|tu| tu.len() != sizes.len() || tu.iter().zip(&sizes).any(|(a, s)| a >= s)) {
                return Err(SemanticsError::BadStructure(format!("relation {} is not sort-compatible", r.name)));
            }
        }
        Ok(())
    }
}

/// A structure laid out against a signature's symbol positions.
pub struct View<'a> {
    sizes: Vec<usize>,
    funcs: Vec<(&'a [usize], Vec<usize>)>,
    rels: Vec<(Vec<bool>, Vec<usize>)>,
}

impl<'a> View<'a> {
    pub fn new(sig: &Signature, m: &'a FiniteStructure) -> Self {
        let sizes = sig.sorts.iter().map(|s| m.size(s)).collect();
        let funcs = sig
            .functions
            .iter()
            .map(|f| (m.functions[&f.name].values.as_slice(), m.sizes(&f.args)))
            .collect();
        let rels = sig
            .relations
            .iter()
            .map(|r| {
                let sz = m.sizes(&r.args);
                let mut bits = vec![false; sz.iter().product()];
                for t in &m.relations[&r.name].tuples {
                    bits[row_index(t, &sz)] = true;
                }
                (bits, sz)
            })
            .collect();
        View { sizes, funcs, rels }
    }
}

impl Interp for View<'_> {
    fn size(&self, sort: usize) -> usize {
        self.sizes[sort]
    }

    fn func(&self, f: usize, args: &[usize]) -> Option<usize> {
        let (values, sizes) = &self.funcs[f];
        Some(values[row_index(args, sizes)])
    }

    fn rel(&self, r: usize, args: &[usize]) -> Option<bool> {
        let (bits, sizes) = &self.rels[r];
        Some(bits[row_index(args, sizes)])
    }
}

/// The interpretation of a formula in context: the set of satisfying
/// assignments, each a tuple over the context's carriers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleSet {
    pub context: Context,
    pub tuples: BTreeSet<Vec<usize>>,
}

/// An element family `α_X: M(X) → M'(X)` indexed by sort.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Homomorphism {
    pub maps: BTreeMap<String, Vec<usize>>,
}

impl Homomorphism {
    pub fn identity(m: &FiniteStructure) -> Self {
        Homomorphism { maps: m.carriers.iter().map(|(s, c)| (s.clone(), (0..c.len()).collect())).collect() }
    }
}

/// Value of a term under an assignment of the context (by position).
pub fn eval_term(
    m: &FiniteStructure,
    sig: &Signature,
    ctx: &Context,
    t: &Term,
    assignment: &[usize],
) -> Result<usize, SemanticsError> {
    crate::syntax::validate_term(sig, ctx, t)?;
    Ok(eval_term_unchecked(m, ctx, t, assignment))
}

fn eval_term_unchecked(m: &FiniteStructure, ctx: &Context, t: &Term, assignment: &[usize]) -> usize {
    match t {
        Term::Var(v) => {
            let pos = ctx.vars.iter().rposition(|x| &x.name == v).expect("validated");
            assignment[pos]
        }
        Term::App(f, args) => {
            let vals: Vec<usize> = args.iter().map(|a| eval_term_unchecked(m, ctx, a, assignment)).collect();
            m.apply(f, &vals)
        }
    }
}

/// `M_x(φ)`: all tuples of the context satisfying the formula.
pub fn eval_formula(m: &FiniteStructure, sig: &Signature, obj: &FormulaInContext) -> Result<TupleSet, SemanticsError> {
    validate_formula(sig, &obj.context, &obj.formula)?;
    let idx = SymbolIndex::new(sig);
    let view = View::new(sig, m);
    Ok(eval_compiled(&Compiled::new(&idx, &obj.context, &obj.formula), &view, &obj.context))
}

pub(crate) fn eval_compiled<I: Interp>(c: &Compiled, view: &I, ctx: &Context) -> TupleSet {
    let mut env = vec![0; c.slots.max(1)];
    let mut tuples = BTreeSet::new();
    for_each_assignment(&c.ctx_sorts, view, &mut env, &mut |env| {
        if c.eval(view, env) == Truth::True {
            tuples.insert(env[..c.ctx_sorts.len()].to_vec());
        }
        true
    });
    TupleSet { context: ctx.clone(), tuples }
}

/// `M ⊨ φ ⇒ ψ`, i.e. `M_x(φ) ⊆ M_x(ψ)`.
pub fn holds_sequent(m: &FiniteStructure, sig: &Signature, s: &Sequent) -> Result<bool, SemanticsError> {
    crate::syntax::validate_sequent(sig, s)?;
    let idx = SymbolIndex::new(sig);
    let view = View::new(sig, m);
    Ok(CompiledSequent::new(&idx, &s.context, &s.lhs, &s.rhs).check(&view) == Truth::True)
}

/// Every axiom of the theory holds.
pub fn is_model(m: &FiniteStructure, t: &Theory) -> bool {
    let idx = SymbolIndex::new(&t.signature);
    let view = View::new(&t.signature, m);
    t.axioms.iter().all(|ax| {
        let s = &ax.sequent;
        CompiledSequent::new(&idx, &s.context, &s.lhs, &s.rhs).check(&view) == Truth::True
    })
}

/// Names of the axioms that fail in `m`.
pub fn failing_axioms(m: &FiniteStructure, t: &Theory) -> Vec<String> {
    let idx = SymbolIndex::new(&t.signature);
    let view = View::new(&t.signature, m);
    t.axioms
        .iter()
        .filter(|ax| {
            let s = &ax.sequent;
            CompiledSequent::new(&idx, &s.context, &s.lhs, &s.rhs).check(&view) != Truth::True
        })
        .map(|ax| ax.name.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Formula;

    fn eqrel_sig() -> Signature {
        Signature::new().with_sort("A").with_relation("R", &["A", "A"])
    }

    fn two_point(rel: &[(usize, usize)]) -> FiniteStructure {
        let sig = eqrel_sig();
        let mut m = FiniteStructure::with_sizes(&sig, &[("A".to_string(), 2)].into());
        m.relations.get_mut("R").unwrap().tuples = rel.iter().map(|&(a, b)| vec![a, b]).collect();
        m
    }

    #[test]
    fn projection_clause() {
        let sig = Signature::new().with_sort("A").with_sort("B").with_function("p", &["A"], "B");
        let mut m = FiniteStructure::with_sizes(&sig, &[("A".into(), 2), ("B".into(), 2)].into());
        m.set_function("p", &[1], 0);
        m.set_function("p", &[0], 1);
        let ctx = Context::from_pairs(&[("a", "A")]);
        assert_eq!(eval_term(&m, &sig, &ctx, &Term::var("a"), &[0]).unwrap(), 0);
        assert_eq!(eval_term(&m, &sig, &ctx, &Term::app("p", vec![Term::var("a")]), &[1]).unwrap(), 0);
    }

    #[test]
    fn top_bottom_and_existential_projection() {
        let sig = eqrel_sig();
        let m = two_point(&[(0, 0), (1, 1)]);
        let ctx = Context::from_pairs(&[("a", "A")]);
        let all = eval_formula(&m, &sig, &FormulaInContext::new(ctx.clone(), Formula::top())).unwrap();
        assert_eq!(all.tuples.len(), 2);
        let none = eval_formula(&m, &sig, &FormulaInContext::new(ctx.clone(), Formula::bot())).unwrap();
        assert!(none.tuples.is_empty());
        let ex = Formula::exists("a'", "A", Formula::rel("R", vec![Term::var("a"), Term::var("a'")]));
        let proj = eval_formula(&m, &sig, &FormulaInContext::new(ctx, ex)).unwrap();
        assert_eq!(proj.tuples, [vec![0], vec![1]].into_iter().collect());
    }

    #[test]
    fn reflexivity_fails_on_non_reflexive_relation() {
        let sig = eqrel_sig();
        let m = two_point(&[(0, 1)]);
        let s = Sequent::new(
            Context::from_pairs(&[("a", "A")]),
            Formula::top(),
            Formula::rel("R", vec![Term::var("a"), Term::var("a")]),
        );
        assert!(!holds_sequent(&m, &sig, &s).unwrap());
        let refl = Sequent::new(s.context.clone(), s.rhs.clone(), s.rhs.clone());
        assert!(holds_sequent(&m, &sig, &refl).unwrap());
    }

    #[test]
    fn row_index_roundtrip() {
        let sizes = [2, 3, 4];
        for i in 0..24 {
            assert_eq!(row_index(&row_args(i, &sizes), &sizes), i);
        }
    }
}
