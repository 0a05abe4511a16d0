//! Abstract syntax for many-sorted coherent logic.
//!
//! Formulas are built from equations and relation atoms with finite
//! conjunction, finite disjunction and existential quantification. There is
//! no negation, implication or universal quantifier: a [`Sequent`] `φ ⇒ ψ`
//! is implicitly universally closed over its [`Context`].
//!
//! `⊤` and `⊥` are the nullary conjunction and disjunction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while checking well-formedness of syntax.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("unknown {kind} `{name}` in `{at}`")]
    UnknownSymbol { kind: &'static str, name: String, at: String },
    #[error("sort mismatch in `{at}`: expected {expected}, found {found}")]
    SortMismatch { expected: String, found: String, at: String },
    #[error("unbound variable `{name}` in `{at}`")]
    UnboundVariable { name: String, at: String },
    #[error("arity mismatch in `{at}`: expected {expected} arguments, found {found}")]
    ArityMismatch { expected: usize, found: usize, at: String },
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FuncDecl {
    pub name: String,
    pub args: Vec<String>,
    pub result: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelDecl {
    pub name: String,
    pub args: Vec<String>,
}

/// A many-sorted signature. Declaration order is kept so that rendering and
/// enumeration are deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub sorts: Vec<String>,
    pub functions: Vec<FuncDecl>,
    pub relations: Vec<RelDecl>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_sort(mut self, name: &str) -> Self {
        self.sorts.push(name.to_string());
        self
    }

    pub fn with_function(mut self, name: &str, args: &[&str], result: &str) -> Self {
        self.functions.push(FuncDecl {
            name: name.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
            result: result.to_string(),
        });
        self
    }

    pub fn with_relation(mut self, name: &str, args: &[&str]) -> Self {
        self.relations.push(RelDecl {
            name: name.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
        });
        self
    }

    pub fn has_sort(&self, sort: &str) -> bool {
        self.sorts.iter().any(|s| s == sort)
    }

    pub fn function(&self, name: &str) -> Option<&FuncDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn relation(&self, name: &str) -> Option<&RelDecl> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn sort_index(&self, sort: &str) -> Option<usize> {
        self.sorts.iter().position(|s| s == sort)
    }

    /// Names are unique within each kind and every arity mentions declared sorts.
    pub fn check(&self) -> Result<(), LogicError> {
        let mut seen = BTreeSet::new();
        for s in &self.sorts {
            if !seen.insert(s.as_str()) {
                return Err(LogicError::Duplicate { kind: "sort", name: s.clone() });
            }
        }
        let mut seen = BTreeSet::new();
        for f in &self.functions {
            if !seen.insert(f.name.as_str()) {
                return Err(LogicError::Duplicate { kind: "function", name: f.name.clone() });
            }
            for s in f.args.iter().chain(std::iter::once(&f.result)) {
                if !self.has_sort(s) {
                    return Err(LogicError::UnknownSymbol {
                        kind: "sort",
                        name: s.clone(),
                        at: f.name.clone(),
                    });
                }
            }
        }
        let mut seen = BTreeSet::new();
        for r in &self.relations {
            if !seen.insert(r.name.as_str()) {
                return Err(LogicError::Duplicate { kind: "relation", name: r.name.clone() });
            }
            for s in &r.args {
                if !self.has_sort(s) {
                    return Err(LogicError::UnknownSymbol {
                        kind: "sort",
                        name: s.clone(),
                        at: r.name.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Var {
    pub name: String,
    pub sort: String,
}

/// An ordered list of typed variables. Order matters: the context denotes
/// the product of the carriers of its sorts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Context {
    pub vars: Vec<Var>,
}

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        Context {
            vars: pairs
                .iter()
                .map(|(n, s)| Var { name: n.to_string(), sort: s.to_string() })
                .collect(),
        }
    }

    pub fn push(&mut self, name: &str, sort: &str) {
        self.vars.push(Var { name: name.to_string(), sort: sort.to_string() });
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn sort_of(&self, name: &str) -> Option<&str> {
        // Later bindings shadow earlier ones.
        self.vars.iter().rev().find(|v| v.name == name).map(|v| v.sort.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.vars.iter().any(|v| v.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }

    pub fn sorts(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.sort.clone()).collect()
    }

    pub fn concat(&self, other: &Context) -> Context {
        let mut vars = self.vars.clone();
        vars.extend(other.vars.iter().cloned());
        Context { vars }
    }

    pub fn has_duplicates(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.vars.iter().any(|v| !seen.insert(v.name.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn app(f: &str, args: Vec<Term>) -> Term {
        Term::App(f.to_string(), args)
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.free_vars_into(out)),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    pub fn substitute(&self, s: &Subst) -> Term {
        match self {
            Term::Var(v) => s.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.substitute(s)).collect()),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    fn rename_symbols(&self, funcs: &BTreeMap<String, String>) -> Term {
        match self {
            Term::Var(_) => self.clone(),
            Term::App(f, args) => Term::App(
                funcs.get(f).cloned().unwrap_or_else(|| f.clone()),
                args.iter().map(|a| a.rename_symbols(funcs)).collect(),
            ),
        }
    }
}

/// A substitution of terms for variables.
pub type Subst = BTreeMap<String, Term>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    Eq(Term, Term),
    Rel(String, Vec<Term>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(String, String, Box<Formula>),
}

impl Formula {
    pub fn top() -> Formula {
        Formula::And(Vec::new())
    }

    pub fn bot() -> Formula {
        Formula::Or(Vec::new())
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Formula::And(v) if v.is_empty())
    }

    pub fn is_bot(&self) -> bool {
        matches!(self, Formula::Or(v) if v.is_empty())
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Eq(a, b)
    }

    pub fn rel(r: &str, args: Vec<Term>) -> Formula {
        Formula::Rel(r.to_string(), args)
    }

    pub fn exists(v: &str, sort: &str, body: Formula) -> Formula {
        Formula::Exists(v.to_string(), sort.to_string(), Box::new(body))
    }

    /// Nest existentials over the given context, innermost last.
    pub fn exists_many(ctx: &Context, body: Formula) -> Formula {
        ctx.vars
            .iter()
            .rev()
            .fold(body, |acc, v| Formula::Exists(v.name.clone(), v.sort.clone(), Box::new(acc)))
    }

    /// Binary conjunction that does not wrap when one side is `⊤`.
    pub fn and2(a: Formula, b: Formula) -> Formula {
        if a.is_top() {
            b
        } else if b.is_top() {
            a
        } else {
            Formula::And(vec![a, b])
        }
    }

    /// Componentwise equality of two variable lists.
    pub fn vars_eq(xs: &[String], ys: &[String]) -> Formula {
        let eqs: Vec<Formula> = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| Formula::Eq(Term::Var(x.clone()), Term::Var(y.clone())))
            .collect();
        if eqs.len() == 1 {
            eqs.into_iter().next().unwrap()
        } else {
            Formula::And(eqs)
        }
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Eq(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::Rel(_, args) => args.iter().for_each(|a| a.free_vars_into(out)),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.free_vars_into(out)),
            Formula::Exists(v, _, body) => {
                let mut inner = BTreeSet::new();
                body.free_vars_into(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    fn all_vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Exists(v, _, body) => {
                out.insert(v.clone());
                body.all_vars_into(out);
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.all_vars_into(out)),
            _ => self.free_vars_into(out),
        }
    }

    /// Every variable name occurring in the formula, bound or free.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.all_vars_into(&mut out);
        out
    }

    /// Capture-avoiding substitution. A bound variable that would capture a
    /// variable of an inserted term is renamed by appending primes until the
    /// name is unused, so results are deterministic.
    pub fn substitute(&self, s: &Subst) -> Formula {
        match self {
            Formula::Eq(a, b) => Formula::Eq(a.substitute(s), b.substitute(s)),
            Formula::Rel(r, args) => Formula::Rel(r.clone(), args.iter().map(|a| a.substitute(s)).collect()),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.substitute(s)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.substitute(s)).collect()),
            Formula::Exists(v, sort, body) => {
                let body_free = body.free_vars();
                let mut inner: Subst = s
                    .iter()
                    .filter(|(k, _)| *k != v && body_free.contains(*k))
                    .map(|(k, t)| (k.clone(), t.clone()))
                    .collect();
                let mut range_vars = BTreeSet::new();
                for t in inner.values() {
                    t.free_vars_into(&mut range_vars);
                }
                if range_vars.contains(v) {
                    let mut avoid = range_vars;
                    avoid.extend(body.all_vars());
                    avoid.extend(inner.keys().cloned());
                    let fresh = fresh_name(v, &avoid);
                    inner.insert(v.clone(), Term::Var(fresh.clone()));
                    Formula::Exists(fresh, sort.clone(), Box::new(body.substitute(&inner)))
                } else {
                    Formula::Exists(v.clone(), sort.clone(), Box::new(body.substitute(&inner)))
                }
            }
        }
    }

    /// Rename variables (a substitution whose range is variables).
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Formula {
        let s: Subst = map.iter().map(|(k, v)| (k.clone(), Term::Var(v.clone()))).collect();
        self.substitute(&s)
    }

    /// Rename function and relation symbols.
    pub fn rename_symbols(
        &self,
        funcs: &BTreeMap<String, String>,
        rels: &BTreeMap<String, String>,
        sorts: &BTreeMap<String, String>,
    ) -> Formula {
        match self {
            Formula::Eq(a, b) => Formula::Eq(a.rename_symbols(funcs), b.rename_symbols(funcs)),
            Formula::Rel(r, args) => Formula::Rel(
                rels.get(r).cloned().unwrap_or_else(|| r.clone()),
                args.iter().map(|a| a.rename_symbols(funcs)).collect(),
            ),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.rename_symbols(funcs, rels, sorts)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.rename_symbols(funcs, rels, sorts)).collect()),
            Formula::Exists(v, s, body) => Formula::Exists(
                v.clone(),
                sorts.get(s).cloned().unwrap_or_else(|| s.clone()),
                Box::new(body.rename_symbols(funcs, rels, sorts)),
            ),
        }
    }

    /// Number of atoms and connectives.
    pub fn size(&self) -> usize {
        match self {
            Formula::Eq(..) | Formula::Rel(..) => 1,
            Formula::And(fs) | Formula::Or(fs) => 1 + fs.iter().map(Formula::size).sum::<usize>(),
            Formula::Exists(_, _, b) => 1 + b.size(),
        }
    }

    /// Flatten nested connectives and absorb `⊤`/`⊥`. Preserves meaning in
    /// every structure, including those with empty carriers.
    pub fn simplify(&self) -> Formula {
        match self {
            Formula::Eq(a, b) if a == b => Formula::top(),
            Formula::Eq(..) | Formula::Rel(..) => self.clone(),
            Formula::And(fs) => {
                let mut out = Vec::new();
                for f in fs {
                    match f.simplify() {
                        Formula::And(inner) => out.extend(inner),
                        g if g.is_bot() => return Formula::bot(),
                        g => out.push(g),
                    }
                }
                dedup_keep_order(&mut out);
                if out.len() == 1 {
                    out.pop().unwrap()
                } else {
                    Formula::And(out)
                }
            }
            Formula::Or(fs) => {
                let mut out = Vec::new();
                for f in fs {
                    match f.simplify() {
                        Formula::Or(inner) => out.extend(inner),
                        g if g.is_top() => return Formula::top(),
                        g => out.push(g),
                    }
                }
                dedup_keep_order(&mut out);
                if out.len() == 1 {
                    out.pop().unwrap()
                } else {
                    Formula::Or(out)
                }
            }
            Formula::Exists(v, s, body) => {
                let b = body.simplify();
                if b.is_bot() {
                    Formula::bot()
                } else {
                    Formula::Exists(v.clone(), s.clone(), Box::new(b))
                }
            }
        }
    }

    pub fn function_symbols_into(&self, out: &mut BTreeSet<String>) {
        fn term(t: &Term, out: &mut BTreeSet<String>) {
            if let Term::App(f, args) = t {
                out.insert(f.clone());
                args.iter().for_each(|a| term(a, out));
            }
        }
        match self {
            Formula::Eq(a, b) => {
                term(a, out);
                term(b, out);
            }
            Formula::Rel(_, args) => args.iter().for_each(|a| term(a, out)),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.function_symbols_into(out)),
            Formula::Exists(_, _, b) => b.function_symbols_into(out),
        }
    }

    pub fn relation_symbols_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Rel(r, _) => {
                out.insert(r.clone());
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.relation_symbols_into(out)),
            Formula::Exists(_, _, b) => b.relation_symbols_into(out),
            Formula::Eq(..) => {}
        }
    }
}

fn dedup_keep_order(v: &mut Vec<Formula>) {
    let mut seen = BTreeSet::new();
    v.retain(|f| seen.insert(f.clone()));
}

/// Deterministic fresh name: `base'`, `base''`, ... avoiding `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let mut candidate = format!("{base}'");
    while avoid.contains(&candidate) {
        candidate.push('\'');
    }
    candidate
}

/// `φ ⇒ ψ` over a context that binds every free variable of both sides.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sequent {
    pub context: Context,
    pub lhs: Formula,
    pub rhs: Formula,
}

impl Sequent {
    pub fn new(context: Context, lhs: Formula, rhs: Formula) -> Self {
        Sequent { context, lhs, rhs }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Axiom {
    pub name: String,
    pub sequent: Sequent,
}

/// A signature together with named coherent axioms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Theory {
    pub name: String,
    pub signature: Signature,
    pub axioms: Vec<Axiom>,
}

impl Theory {
    pub fn new(name: &str, signature: Signature) -> Self {
        Theory { name: name.to_string(), signature, axioms: Vec::new() }
    }

    pub fn with_axiom(mut self, name: &str, sequent: Sequent) -> Self {
        self.axioms.push(Axiom { name: name.to_string(), sequent });
        self
    }

    pub fn axiom(&self, name: &str) -> Option<&Sequent> {
        self.axioms.iter().find(|a| a.name == name).map(|a| &a.sequent)
    }

    /// Check the signature and every axiom.
    pub fn validate(&self) -> Result<(), LogicError> {
        self.signature.check()?;
        let mut seen = BTreeSet::new();
        for ax in &self.axioms {
            if !seen.insert(ax.name.as_str()) {
                return Err(LogicError::Duplicate { kind: "axiom", name: ax.name.clone() });
            }
            validate_sequent(&self.signature, &ax.sequent)?;
        }
        Ok(())
    }
}

/// An object of a syntactic category: a formula in an ordered context.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FormulaInContext {
    pub context: Context,
    pub formula: Formula,
}

impl FormulaInContext {
    pub fn new(context: Context, formula: Formula) -> Self {
        FormulaInContext { context, formula }
    }

    /// `[x:S] ⊤`, the object standing for a sort.
    pub fn sort(var: &str, sort: &str) -> Self {
        FormulaInContext { context: Context::from_pairs(&[(var, sort)]), formula: Formula::top() }
    }

    /// Rename the context positionally to `names`, substituting in the formula.
    pub fn rename_context(&self, names: &[String]) -> FormulaInContext {
        assert_eq!(names.len(), self.context.len());
        let map: BTreeMap<String, String> = self
            .context
            .vars
            .iter()
            .zip(names)
            .filter(|(v, n)| &v.name != *n)
            .map(|(v, n)| (v.name.clone(), n.clone()))
            .collect();
        // Simultaneous renaming through temporaries avoids clobbering swaps.
        let formula = if map.is_empty() {
            self.formula.clone()
        } else {
            let s: Subst = map.iter().map(|(k, v)| (k.clone(), Term::Var(v.clone()))).collect();
            self.formula.substitute(&s)
        };
        FormulaInContext {
            context: Context {
                vars: self
                    .context
                    .vars
                    .iter()
                    .zip(names)
                    .map(|(v, n)| Var { name: n.clone(), sort: v.sort.clone() })
                    .collect(),
            },
            formula,
        }
    }

    /// A locally nameless form: context variables become `#0, #1, …` and
    /// bound variables `#b0, #b1, …` by binding depth.
    pub fn canonical(&self) -> (Vec<String>, Formula) {
        let mut env: BTreeMap<String, String> = BTreeMap::new();
        for (i, v) in self.context.vars.iter().enumerate() {
            env.insert(v.name.clone(), format!("#{i}"));
        }
        (self.context.sorts(), canonical_formula(&self.formula, &env, 0))
    }
}

fn canonical_term(t: &Term, env: &BTreeMap<String, String>) -> Term {
    match t {
        Term::Var(v) => Term::Var(env.get(v).cloned().unwrap_or_else(|| v.clone())),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| canonical_term(a, env)).collect()),
    }
}

fn canonical_formula(f: &Formula, env: &BTreeMap<String, String>, depth: usize) -> Formula {
    match f {
        Formula::Eq(a, b) => Formula::Eq(canonical_term(a, env), canonical_term(b, env)),
        Formula::Rel(r, args) => Formula::Rel(r.clone(), args.iter().map(|a| canonical_term(a, env)).collect()),
        Formula::And(fs) => Formula::And(fs.iter().map(|g| canonical_formula(g, env, depth)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|g| canonical_formula(g, env, depth)).collect()),
        Formula::Exists(v, s, body) => {
            let mut inner = env.clone();
            let name = format!("#b{depth}");
            inner.insert(v.clone(), name.clone());
            Formula::Exists(name, s.clone(), Box::new(canonical_formula(body, &inner, depth + 1)))
        }
    }
}

/// True iff the two objects differ only by a sort-preserving positionwise
/// renaming of their contexts (and renaming of bound variables).
pub fn alpha_equiv(a: &FormulaInContext, b: &FormulaInContext) -> bool {
    a.context.len() == b.context.len() && a.canonical() == b.canonical()
}

/// Sort of a well-formed term.
pub fn validate_term(sig: &Signature, ctx: &Context, t: &Term) -> Result<String, LogicError> {
    match t {
        Term::Var(v) => ctx
            .sort_of(v)
            .map(str::to_string)
            .ok_or_else(|| LogicError::UnboundVariable { name: v.clone(), at: t.to_string() }),
        Term::App(f, args) => {
            let decl = sig.function(f).ok_or_else(|| LogicError::UnknownSymbol {
                kind: "function",
                name: f.clone(),
                at: t.to_string(),
            })?;
            if decl.args.len() != args.len() {
                return Err(LogicError::ArityMismatch {
                    expected: decl.args.len(),
                    found: args.len(),
                    at: t.to_string(),
                });
            }
            for (a, expected) in args.iter().zip(&decl.args) {
                let found = validate_term(sig, ctx, a)?;
                if &found != expected {
                    return Err(LogicError::SortMismatch {
                        expected: expected.clone(),
                        found,
                        at: t.to_string(),
                    });
                }
            }
            Ok(decl.result.clone())
        }
    }
}

pub fn validate_formula(sig: &Signature, ctx: &Context, f: &Formula) -> Result<(), LogicError> {
    match f {
        Formula::Eq(a, b) => {
            let sa = validate_term(sig, ctx, a)?;
            let sb = validate_term(sig, ctx, b)?;
            if sa != sb {
                return Err(LogicError::SortMismatch { expected: sa, found: sb, at: f.to_string() });
            }
            Ok(())
        }
        Formula::Rel(r, args) => {
            let decl = sig.relation(r).ok_or_else(|| LogicError::UnknownSymbol {
                kind: "relation",
                name: r.clone(),
                at: f.to_string(),
            })?;
            if decl.args.len() != args.len() {
                return Err(LogicError::ArityMismatch {
                    expected: decl.args.len(),
                    found: args.len(),
                    at: f.to_string(),
                });
            }
            for (a, expected) in args.iter().zip(&decl.args) {
                let found = validate_term(sig, ctx, a)?;
                if &found != expected {
                    return Err(LogicError::SortMismatch {
                        expected: expected.clone(),
                        found,
                        at: f.to_string(),
                    });
                }
            }
            Ok(())
        }
        Formula::And(fs) | Formula::Or(fs) => fs.iter().try_for_each(|g| validate_formula(sig, ctx, g)),
        Formula::Exists(v, s, body) => {
            if !sig.has_sort(s) {
                return Err(LogicError::UnknownSymbol { kind: "sort", name: s.clone(), at: f.to_string() });
            }
            let mut inner = ctx.clone();
            inner.push(v, s);
            validate_formula(sig, &inner, body)
        }
    }
}

pub fn validate_context(sig: &Signature, ctx: &Context) -> Result<(), LogicError> {
    let mut seen = BTreeSet::new();
    for v in &ctx.vars {
        if !sig.has_sort(&v.sort) {
            return Err(LogicError::UnknownSymbol { kind: "sort", name: v.sort.clone(), at: v.name.clone() });
        }
        if !seen.insert(v.name.as_str()) {
            return Err(LogicError::Duplicate { kind: "context variable", name: v.name.clone() });
        }
    }
    Ok(())
}

pub fn validate_sequent(sig: &Signature, s: &Sequent) -> Result<(), LogicError> {
    validate_context(sig, &s.context)?;
    validate_formula(sig, &s.context, &s.lhs)?;
    validate_formula(sig, &s.context, &s.rhs)
}

pub fn validate_object(sig: &Signature, o: &FormulaInContext) -> Result<(), LogicError> {
    validate_context(sig, &o.context)?;
    validate_formula(sig, &o.context, &o.formula)
}

/// Substitution that also checks every replaced variable keeps its sort.
/// `ctx` types the formula's free variables, `target` types the inserted terms.
pub fn substitute_checked(
    sig: &Signature,
    ctx: &Context,
    target: &Context,
    f: &Formula,
    s: &Subst,
) -> Result<Formula, LogicError> {
    for (v, t) in s {
        let expected = ctx
            .sort_of(v)
            .ok_or_else(|| LogicError::UnboundVariable { name: v.clone(), at: f.to_string() })?;
        let found = validate_term(sig, target, t)?;
        if found != expected {
            return Err(LogicError::SortMismatch {
                expected: expected.to_string(),
                found,
                at: format!("{v} := {t}"),
            });
        }
    }
    Ok(f.substitute(s))
}

// ---------------------------------------------------------------------------
// Rendering. The surface syntax doubles as the `Display` form.

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(g, args) => {
                write!(f, "{g}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, g: &Formula) -> fmt::Result {
    let needs_parens = match g {
        Formula::Exists(..) => true,
        Formula::And(v) => v.len() >= 2,
        Formula::Or(v) => v.len() >= 2,
        _ => false,
    };
    if needs_parens {
        write!(f, "({g})")
    } else {
        write!(f, "{g}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Rel(r, args) => write!(f, "{}", Term::App(r.clone(), args.clone())),
            Formula::And(v) if v.is_empty() => write!(f, "true"),
            Formula::Or(v) if v.is_empty() => write!(f, "false"),
            Formula::And(v) if v.len() == 1 => write!(f, "&({})", v[0]),
            Formula::Or(v) if v.len() == 1 => write!(f, "|({})", v[0]),
            Formula::And(v) => {
                for (i, g) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    write_operand(f, g)?;
                }
                Ok(())
            }
            Formula::Or(v) => {
                for (i, g) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    match g {
                        Formula::And(w) if w.len() >= 2 => write!(f, "{g}")?,
                        _ => write_operand(f, g)?,
                    }
                }
                Ok(())
            }
            Formula::Exists(v, s, body) => write!(f, "exists {v}:{s}. {body}"),
        }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.vars.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", v.name, v.sort)?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} => {}", self.context, self.lhs, self.rhs)
    }
}

impl fmt::Display for FormulaInContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}. {}", self.context, self.formula)
    }
}
