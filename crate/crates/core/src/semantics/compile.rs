//! Index-based formulas evaluated against dense tables.
//!
//! Both total structures and the partial structures built during model search
//! implement [`Interp`]; evaluation is three-valued so that a partial table
//! can report `Unknown` for cells not yet decided.

use std::collections::BTreeMap;

use crate::syntax::{Context, Formula, Signature, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    False,
    Unknown,
    True,
}

impl Truth {
    fn and(self, other: Truth) -> Truth {
        use Truth::*;
        match (self, other) {
            (False, _) | (_, False) => False,
            (True, True) => True,
            _ => Unknown,
        }
    }

    fn or(self, other: Truth) -> Truth {
        use Truth::*;
        match (self, other) {
            (True, _) | (_, True) => True,
            (False, False) => False,
            _ => Unknown,
        }
    }
}

/// Read access to an interpretation indexed by signature position.
pub trait Interp {
    fn size(&self, sort: usize) -> usize;
    fn func(&self, f: usize, args: &[usize]) -> Option<usize>;
    fn rel(&self, r: usize, args: &[usize]) -> Option<bool>;
}

#[derive(Debug, Clone)]
pub enum CTerm {
    Var(usize),
    App(usize, Vec<CTerm>),
}

#[derive(Debug, Clone)]
pub enum CFormula {
    Eq(CTerm, CTerm),
    Rel(usize, Vec<CTerm>),
    And(Vec<CFormula>),
    Or(Vec<CFormula>),
    Exists(usize, usize, Box<CFormula>),
}

/// Symbol tables of a signature, for compiling names to positions.
#[derive(Debug, Clone)]
pub struct SymbolIndex {
    pub sorts: BTreeMap<String, usize>,
    pub funcs: BTreeMap<String, usize>,
    pub rels: BTreeMap<String, usize>,
    /// Argument sorts of each function, as sort positions.
    pub func_args: Vec<Vec<usize>>,
    pub func_result: Vec<usize>,
    pub rel_args: Vec<Vec<usize>>,
}

impl SymbolIndex {
    pub fn new(sig: &Signature) -> Self {
        let sorts: BTreeMap<String, usize> = sig.sorts.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let funcs = sig.functions.iter().enumerate().map(|(i, f)| (f.name.clone(), i)).collect();
        let rels = sig.relations.iter().enumerate().map(|(i, r)| (r.name.clone(), i)).collect();
        let func_args = sig.functions.iter().map(|f| f.args.iter().map(|a| sorts[a]).collect()).collect();
        let func_result = sig.functions.iter().map(|f| sorts[&f.result]).collect();
        let rel_args = sig.relations.iter().map(|r| r.args.iter().map(|a| sorts[a]).collect()).collect();
        SymbolIndex { sorts, funcs, rels, func_args, func_result, rel_args }
    }
}

/// A formula compiled against a signature and a context. Context variables
/// occupy slots `0..ctx.len()`; bound variables take the following slots.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub formula: CFormula,
    pub ctx_sorts: Vec<usize>,
    pub slots: usize,
}

struct Compiler<'a> {
    idx: &'a SymbolIndex,
    next: usize,
    max: usize,
}

impl Compiler<'_> {
    fn term(&self, t: &Term, env: &BTreeMap<String, usize>) -> CTerm {
        match t {
            Term::Var(v) => CTerm::Var(*env.get(v).unwrap_or_else(|| panic!("unbound variable {v}"))),
            Term::App(f, args) => CTerm::App(
                *self.idx.funcs.get(f).unwrap_or_else(|| panic!("unknown function {f}")),
                args.iter().map(|a| self.term(a, env)).collect(),
            ),
        }
    }

    fn formula(&mut self, f: &Formula, env: &BTreeMap<String, usize>) -> CFormula {
        match f {
            Formula::Eq(a, b) => CFormula::Eq(self.term(a, env), self.term(b, env)),
            Formula::Rel(r, args) => CFormula::Rel(
                *self.idx.rels.get(r).unwrap_or_else(|| panic!("unknown relation {r}")),
                args.iter().map(|a| self.term(a, env)).collect(),
            ),
            Formula::And(fs) => CFormula::And(fs.iter().map(|g| self.formula(g, env)).collect()),
            Formula::Or(fs) => CFormula::Or(fs.iter().map(|g| self.formula(g, env)).collect()),
            Formula::Exists(v, s, body) => {
                let slot = self.next;
                self.next += 1;
                self.max = self.max.max(self.next);
                let mut inner = env.clone();
                inner.insert(v.clone(), slot);
                let body = self.formula(body, &inner);
                self.next -= 1;
                CFormula::Exists(slot, self.idx.sorts[s], Box::new(body))
            }
        }
    }
}

impl Compiled {
    /// Compile a well-formed formula. Panics on ill-formed input, which the
    /// callers rule out by validating first.
    pub fn new(idx: &SymbolIndex, ctx: &Context, f: &Formula) -> Compiled {
        let mut env = BTreeMap::new();
        for (i, v) in ctx.vars.iter().enumerate() {
            env.insert(v.name.clone(), i);
        }
        let mut c = Compiler { idx, next: ctx.len(), max: ctx.len() };
        let formula = c.formula(f, &env);
        Compiled {
            formula,
            ctx_sorts: ctx.vars.iter().map(|v| idx.sorts[&v.sort]).collect(),
            slots: c.max,
        }
    }

    pub fn env(&self) -> Vec<usize> {
        vec![0; self.slots]
    }

    pub fn eval<I: Interp>(&self, m: &I, env: &mut [usize]) -> Truth {
        eval_formula(&self.formula, m, env)
    }
}

pub fn eval_term<I: Interp>(t: &CTerm, m: &I, env: &[usize]) -> Option<usize> {
    match t {
        CTerm::Var(i) => Some(env[*i]),
        CTerm::App(f, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_term(a, m, env)?);
            }
            m.func(*f, &vals)
        }
    }
}

pub fn eval_formula<I: Interp>(f: &CFormula, m: &I, env: &mut [usize]) -> Truth {
    match f {
        CFormula::Eq(a, b) => match (eval_term(a, m, env), eval_term(b, m, env)) {
            (Some(x), Some(y)) => {
                if x == y {
                    Truth::True
                } else {
                    Truth::False
                }
            }
            _ => Truth::Unknown,
        },
        CFormula::Rel(r, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                match eval_term(a, m, env) {
                    Some(v) => vals.push(v),
                    None => return Truth::Unknown,
                }
            }
            match m.rel(*r, &vals) {
                Some(true) => Truth::True,
                Some(false) => Truth::False,
                None => Truth::Unknown,
            }
        }
        CFormula::And(fs) => {
            let mut acc = Truth::True;
            for g in fs {
                acc = acc.and(eval_formula(g, m, env));
                if acc == Truth::False {
                    break;
                }
            }
            acc
        }
        CFormula::Or(fs) => {
            let mut acc = Truth::False;
            for g in fs {
                acc = acc.or(eval_formula(g, m, env));
                if acc == Truth::True {
                    break;
                }
            }
            acc
        }
        CFormula::Exists(slot, sort, body) => {
            let mut acc = Truth::False;
            for v in 0..m.size(*sort) {
                env[*slot] = v;
                acc = acc.or(eval_formula(body, m, env));
                if acc == Truth::True {
                    break;
                }
            }
            acc
        }
    }
}

/// Calls `visit` with every assignment of the context slots; stops early when
/// `visit` returns `false`. Returns `false` iff stopped early.
pub fn for_each_assignment<I: Interp>(
    sorts: &[usize],
    m: &I,
    env: &mut [usize],
    visit: &mut dyn FnMut(&mut [usize]) -> bool,
) -> bool {
    fn go<I: Interp>(
        i: usize,
        sorts: &[usize],
        m: &I,
        env: &mut [usize],
        visit: &mut dyn FnMut(&mut [usize]) -> bool,
    ) -> bool {
        if i == sorts.len() {
            return visit(env);
        }
        for v in 0..m.size(sorts[i]) {
            env[i] = v;
            if !go(i + 1, sorts, m, env, visit) {
                return false;
            }
        }
        true
    }
    go(0, sorts, m, env, visit)
}

/// A sequent compiled with both sides sharing the same slots.
#[derive(Debug, Clone)]
pub struct CompiledSequent {
    pub lhs: Compiled,
    pub rhs: Compiled,
    pub ctx_sorts: Vec<usize>,
    pub slots: usize,
}

impl CompiledSequent {
    pub fn new(idx: &SymbolIndex, ctx: &Context, lhs: &Formula, rhs: &Formula) -> Self {
        let lhs = Compiled::new(idx, ctx, lhs);
        let rhs = Compiled::new(idx, ctx, rhs);
        let slots = lhs.slots.max(rhs.slots);
        CompiledSequent { ctx_sorts: lhs.ctx_sorts.clone(), lhs, rhs, slots }
    }

    /// `False` if some assignment makes the left side true and the right side
    /// false; `True` if every assignment is settled in favour; else `Unknown`.
    pub fn check<I: Interp>(&self, m: &I) -> Truth {
        let mut env = vec![0; self.slots.max(1)];
        let mut result = Truth::True;
        let sorts = self.ctx_sorts.clone();
        for_each_assignment(&sorts, m, &mut env, &mut |env| {
            let l = self.lhs.eval(m, env);
            if l == Truth::False {
                return true;
            }
            let r = self.rhs.eval(m, env);
            match (l, r) {
                (_, Truth::True) => true,
                (Truth::True, Truth::False) => {
                    result = Truth::False;
                    false
                }
                _ => {
                    result = Truth::Unknown;
                    true
                }
            }
        });
        result
    }
}
