//! Finite model search.
//!
//! Carriers are chosen first (every size vector up to the bound, in
//! lexicographic order), then table cells are filled depth-first in a fixed
//! order. After each assignment the axioms mentioning the assigned symbol are
//! evaluated three-valued over the partial tables and the branch is cut as
//! soon as some instance has a true left side and a false right side. The
//! output is the full set of models in a deterministic order; pruning only
//! removes branches that contain no model.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use super::compile::{CompiledSequent, Interp, SymbolIndex, Truth};
use super::{row_args, FiniteStructure, FuncTable, RelTable, SemanticsError};
use crate::syntax::Theory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    /// Cap on visited search nodes (cell assignments).
    pub max_nodes: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_nodes: 20_000_000 }
    }
}

struct Partial {
    sizes: Vec<usize>,
    funcs: Vec<Vec<Option<usize>>>,
    func_sizes: Vec<Vec<usize>>,
    rels: Vec<Vec<Option<bool>>>,
    rel_sizes: Vec<Vec<usize>>,
}

impl Interp for Partial {
    fn size(&self, sort: usize) -> usize {
        self.sizes[sort]
    }

    fn func(&self, f: usize, args: &[usize]) -> Option<usize> {
        self.funcs[f][super::row_index(args, &self.func_sizes[f])]
    }

    fn rel(&self, r: usize, args: &[usize]) -> Option<bool> {
        self.rels[r][super::row_index(args, &self.rel_sizes[r])]
    }
}

#[derive(Debug, Clone, Copy)]
enum Cell {
    Func(usize, usize),
    Rel(usize, usize),
}

/// Bounded search for models of a theory, optionally with part of the
/// structure held fixed.
pub struct ModelSearch<'a> {
    theory: &'a Theory,
    idx: SymbolIndex,
    axioms: Vec<CompiledSequent>,
    /// For each axiom, the function and relation positions it mentions.
    axiom_funcs: Vec<BTreeSet<usize>>,
    axiom_rels: Vec<BTreeSet<usize>>,
    max_size: Vec<usize>,
    fixed: Option<FiniteStructure>,
    fixed_sorts: Vec<bool>,
    fixed_funcs: Vec<bool>,
    fixed_rels: Vec<bool>,
    budget: SearchBudget,
    nodes: u64,
}

impl<'a> ModelSearch<'a> {
    /// Every carrier between 0 and `k`.
    pub fn new(theory: &'a Theory, k: usize) -> Self {
        let sig = &theory.signature;
        let idx = SymbolIndex::new(sig);
        let mut axioms = Vec::new();
        let mut axiom_funcs = Vec::new();
        let mut axiom_rels = Vec::new();
        for ax in &theory.axioms {
            let s = &ax.sequent;
            axioms.push(CompiledSequent::new(&idx, &s.context, &s.lhs, &s.rhs));
            let mut fs = BTreeSet::new();
            let mut rs = BTreeSet::new();
            s.lhs.function_symbols_into(&mut fs);
            s.rhs.function_symbols_into(&mut fs);
            s.lhs.relation_symbols_into(&mut rs);
            s.rhs.relation_symbols_into(&mut rs);
            axiom_funcs.push(fs.iter().map(|f| idx.funcs[f]).collect());
            axiom_rels.push(rs.iter().map(|r| idx.rels[r]).collect());
        }
        ModelSearch {
            theory,
            axioms,
            axiom_funcs,
            axiom_rels,
            max_size: vec![k; sig.sorts.len()],
            fixed: None,
            fixed_sorts: vec![false; sig.sorts.len()],
            fixed_funcs: vec![false; sig.functions.len()],
            fixed_rels: vec![false; sig.relations.len()],
            idx,
            budget: SearchBudget::default(),
            nodes: 0,
        }
    }

    pub fn budget(mut self, budget: SearchBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn max_size_for(mut self, sort: &str, k: usize) -> Self {
        let i = self.idx.sorts[sort];
        self.max_size[i] = k;
        self
    }

    /// Hold the carriers of `sorts` and the tables of `funcs`/`rels` at their
    /// values in `partial`. The named symbols' sorts must all be fixed.
    pub fn fix(mut self, partial: FiniteStructure, sorts: &[String], funcs: &[String], rels: &[String]) -> Self {
        for s in sorts {
            self.fixed_sorts[self.idx.sorts[s]] = true;
        }
        for f in funcs {
            self.fixed_funcs[self.idx.funcs[f]] = true;
        }
        for r in rels {
            self.fixed_rels[self.idx.rels[r]] = true;
        }
        self.fixed = Some(partial);
        self
    }

    pub fn nodes_visited(&self) -> u64 {
        self.nodes
    }

    /// Visit every model in order until `visit` breaks.
    pub fn for_each(
        &mut self,
        visit: &mut dyn FnMut(FiniteStructure) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>, SemanticsError> {
        let sig = &self.theory.signature;
        let n = sig.sorts.len();
        let free: Vec<usize> = (0..n).filter(|&i| !self.fixed_sorts[i]).collect();
        let mut sizes = vec![0usize; n];
        for (i, size) in sizes.iter_mut().enumerate() {
            if self.fixed_sorts[i] {
                *size = self.fixed.as_ref().unwrap().size(&sig.sorts[i]);
            }
        }
        // Odometer over the free sorts, first free sort most significant.
        loop {
            if self.search_sizes(&sizes, visit)?.is_break() {
                return Ok(ControlFlow::Break(()));
            }
            let mut pos = free.len();
            loop {
                if pos == 0 {
                    return Ok(ControlFlow::Continue(()));
                }
                pos -= 1;
                let s = free[pos];
                if sizes[s] < self.max_size[s] {
                    sizes[s] += 1;
                    for &t in &free[pos + 1..] {
                        sizes[t] = 0;
                    }
                    break;
                }
            }
        }
    }

    pub fn collect(&mut self) -> Result<Vec<FiniteStructure>, SemanticsError> {
        let mut out = Vec::new();
        let _ = self.for_each(&mut |m| {
            out.push(m);
            ControlFlow::Continue(())
        })?;
        Ok(out)
    }

    pub fn first(&mut self) -> Result<Option<FiniteStructure>, SemanticsError> {
        let mut out = None;
        let _ = self.for_each(&mut |m| {
            out = Some(m);
            ControlFlow::Break(())
        })?;
        Ok(out)
    }

    fn search_sizes(
        &mut self,
        sizes: &[usize],
        visit: &mut dyn FnMut(FiniteStructure) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>, SemanticsError> {
        // Each size vector is a node too: with many sorts the vectors
        // alone outnumber any cell assignment.
        self.tick()?;
        let sig = &self.theory.signature;
        let func_sizes: Vec<Vec<usize>> = self.idx.func_args.iter().map(|a| a.iter().map(|&s| sizes[s]).collect()).collect();
        let rel_sizes: Vec<Vec<usize>> = self.idx.rel_args.iter().map(|a| a.iter().map(|&s| sizes[s]).collect()).collect();
        let mut partial = Partial {
            sizes: sizes.to_vec(),
            funcs: func_sizes.iter().map(|s| vec![None; s.iter().product()]).collect(),
            func_sizes: func_sizes.clone(),
            rels: rel_sizes.iter().map(|s| vec![None; s.iter().product()]).collect(),
            rel_sizes: rel_sizes.clone(),
        };
        if let Some(fixed) = &self.fixed {
            for (i, f) in sig.functions.iter().enumerate() {
                if self.fixed_funcs[i] {
                    partial.funcs[i] = fixed.functions[&f.name].values.iter().map(|&v| Some(v)).collect();
                }
            }
            for (i, r) in sig.relations.iter().enumerate() {
                if self.fixed_rels[i] {
                    let t = &fixed.relations[&r.name];
                    let mut bits = vec![Some(false); rel_sizes[i].iter().product()];
                    for tu in &t.tuples {
                        bits[super::row_index(tu, &rel_sizes[i])] = Some(true);
                    }
                    partial.rels[i] = bits;
                }
            }
        }
        // Root check covers axioms that mention no free symbol at all.
        if self.axioms.iter().any(|a| a.check(&partial) == Truth::False) {
            return Ok(ControlFlow::Continue(()));
        }
        let mut cells = Vec::new();
        for (r, cells_r) in partial.rels.iter().enumerate() {
            if !self.fixed_rels[r] {
                cells.extend((0..cells_r.len()).map(|row| Cell::Rel(r, row)));
            }
        }
        for (f, cells_f) in partial.funcs.iter().enumerate() {
            if !self.fixed_funcs[f] {
                cells.extend((0..cells_f.len()).map(|row| Cell::Func(f, row)));
            }
        }
        let mut flow = ControlFlow::Continue(());
        self.dfs(&mut partial, &cells, 0, visit, &mut flow)?;
        Ok(flow)
    }

    fn tick(&mut self) -> Result<(), SemanticsError> {
        self.nodes += 1;
        if self.nodes > self.budget.max_nodes {
            return Err(SemanticsError::BudgetExceeded(format!(
                "model search over `{}` visited more than {} nodes",
                self.theory.name, self.budget.max_nodes
            )));
        }
        Ok(())
    }

    fn violated_after(&self, partial: &Partial, cell: Cell) -> bool {
        self.axioms.iter().enumerate().any(|(i, a)| {
            let relevant = match cell {
                Cell::Func(f, _) => self.axiom_funcs[i].contains(&f),
                Cell::Rel(r, _) => self.axiom_rels[i].contains(&r),
            };
            relevant && a.check(partial) == Truth::False
        })
    }

    fn dfs(
        &mut self,
        partial: &mut Partial,
        cells: &[Cell],
        i: usize,
        visit: &mut dyn FnMut(FiniteStructure) -> ControlFlow<()>,
        flow: &mut ControlFlow<()>,
    ) -> Result<(), SemanticsError> {
        if i == cells.len() {
            // All cells decided: the partial checks were exact.
            if self.axioms.iter().all(|a| a.check(partial) == Truth::True) {
                *flow = visit(self.materialize(partial));
            }
            return Ok(());
        }
        let cell = cells[i];
        let choices = match cell {
            Cell::Func(f, _) => partial.sizes[self.idx.func_result[f]],
            Cell::Rel(..) => 2,
        };
        for v in 0..choices {
            self.tick()?;
            match cell {
                Cell::Func(f, row) => partial.funcs[f][row] = Some(v),
                Cell::Rel(r, row) => partial.rels[r][row] = Some(v == 1),
            }
            if !self.violated_after(partial, cell) {
                self.dfs(partial, cells, i + 1, visit, flow)?;
                if flow.is_break() {
                    break;
                }
            }
        }
        match cell {
            Cell::Func(f, row) => partial.funcs[f][row] = None,
            Cell::Rel(r, row) => partial.rels[r][row] = None,
        }
        Ok(())
    }

    fn materialize(&self, partial: &Partial) -> FiniteStructure {
        let sig = &self.theory.signature;
        let carriers = sig
            .sorts
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let labels = match (&self.fixed, self.fixed_sorts[i]) {
                    (Some(fixed), true) => fixed.carriers[s].clone(),
                    _ => (0..partial.sizes[i]).map(|e| e.to_string()).collect(),
                };
                (s.clone(), labels)
            })
            .collect();
        let functions = sig
            .functions
            .iter()
            .enumerate()
            .map(|(i, f)| {
                (
                    f.name.clone(),
                    FuncTable {
                        args: f.args.clone(),
                        result: f.result.clone(),
                        values: partial.funcs[i].iter().map(|v| v.unwrap()).collect(),
                    },
                )
            })
            .collect();
        let relations = sig
            .relations
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let tuples = partial.rels[i]
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| **b == Some(true))
                    .map(|(row, _)| row_args(row, &partial.rel_sizes[i]))
                    .collect();
                (r.name.clone(), RelTable { args: r.args.clone(), tuples })
            })
            .collect();
        FiniteStructure { carriers, functions, relations }
    }
}

/// All models of `t` whose carriers each have at most `k` elements, in a
/// deterministic order (size vectors lexicographically, then tables).
pub fn enumerate_models(t: &Theory, k: usize, budget: SearchBudget) -> Result<Vec<FiniteStructure>, SemanticsError> {
    ModelSearch::new(t, k).budget(budget).collect()
}

/// Models of `t` that extend `partial` on the given sorts and symbols, with
/// every other carrier of size at most `k`.
pub fn expansions<'a>(
    t: &'a Theory,
    partial: &FiniteStructure,
    k: usize,
    budget: SearchBudget,
) -> ModelSearch<'a> {
    let sig = &t.signature;
    let sorts: Vec<String> = sig.sorts.iter().filter(|s| partial.carriers.contains_key(*s)).cloned().collect();
    let funcs: Vec<String> =
        sig.functions.iter().filter(|f| partial.functions.contains_key(&f.name)).map(|f| f.name.clone()).collect();
    let rels: Vec<String> =
        sig.relations.iter().filter(|r| partial.relations.contains_key(&r.name)).map(|r| r.name.clone()).collect();
    ModelSearch::new(t, k).budget(budget).fix(partial.clone(), &sorts, &funcs, &rels)
}

/// Sizes of the carriers, for reporting.
pub fn size_profile(m: &FiniteStructure) -> BTreeMap<String, usize> {
    m.carriers.iter().map(|(s, c)| (s.clone(), c.len())).collect()
}
