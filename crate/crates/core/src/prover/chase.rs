//! Chase states, compiled rules and conjunctive-query matching.
//!
//! Formulas are brought into disjunctive normal form and flattened so that
//! every function application becomes a `Func` atom `f(x⃗) = y` over
//! variables. A state is a set of facts over labelled elements whose
//! equality is kept as a congruence by a union-find.

use std::collections::{BTreeMap, BTreeSet};

use crate::semantics::compile::SymbolIndex;
use crate::semantics::{FiniteStructure, FuncTable, RelTable};
use crate::syntax::{Context, Formula, Signature, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Atom {
    Func(usize, Vec<usize>, usize),
    Rel(usize, Vec<usize>),
    Eq(usize, usize),
}

/// A conjunctive query `∃e⃗ ∃t⃗. atoms` over variables `0..sorts.len()`; the
/// first `nctx` variables are the free (context) variables.
#[derive(Debug, Clone)]
pub(crate) struct Cq {
    pub sorts: Vec<usize>,
    pub names: Vec<String>,
    pub nctx: usize,
    /// Variables defined as function values, i.e. results of `Func` atoms.
    pub term_var: Vec<bool>,
    pub atoms: Vec<Atom>,
}

#[derive(Debug, Clone)]
enum ITerm {
    Var(usize),
    App(usize, Vec<ITerm>),
}

#[derive(Debug, Clone)]
enum IAtom {
    Eq(ITerm, ITerm),
    Rel(usize, Vec<ITerm>),
}

#[derive(Debug, Clone, Default)]
struct Conj {
    exist: Vec<usize>,
    atoms: Vec<IAtom>,
}

struct Dnf<'a> {
    idx: &'a SymbolIndex,
    /// (name, sort) of every variable, context first.
    vars: Vec<(String, usize)>,
}

impl Dnf<'_> {
    fn term(&self, t: &Term, env: &BTreeMap<String, usize>) -> ITerm {
        match t {
            Term::Var(v) => ITerm::Var(env[v]),
            Term::App(f, args) => ITerm::App(self.idx.funcs[f], args.iter().map(|a| self.term(a, env)).collect()),
        }
    }

    fn formula(&mut self, f: &Formula, env: &BTreeMap<String, usize>) -> Vec<Conj> {
        match f {
            Formula::Eq(a, b) => {
                vec![Conj { exist: Vec::new(), atoms: vec![IAtom::Eq(self.term(a, env), self.term(b, env))] }]
            }
            Formula::Rel(r, args) => vec![Conj {
                exist: Vec::new(),
                atoms: vec![IAtom::Rel(self.idx.rels[r], args.iter().map(|a| self.term(a, env)).collect())],
            }],
            Formula::And(fs) => {
                let mut acc = vec![Conj::default()];
                for g in fs {
                    let parts = self.formula(g, env);
                    let mut next = Vec::with_capacity(acc.len() * parts.len());
                    for a in &acc {
                        for p in &parts {
                            let mut c = a.clone();
                            c.exist.extend(p.exist.iter().copied());
                            c.atoms.extend(p.atoms.iter().cloned());
                            next.push(c);
                        }
                    }
                    acc = next;
                }
                acc
            }
            Formula::Or(fs) => fs.iter().flat_map(|g| self.formula(g, env)).collect(),
            Formula::Exists(v, s, body) => {
                let i = self.vars.len();
                self.vars.push((v.clone(), self.idx.sorts[s]));
                let mut inner = env.clone();
                inner.insert(v.clone(), i);
                let mut out = self.formula(body, &inner);
                for c in &mut out {
                    c.exist.insert(0, i);
                }
                out
            }
        }
    }
}

struct Flattener<'a> {
    idx: &'a SymbolIndex,
    cq: Cq,
    memo: BTreeMap<(usize, Vec<usize>), usize>,
    sig: &'a Signature,
}

impl Flattener<'_> {
    fn term(&mut self, t: &ITerm, local: &BTreeMap<usize, usize>) -> usize {
        match t {
            ITerm::Var(i) => local[i],
            ITerm::App(f, args) => {
                let vs: Vec<usize> = args.iter().map(|a| self.term(a, local)).collect();
                if let Some(&v) = self.memo.get(&(*f, vs.clone())) {
                    return v;
                }
                let v = self.cq.sorts.len();
                self.cq.sorts.push(self.idx.func_result[*f]);
                self.cq.names.push(format!("{}#{}", self.sig.functions[*f].name, v));
                self.cq.term_var.push(true);
                self.cq.atoms.push(Atom::Func(*f, vs.clone(), v));
                self.memo.insert((*f, vs), v);
                v
            }
        }
    }
}

/// DNF of `f` in context `ctx`, each disjunct flattened to a query.
pub(crate) fn compile_dnf(sig: &Signature, idx: &SymbolIndex, ctx: &Context, f: &Formula) -> Vec<Cq> {
    let mut env = BTreeMap::new();
    let mut d = Dnf { idx, vars: Vec::new() };
    for v in &ctx.vars {
        env.insert(v.name.clone(), d.vars.len());
        d.vars.push((v.name.clone(), idx.sorts[&v.sort]));
    }
    let conjs = d.formula(f, &env);
    let nctx = ctx.len();
    conjs
        .into_iter()
        .map(|c| {
            let mut local = BTreeMap::new();
            let mut cq = Cq { sorts: Vec::new(), names: Vec::new(), nctx, term_var: Vec::new(), atoms: Vec::new() };
            for i in (0..nctx).chain(c.exist.iter().copied()) {
                local.insert(i, cq.sorts.len());
                cq.sorts.push(d.vars[i].1);
                cq.names.push(d.vars[i].0.clone());
                cq.term_var.push(false);
            }
            let mut fl = Flattener { idx, cq, memo: BTreeMap::new(), sig };
            for a in &c.atoms {
                match a {
                    IAtom::Eq(s, t) => {
                        let x = fl.term(s, &local);
                        let y = fl.term(t, &local);
                        fl.cq.atoms.push(Atom::Eq(x, y));
                    }
                    IAtom::Rel(r, ts) => {
                        let vs = ts.iter().map(|t| fl.term(t, &local)).collect();
                        fl.cq.atoms.push(Atom::Rel(*r, vs));
                    }
                }
            }
            fl.cq
        })
        .collect()
}

/// A set of facts over elements with a congruence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct State {
    pub sort: Vec<usize>,
    pub parent: Vec<usize>,
    pub funcs: BTreeMap<(usize, Vec<usize>), usize>,
    pub rels: BTreeSet<(usize, Vec<usize>)>,
}

impl State {
    pub fn new() -> Self {
        State { sort: Vec::new(), parent: Vec::new(), funcs: BTreeMap::new(), rels: BTreeSet::new() }
    }

    pub fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    pub fn add_element(&mut self, sort: usize) -> usize {
        let id = self.sort.len();
        self.sort.push(sort);
        self.parent.push(id);
        id
    }

    pub fn roots_of(&self, sort: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.sort.len()).filter(move |&e| self.parent[e] == e && self.sort[e] == sort)
    }

    pub fn canon(&self, xs: &[usize]) -> Vec<usize> {
        xs.iter().map(|&x| self.find(x)).collect()
    }

    /// Merge two elements and close under congruence. Returns the merges
    /// performed as `(kept, absorbed)` pairs.
    pub fn merge(&mut self, a: usize, b: usize) -> Vec<(usize, usize)> {
        let mut done = Vec::new();
        let mut queue = vec![(a, b)];
        while let Some((a, b)) = queue.pop() {
            let (ra, rb) = (self.find(a), self.find(b));
            if ra == rb {
                continue;
            }
            let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[drop] = keep;
            done.push((keep, drop));
            for x in 0..self.parent.len() {
                let r = self.find(x);
                self.parent[x] = r;
            }
            let old = std::mem::take(&mut self.funcs);
            for ((f, args), v) in old {
                let key = (f, self.canon(&args));
                let v = self.find(v);
                match self.funcs.get(&key) {
                    Some(&w) if w != v => queue.push((w, v)),
                    Some(_) => {}
                    None => {
                        self.funcs.insert(key, v);
                    }
                }
            }
            let old = std::mem::take(&mut self.rels);
            self.rels = old.into_iter().map(|(r, args)| (r, self.canon(&args))).collect();
        }
        done
    }

    /// `f(args)`, creating a fresh element if undefined.
    pub fn apply(&mut self, f: usize, args: &[usize], result_sort: usize, created: &mut Vec<usize>) -> usize {
        let key = (f, self.canon(args));
        if let Some(&v) = self.funcs.get(&key) {
            return self.find(v);
        }
        let v = self.add_element(result_sort);
        created.push(v);
        self.funcs.insert(key, v);
        v
    }

    /// All matches of `cq` extending `pre`; `visit` returns false to stop.
    /// Returns false iff stopped.
    pub fn matches(&self, cq: &Cq, pre: &[Option<usize>], visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        let mut env: Vec<Option<usize>> = pre.iter().map(|v| v.map(|x| self.find(x))).collect();
        env.resize(cq.sorts.len(), None);
        let mut done = vec![false; cq.atoms.len()];
        self.match_rec(cq, &mut env, &mut done, visit)
    }

    fn pick(&self, cq: &Cq, env: &[Option<usize>], done: &[bool]) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for (i, a) in cq.atoms.iter().enumerate() {
            if done[i] {
                continue;
            }
            let score = match a {
                Atom::Eq(x, y) => {
                    if env[*x].is_some() || env[*y].is_some() {
                        1000
                    } else {
                        0
                    }
                }
                Atom::Func(_, args, r) => {
                    10 * args.iter().filter(|v| env[**v].is_some()).count() + 5 + usize::from(env[*r].is_some())
                }
                Atom::Rel(_, args) => 10 * args.iter().filter(|v| env[**v].is_some()).count() + 4,
            };
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, i));
            }
        }
        best.map(|(_, i)| i)
    }

    fn bind_tuple(env: &mut [Option<usize>], vars: &[usize], vals: &[usize], trail: &mut Vec<usize>) -> bool {
        for (v, &x) in vars.iter().zip(vals) {
            match env[*v] {
                Some(y) if y != x => return false,
                Some(_) => {}
                None => {
                    env[*v] = Some(x);
                    trail.push(*v);
                }
            }
        }
        true
    }

    fn match_rec(
        &self,
        cq: &Cq,
        env: &mut Vec<Option<usize>>,
        done: &mut Vec<bool>,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        let Some(i) = self.pick(cq, env, done) else {
            return self.enumerate_rest(cq, env, 0, visit);
        };
        done[i] = true;
        let mut keep_going = true;
        match &cq.atoms[i] {
            Atom::Eq(x, y) => match (env[*x], env[*y]) {
                (Some(a), Some(b)) => {
                    if a == b {
                        keep_going = self.match_rec(cq, env, done, visit);
                    }
                }
                (Some(a), None) | (None, Some(a)) => {
                    let free = if env[*x].is_none() { *x } else { *y };
                    if self.sort[a] == cq.sorts[free] {
                        env[free] = Some(a);
                        keep_going = self.match_rec(cq, env, done, visit);
                        env[free] = None;
                    }
                }
                (None, None) => {
                    let roots: Vec<usize> = self.roots_of(cq.sorts[*x]).collect();
                    for e in roots {
                        env[*x] = Some(e);
                        env[*y] = Some(e);
                        keep_going = self.match_rec(cq, env, done, visit);
                        env[*x] = None;
                        env[*y] = None;
                        if !keep_going {
                            break;
                        }
                    }
                }
            },
            Atom::Func(f, args, r) => {
                let lo = (*f, Vec::new());
                let hi = (*f + 1, Vec::new());
                let mut vars = args.clone();
                vars.push(*r);
                for ((_, fargs), v) in self.funcs.range(lo..hi) {
                    let mut vals = fargs.clone();
                    vals.push(*v);
                    let mut trail = Vec::new();
                    if Self::bind_tuple(env, &vars, &vals, &mut trail) {
                        keep_going = self.match_rec(cq, env, done, visit);
                    }
                    for t in trail {
                        env[t] = None;
                    }
                    if !keep_going {
                        break;
                    }
                }
            }
            Atom::Rel(r, args) => {
                let lo = (*r, Vec::new());
                let hi = (*r + 1, Vec::new());
                for (_, rargs) in self.rels.range(lo..hi) {
                    let mut trail = Vec::new();
                    if Self::bind_tuple(env, args, rargs, &mut trail) {
                        keep_going = self.match_rec(cq, env, done, visit);
                    }
                    for t in trail {
                        env[t] = None;
                    }
                    if !keep_going {
                        break;
                    }
                }
            }
        }
        done[i] = false;
        keep_going
    }

    fn enumerate_rest(
        &self,
        cq: &Cq,
        env: &mut Vec<Option<usize>>,
        from: usize,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        match (from..env.len()).find(|&v| env[v].is_none()) {
            None => {
                let full: Vec<usize> = env.iter().map(|v| v.unwrap()).collect();
                visit(&full)
            }
            Some(v) => {
                let roots: Vec<usize> = self.roots_of(cq.sorts[v]).collect();
                for e in roots {
                    env[v] = Some(e);
                    let go = self.enumerate_rest(cq, env, v + 1, visit);
                    env[v] = None;
                    if !go {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// Some query in `cqs` has a match extending the context values.
    pub fn satisfies(&self, cqs: &[Cq], ctx: &[usize]) -> bool {
        cqs.iter().any(|cq| {
            let mut pre: Vec<Option<usize>> = ctx.iter().map(|&x| Some(x)).collect();
            pre.resize(cq.sorts.len(), None);
            !self.matches(cq, &pre, &mut |_| false)
        })
    }

    /// Make `cq` true with the context bound to `ctx`: function values are
    /// looked up or created, existential variables equated to known values
    /// are bound to them, the rest get fresh elements; then facts are added
    /// and equalities merged.
    pub fn apply_cq(
        &mut self,
        cq: &Cq,
        ctx: &[usize],
        func_result: &[usize],
    ) -> (Vec<usize>, Vec<(usize, usize)>) {
        let mut created = Vec::new();
        let mut merges = Vec::new();
        let mut env: Vec<Option<usize>> = ctx.iter().map(|&x| Some(self.find(x))).collect();
        env.resize(cq.sorts.len(), None);
        loop {
            let mut progress = false;
            for a in &cq.atoms {
                match a {
                    Atom::Func(f, args, r) if env[*r].is_none() && args.iter().all(|v| env[*v].is_some()) => {
                        let vals: Vec<usize> = args.iter().map(|v| env[*v].unwrap()).collect();
                        env[*r] = Some(self.apply(*f, &vals, func_result[*f], &mut created));
                        progress = true;
                    }
                    Atom::Eq(x, y) => {
                        for (a, b) in [(*x, *y), (*y, *x)] {
                            if env[a].is_some() && env[b].is_none() && !cq.term_var[b] {
                                env[b] = env[a];
                                progress = true;
                            }
                        }
                    }
                    _ => {}
                }
            }
            if progress {
                continue;
            }
            match (0..env.len()).find(|&v| env[v].is_none() && !cq.term_var[v]) {
                Some(v) => {
                    let e = self.add_element(cq.sorts[v]);
                    created.push(e);
                    env[v] = Some(e);
                }
                None => break,
            }
        }
        for a in &cq.atoms {
            match a {
                Atom::Func(f, args, r) => {
                    let vals: Vec<usize> = args.iter().map(|v| env[*v].unwrap()).collect();
                    let v = self.apply(*f, &vals, func_result[*f], &mut created);
                    merges.extend(self.merge(v, env[*r].unwrap()));
                }
                Atom::Rel(r, args) => {
                    let vals = self.canon(&args.iter().map(|v| env[*v].unwrap()).collect::<Vec<_>>());
                    self.rels.insert((*r, vals));
                }
                Atom::Eq(x, y) => merges.extend(self.merge(env[*x].unwrap(), env[*y].unwrap())),
            }
        }
        (created, merges)
    }

    /// The first undefined function entry over existing elements, in
    /// symbol order then lexicographic argument order.
    pub fn undefined_entries(&self, idx: &SymbolIndex) -> Vec<(usize, Vec<usize>)> {
        let mut out = Vec::new();
        for (f, args) in idx.func_args.iter().enumerate() {
            let pools: Vec<Vec<usize>> = args.iter().map(|s| self.roots_of(*s).collect()).collect();
            let mut tuple = vec![0usize; pools.len()];
            if pools.iter().any(|p| p.is_empty()) {
                continue;
            }
            loop {
                let vals: Vec<usize> = tuple.iter().zip(&pools).map(|(i, p)| p[*i]).collect();
                if !self.funcs.contains_key(&(f, vals.clone())) {
                    out.push((f, vals));
                }
                let mut pos = pools.len();
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    tuple[pos] += 1;
                    if tuple[pos] < pools[pos].len() {
                        break;
                    }
                    tuple[pos] = 0;
                }
                if tuple.iter().all(|&i| i == 0) {
                    break;
                }
            }
        }
        out
    }

    /// The structure on the current classes, assuming every function is total.
    pub fn to_structure(&self, sig: &Signature, idx: &SymbolIndex) -> FiniteStructure {
        let mut pos: BTreeMap<usize, usize> = BTreeMap::new();
        let mut carriers = BTreeMap::new();
        for (si, s) in sig.sorts.iter().enumerate() {
            let roots: Vec<usize> = self.roots_of(si).collect();
            for (i, r) in roots.iter().enumerate() {
                pos.insert(*r, i);
            }
            carriers.insert(s.clone(), roots.iter().map(|r| format!("e{r}")).collect());
        }
        let mut functions = BTreeMap::new();
        for (fi, f) in sig.functions.iter().enumerate() {
            let sizes: Vec<usize> = idx.func_args[fi].iter().map(|s| self.roots_of(*s).count()).collect();
            let mut values = vec![0; sizes.iter().product()];
            for ((g, args), v) in &self.funcs {
                if *g == fi {
                    let a: Vec<usize> = args.iter().map(|x| pos[x]).collect();
                    values[crate::semantics::row_index(&a, &sizes)] = pos[v];
                }
            }
            functions.insert(f.name.clone(), FuncTable { args: f.args.clone(), result: f.result.clone(), values });
        }
        let mut relations = BTreeMap::new();
        for (ri, r) in sig.relations.iter().enumerate() {
            let tuples = self
                .rels
                .iter()
                .filter(|(g, _)| *g == ri)
                .map(|(_, args)| args.iter().map(|x| pos[x]).collect())
                .collect();
            relations.insert(r.name.clone(), RelTable { args: r.args.clone(), tuples });
        }
        FiniteStructure { carriers, functions, relations }
    }
}
