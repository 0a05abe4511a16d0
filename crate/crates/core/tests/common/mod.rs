//! Shared test helpers: a naive reference evaluator written directly from
//! the clause-by-clause definition of interpretation, brute-force structure
//! enumeration, and seeded random generators.
#![allow(dead_code)]

pub mod cat;
pub mod cells;
pub mod diagram;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use coherent::semantics::{FiniteStructure, FuncTable, RelTable};
use coherent::syntax::{Context, Formula, FormulaInContext, Sequent, Signature, Term, Theory};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// -- reference evaluator ------------------------------------------------------

pub type Env = HashMap<String, usize>;

fn value(m: &FiniteStructure, t: &Term, env: &Env) -> usize {
    match t {
        Term::Var(v) => env[v],
        Term::App(f, args) => {
            let table = &m.functions[f];
            let vals: Vec<usize> = args.iter().map(|a| value(m, a, env)).collect();
            let mut row = 0;
            for (v, s) in vals.iter().zip(&table.args) {
                row = row * m.carriers[s].len() + v;
            }
            table.values[row]
        }
    }
}

pub fn satisfies(m: &FiniteStructure, f: &Formula, env: &mut Env) -> bool {
    match f {
        Formula::Eq(a, b) => value(m, a, env) == value(m, b, env),
        Formula::Rel(r, args) => {
            let t: Vec<usize> = args.iter().map(|a| value(m, a, env)).collect();
            m.relations[r].tuples.contains(&t)
        }
        Formula::And(fs) => fs.iter().all(|g| satisfies(m, g, env)),
        Formula::Or(fs) => fs.iter().any(|g| satisfies(m, g, env)),
        Formula::Exists(v, s, body) => {
            let old = env.get(v).copied();
            let mut found = false;
            for e in 0..m.carriers[s].len() {
                env.insert(v.clone(), e);
                if satisfies(m, body, env) {
                    found = true;
                    break;
                }
            }
            match old {
                Some(o) => env.insert(v.clone(), o),
                None => env.remove(v),
            };
            found
        }
    }
}

/// Every assignment of the context, as position-ordered tuples.
pub fn assignments(m: &FiniteStructure, ctx: &Context) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for v in &ctx.vars {
        let n = m.carriers[&v.sort].len();
        out = out.into_iter().flat_map(|t| (0..n).map(move |e| [t.clone(), vec![e]].concat())).collect();
    }
    out
}

fn env_of(ctx: &Context, tuple: &[usize]) -> Env {
    ctx.vars.iter().zip(tuple).map(|(v, &e)| (v.name.clone(), e)).collect()
}

/// The tuples satisfying an object.
pub fn extension(m: &FiniteStructure, o: &FormulaInContext) -> BTreeSet<Vec<usize>> {
    assignments(m, &o.context).into_iter().filter(|t| satisfies(m, &o.formula, &mut env_of(&o.context, t))).collect()
}

pub fn holds(m: &FiniteStructure, s: &Sequent) -> bool {
    assignments(m, &s.context).into_iter().all(|t| {
        let mut env = env_of(&s.context, &t);
        !satisfies(m, &s.lhs, &mut env) || satisfies(m, &s.rhs, &mut env)
    })
}

pub fn models(m: &FiniteStructure, t: &Theory) -> bool {
    t.axioms.iter().all(|a| holds(m, &a.sequent))
}

// -- brute-force structures -----------------------------------------------------

fn tables(choices: usize, rows: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..rows {
        out = out.into_iter().flat_map(|t| (0..choices).map(move |v| [t.clone(), vec![v]].concat())).collect();
    }
    out
}

fn tuples_over(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &n in sizes {
        out = out.into_iter().flat_map(|t| (0..n).map(move |e| [t.clone(), vec![e]].concat())).collect();
    }
    out
}

/// Every structure with exactly the given carrier sizes, built by plain
/// products over all tables. Only for tiny signatures.
pub fn all_structures(sig: &Signature, sizes: &BTreeMap<String, usize>) -> Vec<FiniteStructure> {
    let carriers: BTreeMap<String, Vec<String>> =
        sig.sorts.iter().map(|s| (s.clone(), (0..sizes[s]).map(|i| i.to_string()).collect())).collect();
    let mut out = vec![FiniteStructure { carriers: carriers.clone(), functions: BTreeMap::new(), relations: BTreeMap::new() }];
    for f in &sig.functions {
        let rows: usize = f.args.iter().map(|a| sizes[a]).product();
        let opts = tables(sizes[&f.result], rows);
        out = out
            .into_iter()
            .flat_map(|m| {
                opts.iter().map(move |values| {
                    let mut m = m.clone();
                    m.functions.insert(f.name.clone(), FuncTable { args: f.args.clone(), result: f.result.clone(), values: values.clone() });
                    m
                })
            })
            .collect();
    }
    for r in &sig.relations {
        let all = tuples_over(&r.args.iter().map(|a| sizes[a]).collect::<Vec<_>>());
        let subsets: Vec<BTreeSet<Vec<usize>>> = (0..1u64 << all.len())
            .map(|mask| all.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, t)| t.clone()).collect())
            .collect();
        out = out
            .into_iter()
            .flat_map(|m| {
                subsets.iter().map(move |set| {
                    let mut m = m.clone();
                    m.relations.insert(r.name.clone(), RelTable { args: r.args.clone(), tuples: set.clone() });
                    m
                })
            })
            .collect();
    }
    out
}

/// All size assignments with every carrier in `0..=k`.
pub fn size_vectors(sig: &Signature, k: usize) -> Vec<BTreeMap<String, usize>> {
    let mut out = vec![BTreeMap::new()];
    for s in &sig.sorts {
        out = out
            .into_iter()
            .flat_map(|m: BTreeMap<String, usize>| {
                (0..=k).map(move |n| {
                    let mut m = m.clone();
                    m.insert(s.clone(), n);
                    m
                })
            })
            .collect();
    }
    out
}

/// Models of `t` with carriers `≤ k`, by brute force.
pub fn brute_models(t: &Theory, k: usize) -> Vec<FiniteStructure> {
    size_vectors(&t.signature, k)
        .iter()
        .flat_map(|sz| all_structures(&t.signature, sz))
        .filter(|m| models(m, t))
        .collect()
}

// -- random generation -----------------------------------------------------------

pub const SORTS: &[&str] = &["A", "B", "C"];

pub fn random_signature(r: &mut ChaCha8Rng) -> Signature {
    let n = r.gen_range(1..=3);
    let mut sig = Signature::new();
    for s in &SORTS[..n] {
        sig = sig.with_sort(s);
    }
    let pick = |r: &mut ChaCha8Rng| SORTS[r.gen_range(0..n)];
    for i in 0..r.gen_range(0..=3) {
        let arity = r.gen_range(0..=2);
        let args: Vec<&str> = (0..arity).map(|_| pick(r)).collect();
        let res = pick(r);
        sig = sig.with_function(&format!("f{i}"), &args, res);
    }
    for i in 0..r.gen_range(0..=2) {
        let arity = r.gen_range(0..=2);
        let args: Vec<&str> = (0..arity).map(|_| pick(r)).collect();
        sig = sig.with_relation(&format!("R{i}"), &args);
    }
    sig
}

pub fn random_context(r: &mut ChaCha8Rng, sig: &Signature, max: usize) -> Context {
    let mut ctx = Context::new();
    for i in 0..r.gen_range(0..=max) {
        let s = sig.sorts.choose(r).unwrap();
        ctx.push(&format!("x{i}"), s);
    }
    ctx
}

/// A random term of the sort, or `None` when there is no variable or
/// closed term of that sort reachable at this depth.
pub fn random_term(r: &mut ChaCha8Rng, sig: &Signature, ctx: &Context, sort: &str, depth: usize) -> Option<Term> {
    let vars: Vec<&str> = ctx.vars.iter().filter(|v| v.sort == sort).map(|v| v.name.as_str()).collect();
    let funcs: Vec<_> = sig.functions.iter().filter(|f| f.result == sort).collect();
    let use_fn = depth > 0 && !funcs.is_empty() && (vars.is_empty() || r.gen_bool(0.4));
    if use_fn {
        let f = funcs.choose(r).unwrap();
        let args: Option<Vec<Term>> = f.args.iter().map(|a| random_term(r, sig, ctx, a, depth - 1)).collect();
        if let Some(args) = args {
            return Some(Term::app(&f.name, args));
        }
    }
    vars.choose(r).map(|v| Term::var(v))
}

pub fn random_atom(r: &mut ChaCha8Rng, sig: &Signature, ctx: &Context) -> Formula {
    for _ in 0..6 {
        if !sig.relations.is_empty() && r.gen_bool(0.5) {
            let rel = sig.relations.choose(r).unwrap();
            let args: Option<Vec<Term>> = rel.args.iter().map(|a| random_term(r, sig, ctx, a, 1)).collect();
            if let Some(args) = args {
                return Formula::rel(&rel.name, args);
            }
        } else {
            let s = sig.sorts.choose(r).unwrap();
            if let (Some(a), Some(b)) = (random_term(r, sig, ctx, s, 1), random_term(r, sig, ctx, s, 1)) {
                return Formula::eq(a, b);
            }
        }
    }
    if r.gen_bool(0.5) {
        Formula::top()
    } else {
        Formula::bot()
    }
}

/// A random coherent formula over the context. Bound variables are named
/// `y{n}` with a running counter so they never clash with the context.
pub fn random_formula(r: &mut ChaCha8Rng, sig: &Signature, ctx: &Context, depth: usize) -> Formula {
    let mut n = 0;
    formula_inner(r, sig, ctx, depth, &mut n)
}

fn formula_inner(r: &mut ChaCha8Rng, sig: &Signature, ctx: &Context, depth: usize, n: &mut usize) -> Formula {
    if depth == 0 {
        return random_atom(r, sig, ctx);
    }
    match r.gen_range(0..5) {
        0 | 1 => random_atom(r, sig, ctx),
        2 => Formula::And((0..r.gen_range(0..=3)).map(|_| formula_inner(r, sig, ctx, depth - 1, n)).collect()),
        3 => Formula::Or((0..r.gen_range(0..=3)).map(|_| formula_inner(r, sig, ctx, depth - 1, n)).collect()),
        _ => {
            let v = format!("y{n}");
            *n += 1;
            let s = sig.sorts.choose(r).unwrap().clone();
            let mut inner = ctx.clone();
            inner.push(&v, &s);
            Formula::exists(&v, &s, formula_inner(r, sig, &inner, depth - 1, n))
        }
    }
}

pub fn random_sequent(r: &mut ChaCha8Rng, sig: &Signature, depth: usize) -> Sequent {
    let ctx = random_context(r, sig, 3);
    let lhs = random_formula(r, sig, &ctx, depth);
    let rhs = random_formula(r, sig, &ctx, depth);
    Sequent::new(ctx, lhs, rhs)
}

pub fn random_theory(r: &mut ChaCha8Rng, name: &str) -> Theory {
    let sig = random_signature(r);
    let mut t = Theory::new(name, sig.clone());
    for i in 0..r.gen_range(0..=4) {
        t = t.with_axiom(&format!("ax{i}"), random_sequent(r, &sig, 2));
    }
    t
}

/// A random structure with carriers of the given sizes; function tables
/// into an empty carrier are only possible when their domain is empty, so
/// sizes must be positive for every function result sort that is used.
pub fn random_structure(r: &mut ChaCha8Rng, sig: &Signature, sizes: &BTreeMap<String, usize>) -> FiniteStructure {
    let mut m = FiniteStructure::with_sizes(sig, sizes);
    for f in &sig.functions {
        let n = sizes[&f.result];
        let t = m.functions.get_mut(&f.name).unwrap();
        for v in t.values.iter_mut() {
            *v = r.gen_range(0..n);
        }
    }
    for rel in &sig.relations {
        let all = tuples_over(&rel.args.iter().map(|a| sizes[a]).collect::<Vec<_>>());
        let set: BTreeSet<Vec<usize>> = all.into_iter().filter(|_| r.gen_bool(0.4)).collect();
        m.relations.get_mut(&rel.name).unwrap().tuples = set;
    }
    m
}

/// Random positive sizes up to `k`.
pub fn random_sizes(r: &mut ChaCha8Rng, sig: &Signature, k: usize) -> BTreeMap<String, usize> {
    sig.sorts.iter().map(|s| (s.clone(), r.gen_range(1..=k))).collect()
}

/// A random structure with positive carriers up to `k`.
pub fn random_model(r: &mut ChaCha8Rng, sig: &Signature, k: usize) -> FiniteStructure {
    let sizes = random_sizes(r, sig, k);
    random_structure(r, sig, &sizes)
}
