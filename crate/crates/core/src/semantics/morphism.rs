//! Theory morphisms presented syntactically: each source sort goes to an
//! object (a formula in context) of the target, each function symbol to a
//! formula over the joint context of its argument and result objects, and
//! each relation symbol to a formula over its argument objects.
//!
//! A morphism acts on formulas by translation and on target models by
//! restriction (precomposition).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::compile::SymbolIndex;
use super::{eval_compiled, FiniteStructure, FuncTable, Homomorphism, RelTable, SemanticsError, View};
use crate::syntax::{
    validate_object, Context, Formula, FormulaInContext, LogicError, Sequent, Subst, Term, Theory, Var,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verification {
    Unchecked,
    Verified,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoryMorphism {
    pub name: String,
    pub source: Theory,
    pub target: Theory,
    pub sort_map: BTreeMap<String, FormulaInContext>,
    pub function_map: BTreeMap<String, FormulaInContext>,
    pub relation_map: BTreeMap<String, FormulaInContext>,
    pub verification: Verification,
}

/// A morphism that only renames symbols: sorts go to sorts, function symbols
/// to function symbols and relation symbols to relation symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Renaming {
    pub sorts: BTreeMap<String, String>,
    pub funcs: BTreeMap<String, String>,
    pub rels: BTreeMap<String, String>,
}

fn lower_var(sort: &str, i: usize) -> String {
    let base: String = sort.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_lowercase();
    let base = if base.is_empty() || base.starts_with(|c: char| c.is_ascii_digit()) { format!("v{base}") } else { base };
    format!("{base}{i}")
}

/// Image data for the symbol-for-symbol embedding of `source`'s signature.
fn plain_images(
    source: &Theory,
    rename_sort: &dyn Fn(&str) -> String,
    rename_func: &dyn Fn(&str) -> String,
    rename_rel: &dyn Fn(&str) -> String,
) -> (
    BTreeMap<String, FormulaInContext>,
    BTreeMap<String, FormulaInContext>,
    BTreeMap<String, FormulaInContext>,
) {
    let sig = &source.signature;
    let sort_map = sig
        .sorts
        .iter()
        .map(|s| (s.clone(), FormulaInContext::sort(&lower_var(s, 0), &rename_sort(s))))
        .collect();
    let function_map = sig
        .functions
        .iter()
        .map(|f| {
            let mut ctx = Context::new();
            let mut args = Vec::new();
            for (i, a) in f.args.iter().enumerate() {
                let v = lower_var(a, i + 1);
                ctx.push(&v, &rename_sort(a));
                args.push(Term::Var(v));
            }
            let y = format!("{}'", lower_var(&f.result, 0));
            ctx.push(&y, &rename_sort(&f.result));
            let formula = Formula::Eq(Term::App(rename_func(&f.name), args), Term::Var(y));
            (f.name.clone(), FormulaInContext::new(ctx, formula))
        })
        .collect();
    let relation_map = sig
        .relations
        .iter()
        .map(|r| {
            let mut ctx = Context::new();
            let mut args = Vec::new();
            for (i, a) in r.args.iter().enumerate() {
                let v = lower_var(a, i + 1);
                ctx.push(&v, &rename_sort(a));
                args.push(Term::Var(v));
            }
            (r.name.clone(), FormulaInContext::new(ctx, Formula::Rel(rename_rel(&r.name), args)))
        })
        .collect();
    (sort_map, function_map, relation_map)
}

impl TheoryMorphism {
    pub fn identity(t: &Theory) -> Self {
        let (sort_map, function_map, relation_map) =
            plain_images(t, &|s| s.to_string(), &|f| f.to_string(), &|r| r.to_string());
        TheoryMorphism {
            name: format!("id_{}", t.name),
            source: t.clone(),
            target: t.clone(),
            sort_map,
            function_map,
            relation_map,
            verification: Verification::Verified,
        }
    }

    /// The evident interpretation of `source` in a theory whose signature
    /// contains it. Verified outright when every source axiom is literally a
    /// target axiom.
    pub fn inclusion(name: &str, source: &Theory, target: &Theory) -> Self {
        let (sort_map, function_map, relation_map) =
            plain_images(source, &|s| s.to_string(), &|f| f.to_string(), &|r| r.to_string());
        let inherited = source.axioms.iter().all(|a| target.axioms.iter().any(|b| b.sequent == a.sequent));
        TheoryMorphism {
            name: name.to_string(),
            source: source.clone(),
            target: target.clone(),
            sort_map,
            function_map,
            relation_map,
            verification: if inherited { Verification::Verified } else { Verification::Unchecked },
        }
    }

    /// Symbol-for-symbol interpretation along the given renaming.
    pub fn from_renaming(name: &str, source: &Theory, target: &Theory, ren: &Renaming) -> Self {
        let (sort_map, function_map, relation_map) = plain_images(
            source,
            &|s| ren.sorts.get(s).cloned().unwrap_or_else(|| s.to_string()),
            &|f| ren.funcs.get(f).cloned().unwrap_or_else(|| f.to_string()),
            &|r| ren.rels.get(r).cloned().unwrap_or_else(|| r.to_string()),
        );
        TheoryMorphism {
            name: name.to_string(),
            source: source.clone(),
            target: target.clone(),
            sort_map,
            function_map,
            relation_map,
            verification: Verification::Unchecked,
        }
    }

    pub fn is_verified(&self) -> bool {
        self.verification == Verification::Verified
    }

    /// Sort list of the image of a list of source sorts.
    fn image_sorts(&self, sorts: &[String]) -> Vec<String> {
        sorts.iter().flat_map(|s| self.sort_map[s].context.sorts()).collect()
    }

    /// Every symbol has an image of the right shape over the target signature.
    pub fn check_arity(&self) -> Result<(), LogicError> {
        let tsig = &self.target.signature;
        let ssig = &self.source.signature;
        let missing = |kind: &'static str, name: &str| LogicError::UnknownSymbol {
            kind,
            name: name.to_string(),
            at: format!("morphism {}", self.name),
        };
        for s in &ssig.sorts {
            let o = self.sort_map.get(s).ok_or_else(|| missing("sort image", s))?;
            validate_object(tsig, o)?;
        }
        let shape = |name: &str, o: &FormulaInContext, expected: Vec<String>| -> Result<(), LogicError> {
            validate_object(tsig, o)?;
            let found = o.context.sorts();
            if found != expected {
                return Err(LogicError::SortMismatch {
                    expected: expected.join(" * "),
                    found: found.join(" * "),
                    at: format!("image of {name}"),
                });
            }
            Ok(())
        };
        for f in &ssig.functions {
            let o = self.function_map.get(&f.name).ok_or_else(|| missing("function image", &f.name))?;
            let mut expected = self.image_sorts(&f.args);
            expected.extend(self.sort_map[&f.result].context.sorts());
            shape(&f.name, o, expected)?;
        }
        for r in &ssig.relations {
            let o = self.relation_map.get(&r.name).ok_or_else(|| missing("relation image", &r.name))?;
            shape(&r.name, o, self.image_sorts(&r.args))?;
        }
        Ok(())
    }

    /// Recognise morphisms that merely rename symbols injectively.
    pub fn as_renaming(&self) -> Option<Renaming> {
        let ssig = &self.source.signature;
        let tsig = &self.target.signature;
        let mut sorts = BTreeMap::new();
        for s in &ssig.sorts {
            let o = self.sort_map.get(s)?;
            if o.context.len() != 1 || !o.formula.is_top() {
                return None;
            }
            sorts.insert(s.clone(), o.context.vars[0].sort.clone());
        }
        let mut funcs = BTreeMap::new();
        for f in &ssig.functions {
            let o = self.function_map.get(&f.name)?;
            let names = o.context.names();
            if o.context.has_duplicates() {
                return None;
            }
            let (dom, cod) = names.split_at(names.len() - 1);
            let (app, y) = match &o.formula {
                Formula::Eq(Term::App(g, args), Term::Var(y)) | Formula::Eq(Term::Var(y), Term::App(g, args)) => {
                    ((g, args), y)
                }
                _ => return None,
            };
            if y != &cod[0] || app.1.len() != dom.len() {
                return None;
            }
            if app.1.iter().zip(dom).any(|(t, v)| t != &Term::Var(v.clone())) {
                return None;
            }
            let decl = tsig.function(app.0)?;
            let want_args: Vec<String> = f.args.iter().map(|a| sorts[a].clone()).collect();
            if decl.args != want_args || decl.result != sorts[&f.result] {
                return None;
            }
            funcs.insert(f.name.clone(), app.0.clone());
        }
        let mut rels = BTreeMap::new();
        for r in &ssig.relations {
            let o = self.relation_map.get(&r.name)?;
            if o.context.has_duplicates() {
                return None;
            }
            match &o.formula {
                Formula::Rel(s, args)
                    if args.len() == o.context.len()
                        && args.iter().zip(&o.context.vars).all(|(t, v)| t == &Term::Var(v.name.clone())) =>
                {
                    rels.insert(r.name.clone(), s.clone());
                }
                _ => return None,
            }
        }
        let injective = |m: &BTreeMap<String, String>| m.values().collect::<BTreeSet<_>>().len() == m.len();
        if injective(&sorts) && injective(&funcs) && injective(&rels) {
            Some(Renaming { sorts, funcs, rels })
        } else {
            None
        }
    }

    // -----------------------------------------------------------------------
    // Translation of syntax.

    /// Translate a sequent: each context variable becomes a tuple of target
    /// variables guarded by its sort's image formula on the left.
    pub fn translate_sequent(&self, s: &Sequent) -> Sequent {
        let mut tr = Translator::new(self, &s.lhs.all_vars().union(&s.rhs.all_vars()).cloned().collect());
        let (ctx, env, guard) = tr.context(&s.context);
        let lhs = Formula::and2(guard, tr.formula(&s.lhs, &env));
        let rhs = tr.formula(&s.rhs, &env);
        Sequent::new(ctx, lhs, rhs)
    }

    /// Translate an object of the source syntactic category.
    pub fn translate_object(&self, o: &FormulaInContext) -> FormulaInContext {
        let mut tr = Translator::new(self, &o.formula.all_vars());
        let (ctx, env, guard) = tr.context(&o.context);
        let f = Formula::and2(guard, tr.formula(&o.formula, &env));
        FormulaInContext::new(ctx, f)
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &TheoryMorphism) -> TheoryMorphism {
        let sort_map = self.sort_map.iter().map(|(k, o)| (k.clone(), other.translate_object(o))).collect();
        let function_map = self.function_map.iter().map(|(k, o)| (k.clone(), other.translate_object(o))).collect();
        let relation_map = self.relation_map.iter().map(|(k, o)| (k.clone(), other.translate_object(o))).collect();
        let verification = if self.is_verified() && other.is_verified() {
            Verification::Verified
        } else {
            Verification::Unchecked
        };
        TheoryMorphism {
            name: format!("{};{}", self.name, other.name),
            source: self.source.clone(),
            target: other.target.clone(),
            sort_map,
            function_map,
            relation_map,
            verification,
        }
    }
}

struct Translator<'a> {
    m: &'a TheoryMorphism,
    avoid: BTreeSet<String>,
    temp: usize,
}

impl<'a> Translator<'a> {
    fn new(m: &'a TheoryMorphism, avoid: &BTreeSet<String>) -> Self {
        Translator { m, avoid: avoid.clone(), temp: 0 }
    }

    fn fresh(&mut self, base: &str) -> String {
        let name = if self.avoid.contains(base) { crate::syntax::fresh_name(base, &self.avoid) } else { base.to_string() };
        self.avoid.insert(name.clone());
        name
    }

    fn temp(&mut self) -> String {
        loop {
            let name = format!("__t{}", self.temp);
            self.temp += 1;
            if !self.avoid.contains(&name) {
                self.avoid.insert(name.clone());
                return name;
            }
        }
    }

    /// Fresh variables for the image of a sort, named after `base`.
    fn tuple_for(&mut self, base: &str, sort: &str) -> (Context, Vec<String>, Formula) {
        let obj = &self.m.sort_map[sort];
        let n = obj.context.len();
        let names: Vec<String> = (0..n)
            .map(|i| if n == 1 { self.fresh(base) } else { self.fresh(&format!("{base}_{}", i + 1)) })
            .collect();
        let renamed = obj.rename_context(&names);
        (renamed.context, names, renamed.formula)
    }

    fn context(&mut self, ctx: &Context) -> (Context, BTreeMap<String, Vec<Term>>, Formula) {
        // Reserve the source names first so that single-variable images keep them.
        for v in &ctx.vars {
            self.avoid.remove(&v.name);
        }
        let mut out = Context::new();
        let mut env = BTreeMap::new();
        let mut guards = Vec::new();
        for v in &ctx.vars {
            let (c, names, guard) = self.tuple_for(&v.name, &v.sort);
            out.vars.extend(c.vars);
            env.insert(v.name.clone(), names.iter().map(|n| Term::Var(n.clone())).collect::<Vec<_>>());
            if !guard.is_top() {
                guards.push(guard);
            }
        }
        let guard = if guards.len() == 1 { guards.pop().unwrap() } else { Formula::And(guards) };
        (out, env, guard)
    }

    /// Instantiate an image formula at the given terms.
    fn instantiate(&self, image: &FormulaInContext, terms: &[Term]) -> Formula {
        let s: Subst = image.context.vars.iter().map(|v| v.name.clone()).zip(terms.iter().cloned()).collect();
        image.formula.substitute(&s)
    }

    fn term(&mut self, t: &Term, env: &BTreeMap<String, Vec<Term>>, pre: &mut Vec<(Context, Formula)>) -> Vec<Term> {
        match t {
            Term::Var(v) => env[v].clone(),
            Term::App(f, args) => {
                let mut flat = Vec::new();
                for a in args {
                    flat.extend(self.term(a, env, pre));
                }
                let image = &self.m.function_map[f];
                let n_dom = flat.len();
                let cod = &image.context.vars[n_dom..];
                if let Some(u) = term_definable(image, n_dom) {
                    let s: Subst =
                        image.context.vars[..n_dom].iter().map(|v| v.name.clone()).zip(flat.iter().cloned()).collect();
                    return vec![u.substitute(&s)];
                }
                let mut ctx = Context::new();
                let mut result = Vec::new();
                for v in cod.iter() {
                    let name = self.temp();
                    ctx.push(&name, &v.sort);
                    result.push(Term::Var(name));
                }
                let mut all = flat;
                all.extend(result.iter().cloned());
                let body = self.instantiate(image, &all);
                pre.push((ctx, body));
                result
            }
        }
    }

    fn wrap(pre: Vec<(Context, Formula)>, core: Formula) -> Formula {
        if pre.is_empty() {
            return core;
        }
        let mut ctx = Context::new();
        let mut parts = Vec::new();
        for (c, f) in pre {
            ctx.vars.extend(c.vars);
            parts.push(f);
        }
        if !core.is_top() {
            parts.push(core);
        }
        Formula::exists_many(&ctx, Formula::And(parts))
    }

    fn formula(&mut self, f: &Formula, env: &BTreeMap<String, Vec<Term>>) -> Formula {
        match f {
            Formula::Eq(a, b) => {
                let mut pre = Vec::new();
                let ta = self.term(a, env, &mut pre);
                let tb = self.term(b, env, &mut pre);
                let mut eqs: Vec<Formula> = ta.into_iter().zip(tb).map(|(x, y)| Formula::Eq(x, y)).collect();
                let core = if eqs.len() == 1 { eqs.pop().unwrap() } else { Formula::And(eqs) };
                Self::wrap(pre, core)
            }
            Formula::Rel(r, args) => {
                let mut pre = Vec::new();
                let mut flat = Vec::new();
                for a in args {
                    flat.extend(self.term(a, env, &mut pre));
                }
                let image = self.m.relation_map[r].clone();
                let core = self.instantiate(&image, &flat);
                Self::wrap(pre, core)
            }
            Formula::And(fs) => Formula::And(fs.iter().map(|g| self.formula(g, env)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|g| self.formula(g, env)).collect()),
            Formula::Exists(v, s, body) => {
                let (ctx, names, guard) = self.tuple_for(v, s);
                let mut inner = env.clone();
                inner.insert(v.clone(), names.iter().map(|n| Term::Var(n.clone())).collect());
                let b = self.formula(body, &inner);
                Formula::exists_many(&ctx, Formula::and2(guard, b))
            }
        }
    }
}

/// If the image is `y = u(x⃗)` (or `u(x⃗) = y`) with `y` the single result
/// variable not occurring in `u`, return `u`.
fn term_definable(image: &FormulaInContext, n_dom: usize) -> Option<Term> {
    if image.context.len() != n_dom + 1 {
        return None;
    }
    let y = &image.context.vars[n_dom].name;
    let u = match &image.formula {
        Formula::Eq(Term::Var(v), u) if v == y => u,
        Formula::Eq(u, Term::Var(v)) if v == y => u,
        _ => return None,
    };
    if u.free_vars().contains(y) {
        return None;
    }
    Some(u.clone())
}

// ---------------------------------------------------------------------------
// Restriction of models.

/// A restricted model together with the target tuples that its elements are.
#[derive(Debug, Clone)]
pub struct Restriction {
    pub structure: FiniteStructure,
    pub elements: BTreeMap<String, Vec<Vec<usize>>>,
}

fn tuple_label(m: &FiniteStructure, sorts: &[String], t: &[usize]) -> String {
    if t.len() == 1 {
        return m.carriers[&sorts[0]][t[0]].clone();
    }
    let parts: Vec<&str> = t.iter().zip(sorts).map(|(e, s)| m.carriers[s][*e].as_str()).collect();
    format!("({})", parts.join(","))
}

/// `F*N`: the source structure obtained by evaluating the images of the
/// source symbols in `n`. Requires a verified morphism.
pub fn restrict_along(f: &TheoryMorphism, n: &FiniteStructure) -> Result<FiniteStructure, SemanticsError> {
    Ok(restrict_with_elements(f, n)?.structure)
}

pub fn restrict_with_elements(f: &TheoryMorphism, n: &FiniteStructure) -> Result<Restriction, SemanticsError> {
    if !f.is_verified() {
        return Err(SemanticsError::UnverifiedMorphism(f.name.clone()));
    }
    let tsig = &f.target.signature;
    let ssig = &f.source.signature;
    if let Some(ren) = f.as_renaming() {
        return Ok(reduct(f, &ren, n));
    }
    let idx = SymbolIndex::new(tsig);
    let view = View::new(tsig, n);
    let eval = |o: &FormulaInContext| {
        let c = super::compile::Compiled::new(&idx, &o.context, &o.formula);
        eval_compiled(&c, &view, &o.context).tuples
    };
    let mut elements: BTreeMap<String, Vec<Vec<usize>>> = BTreeMap::new();
    let mut carriers = BTreeMap::new();
    let mut lookup: BTreeMap<String, BTreeMap<Vec<usize>, usize>> = BTreeMap::new();
    for s in &ssig.sorts {
        let obj = &f.sort_map[s];
        let tuples: Vec<Vec<usize>> = eval(obj).into_iter().collect();
        let sorts = obj.context.sorts();
        carriers.insert(s.clone(), tuples.iter().map(|t| tuple_label(n, &sorts, t)).collect());
        lookup.insert(s.clone(), tuples.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect());
        elements.insert(s.clone(), tuples);
    }
    // Split a flat tuple into source elements, or None if some slice is not an element.
    let split = |sorts: &[String], flat: &[usize]| -> Option<Vec<usize>> {
        let mut out = Vec::new();
        let mut pos = 0;
        for s in sorts {
            let w = f.sort_map[s].context.len();
            out.push(*lookup[s].get(&flat[pos..pos + w])?);
            pos += w;
        }
        Some(out)
    };
    let mut functions = BTreeMap::new();
    for decl in &ssig.functions {
        let graph = eval(&f.function_map[&decl.name]);
        let arg_sizes: Vec<usize> = decl.args.iter().map(|a| elements[a].len()).collect();
        let rows: usize = arg_sizes.iter().product();
        let mut values: Vec<Option<usize>> = vec![None; rows];
        let mut all_sorts = decl.args.clone();
        all_sorts.push(decl.result.clone());
        for t in &graph {
            if let Some(parts) = split(&all_sorts, t) {
                let (args, res) = parts.split_at(parts.len() - 1);
                let row = super::row_index(args, &arg_sizes);
                match values[row] {
                    None => values[row] = Some(res[0]),
                    Some(v) if v == res[0] => {}
                    Some(_) => return Err(SemanticsError::NotFunctional { symbol: decl.name.clone() }),
                }
            }
        }
        let values: Option<Vec<usize>> = values.into_iter().collect();
        let values = values.ok_or_else(|| SemanticsError::NotFunctional { symbol: decl.name.clone() })?;
        functions.insert(
            decl.name.clone(),
            FuncTable { args: decl.args.clone(), result: decl.result.clone(), values },
        );
    }
    let mut relations = BTreeMap::new();
    for decl in &ssig.relations {
        let tuples = eval(&f.relation_map[&decl.name]).iter().filter_map(|t| split(&decl.args, t)).collect();
        relations.insert(decl.name.clone(), RelTable { args: decl.args.clone(), tuples });
    }
    Ok(Restriction { structure: FiniteStructure { carriers, functions, relations }, elements })
}

fn reduct(f: &TheoryMorphism, ren: &Renaming, n: &FiniteStructure) -> Restriction {
    let ssig = &f.source.signature;
    let carriers = ssig.sorts.iter().map(|s| (s.clone(), n.carriers[&ren.sorts[s]].clone())).collect();
    let elements = ssig
        .sorts
        .iter()
        .map(|s| (s.clone(), (0..n.size(&ren.sorts[s])).map(|e| vec![e]).collect()))
        .collect();
    let functions = ssig
        .functions
        .iter()
        .map(|d| {
            let t = &n.functions[&ren.funcs[&d.name]];
            (d.name.clone(), FuncTable { args: d.args.clone(), result: d.result.clone(), values: t.values.clone() })
        })
        .collect();
    let relations = ssig
        .relations
        .iter()
        .map(|d| {
            let t = &n.relations[&ren.rels[&d.name]];
            (d.name.clone(), RelTable { args: d.args.clone(), tuples: t.tuples.clone() })
        })
        .collect();
    Restriction { structure: FiniteStructure { carriers, functions, relations }, elements }
}

/// `F*h`: the homomorphism between restrictions induced by `h: n → n2`.
pub fn restrict_hom(
    f: &TheoryMorphism,
    n: &Restriction,
    n2: &Restriction,
    h: &Homomorphism,
) -> Option<Homomorphism> {
    let mut maps = BTreeMap::new();
    for s in &f.source.signature.sorts {
        let sorts: Vec<String> = f.sort_map[s].context.sorts();
        let target_index: BTreeMap<&Vec<usize>, usize> =
            n2.elements[s].iter().enumerate().map(|(i, t)| (t, i)).collect();
        let mut map = Vec::new();
        for t in &n.elements[s] {
            let img: Vec<usize> = t.iter().zip(&sorts).map(|(e, srt)| h.maps[srt][*e]).collect();
            map.push(*target_index.get(&img)?);
        }
        maps.insert(s.clone(), map);
    }
    Some(Homomorphism { maps })
}

/// Positionwise variables for a list of sorts, named after the sorts.
pub fn context_for_sorts(sorts: &[String], suffix: &str) -> Context {
    Context {
        vars: sorts
            .iter()
            .enumerate()
            .map(|(i, s)| Var { name: format!("{}{suffix}", lower_var(s, i)), sort: s.clone() })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Signature;

    fn ar() -> Theory {
        let sig = Signature::new()
            .with_sort("A")
            .with_relation("R", &["A", "A"])
            .with_sort("B")
            .with_function("p", &["A"], "B");
        Theory::new("AR", sig)
    }

    #[test]
    fn identity_is_a_renaming() {
        let t = ar();
        let id = TheoryMorphism::identity(&t);
        id.check_arity().unwrap();
        let ren = id.as_renaming().unwrap();
        assert_eq!(ren.funcs["p"], "p");
    }

    #[test]
    fn identity_translation_is_literal() {
        let t = ar();
        let id = TheoryMorphism::identity(&t);
        let s = Sequent::new(
            Context::from_pairs(&[("a", "A"), ("a'", "A")]),
            Formula::rel("R", vec![Term::var("a"), Term::var("a'")]),
            Formula::eq(Term::app("p", vec![Term::var("a")]), Term::app("p", vec![Term::var("a'")])),
        );
        assert_eq!(id.translate_sequent(&s), s);
    }

    #[test]
    fn non_term_images_flatten_through_existentials() {
        let t = ar();
        let mut m = TheoryMorphism::identity(&t);
        // p ↦ [a1:A, b0':B]. exists z:A. a1 = z & p(z) = b0'
        let img = m.function_map.get_mut("p").unwrap();
        img.formula = Formula::exists(
            "z",
            "A",
            Formula::And(vec![
                Formula::eq(Term::var("a1"), Term::var("z")),
                Formula::eq(Term::app("p", vec![Term::var("z")]), Term::var("b0'")),
            ]),
        );
        let obj = FormulaInContext::new(
            Context::from_pairs(&[("b", "B"), ("a", "A")]),
            Formula::eq(Term::var("b"), Term::app("p", vec![Term::var("a")])),
        );
        let tr = m.translate_object(&obj);
        assert_eq!(tr.context, obj.context);
        assert_eq!(tr.formula.to_string(), "exists __t0:B. (exists z:A. a = z & p(z) = __t0) & b = __t0");
    }
}
