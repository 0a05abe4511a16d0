//! Sampled arrows of small syntactic categories, category-law checks, and
//! constructions compared against set-level computations in finite models.

use std::collections::BTreeSet;

use coherent::builtin;
use coherent::prover::ProverBudget;
use coherent::semantics::{enumerate_models, eval_formula, FiniteStructure, SearchBudget};
use coherent::syncat::{FunctionalArrow, Limit, SubobjectRep, SyntacticCategory};
use coherent::syntax::{alpha_equiv, Context, Formula, FormulaInContext, Term, Theory};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

pub fn sort_object(var: &str, sort: &str) -> FormulaInContext {
    FormulaInContext::new(Context::from_pairs(&[(var, sort)]), Formula::top())
}

/// `[x:S] → [y:T]` given by `y = f(x)`.
pub fn graph(t: &Theory, f: &str, x: &str, y: &str) -> FunctionalArrow {
    let d = t.signature.function(f).unwrap();
    FunctionalArrow::new(
        sort_object(x, &d.args[0]),
        sort_object(y, &d.result),
        Formula::eq(Term::var(y), Term::app(f, vec![Term::var(x)])),
    )
    .unwrap()
}

/// Certified arrows of a theory: identities, graphs of unary functions,
/// product projections, diagonals and a subobject inclusion.
pub fn arrow_pool(cat: &SyntacticCategory) -> Vec<FunctionalArrow> {
    let t = cat.theory();
    let mut pool = Vec::new();
    for s in &t.signature.sorts {
        pool.push(cat.identity(&sort_object("u", s)));
    }
    for f in t.signature.functions.iter().filter(|f| f.args.len() == 1) {
        pool.push(graph(t, &f.name, "u", "v"));
    }
    for s in t.signature.sorts.iter().take(2) {
        let a = sort_object("u", s);
        let cone = cat.finite_limit(&Limit::Product(&a, &a)).unwrap();
        let names = cone.apex.context.names();
        let diag = Formula::And(vec![
            Formula::eq(Term::var(&names[0]), Term::var("w")),
            Formula::eq(Term::var(&names[1]), Term::var("w")),
        ]);
        pool.push(FunctionalArrow::new(sort_object("w", s), cone.apex.clone(), diag).unwrap());
        pool.extend(cone.legs.iter().cloned());
        for r in t.signature.relations.iter().filter(|r| r.args.len() == 2 && r.args.iter().all(|x| x == s)) {
            let pred = Formula::rel(&r.name, names.iter().map(|n| Term::var(n)).collect());
            pool.push(SubobjectRep::new(cone.apex.clone(), pred).inclusion());
        }
    }
    pool.into_iter().map(|f| cat.certify(&f).unwrap()).filter(|f| f.is_certified()).collect()
}

fn composable(f: &FunctionalArrow, g: &FunctionalArrow) -> bool {
    alpha_equiv(&f.codomain, &g.domain)
}

fn chain(r: &mut ChaCha8Rng, pool: &[FunctionalArrow], len: usize) -> Vec<FunctionalArrow> {
    loop {
        let mut out = vec![pool.choose(r).unwrap().clone()];
        while out.len() < len {
            let next: Vec<&FunctionalArrow> = pool.iter().filter(|g| composable(out.last().unwrap(), g)).collect();
            match next.choose(r) {
                Some(g) => out.push((*g).clone()),
                None => break,
            }
        }
        if out.len() == len {
            return out;
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct LawTally {
    pub pairs: usize,
    pub triples: usize,
    pub failures: usize,
}

pub fn law_theories() -> Vec<Theory> {
    vec![builtin::eqrel(), builtin::ar(), builtin::cov()]
}

/// Unit laws on sampled pairs and associativity on sampled triples, plus
/// certification of each composite.
pub fn category_laws(r: &mut ChaCha8Rng, samples: usize) -> LawTally {
    let mut tally = LawTally::default();
    let theories = law_theories();
    let cats: Vec<(SyntacticCategory, Vec<FunctionalArrow>)> = theories
        .iter()
        .map(|t| {
            let c = SyntacticCategory::new(t, ProverBudget::default());
            let p = arrow_pool(&c);
            (c, p)
        })
        .collect();
    for i in 0..samples {
        let (cat, pool) = &cats[i % cats.len()];
        let proved = |a: &FunctionalArrow, b: &FunctionalArrow| cat.arrows_equal(a, b).unwrap().is_proved();
        let [f, g] = <[FunctionalArrow; 2]>::try_from(chain(r, pool, 2)).unwrap();
        let left = cat.compose(&cat.identity(&f.domain), &f).unwrap();
        let right = cat.compose(&f, &cat.identity(&f.codomain)).unwrap();
        let gf = cat.certify(&cat.compose(&f, &g).unwrap()).unwrap();
        tally.pairs += 1;
        if !(proved(&left, &f) && proved(&right, &f) && gf.is_certified()) {
            tally.failures += 1;
        }
        let [f, g, h] = <[FunctionalArrow; 3]>::try_from(chain(r, pool, 3)).unwrap();
        let a = cat.compose(&cat.compose(&f, &g).unwrap(), &h).unwrap();
        let b = cat.compose(&f, &cat.compose(&g, &h).unwrap()).unwrap();
        tally.triples += 1;
        if !proved(&a, &b) {
            tally.failures += 1;
        }
    }
    tally
}

#[derive(Debug, Clone)]
pub struct ConstructionTally {
    pub name: &'static str,
    pub models: usize,
    pub mismatches: usize,
}

fn ev(m: &FiniteStructure, t: &Theory, o: &FormulaInContext) -> BTreeSet<Vec<usize>> {
    eval_formula(m, &t.signature, o).unwrap().tuples
}

fn table<'m>(m: &'m FiniteStructure, f: &str) -> &'m [usize] {
    &m.functions[f].values
}

fn pairs(n: usize, k: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |a| (0..k).map(move |b| (a, b)))
}

fn unit(xs: impl IntoIterator<Item = usize>) -> BTreeSet<Vec<usize>> {
    xs.into_iter().map(|x| vec![x]).collect()
}

fn tally(name: &'static str, t: &Theory, k: usize, check: impl Fn(&FiniteStructure) -> bool) -> ConstructionTally {
    let ms = enumerate_models(t, k, SearchBudget::default()).unwrap();
    let mismatches = ms.iter().filter(|m| !check(m)).count();
    ConstructionTally { name, models: ms.len(), mismatches }
}

/// Products, equalizers, pullbacks, images and unions, evaluated in every
/// model of size at most `k` and compared with the set computation.
pub fn constructions(k: usize) -> Vec<ConstructionTally> {
    let mut out = Vec::new();
    let b = ProverBudget::default();

    let eqrel = builtin::eqrel();
    let refl = FormulaInContext::new(Context::from_pairs(&[("a", "A")]), Formula::rel("R", vec![Term::var("a"), Term::var("a")]));
    let any = sort_object("b", "A");
    let prod = coherent::syncat::finite_limit(&Limit::Product(&refl, &any)).unwrap();
    out.push(tally("product", &eqrel, k, |m| {
        let want: BTreeSet<Vec<usize>> =
            ev(m, &eqrel, &refl).iter().flat_map(|x| ev(m, &eqrel, &any).into_iter().map(move |y| [x.clone(), y].concat())).collect();
        ev(m, &eqrel, &prod.apex) == want
    }));

    let ar = builtin::ar();
    let cat = SyntacticCategory::new(&ar, b);
    let p = cat.certify(&graph(&ar, "p", "a", "b")).unwrap();
    let pb = cat.finite_limit(&Limit::Pullback(&p, &p)).unwrap();
    let img = cat.image_factorization(&p).unwrap();
    out.push(tally("pullback", &ar, k, |m| {
        let pt = table(m, "p");
        let want: BTreeSet<Vec<usize>> = pairs(m.size("A"), m.size("A")).filter(|&(x, y)| pt[x] == pt[y]).map(|(x, y)| vec![x, y]).collect();
        ev(m, &ar, &pb.apex) == want
    }));
    out.push(tally("image", &ar, k, |m| {
        let want = unit(table(m, "p").iter().copied());
        ev(m, &ar, &img.image.object()) == want && ev(m, &ar, &img.middle) == want
    }));

    let dir = super::corpus_dir();
    let retract = coherent::corpus::load_theory(&dir.join("retract.cohcat")).unwrap();
    let cat = SyntacticCategory::new(&retract, b);
    let c = cat.certify(&graph(&retract, "c", "y", "y2")).unwrap();
    let id = cat.identity(&sort_object("y", "Y"));
    let eq = cat.finite_limit(&Limit::Equalizer(&c, &id)).unwrap();
    let s = cat.certify(&graph(&retract, "s", "x", "y")).unwrap();
    let simg = cat.image_factorization(&s).unwrap();
    out.push(tally("equalizer", &retract, k, |m| {
        let ct = table(m, "c");
        ev(m, &retract, &eq.apex) == unit((0..m.size("Y")).filter(|&y| ct[y] == y))
    }));
    out.push(tally("image", &retract, k, |m| ev(m, &retract, &simg.image.object()) == unit(table(m, "s").iter().copied())));

    let cov = builtin::cov();
    let cat = SyntacticCategory::new(&cov, b);
    let j1 = cat.certify(&graph(&cov, "j1", "a", "x")).unwrap();
    let j2 = cat.certify(&graph(&cov, "j2", "b", "x")).unwrap();
    let x = sort_object("x", "X");
    let parts = [cat.image_factorization(&j1).unwrap().image, cat.image_factorization(&j2).unwrap().image];
    let u = cat.union(&x, &parts).unwrap();
    let single = cat.union(&x, &parts[..1]).unwrap();
    let none = cat.union(&x, &[]).unwrap();
    let meet = cat.finite_limit(&Limit::Pullback(&j1, &j2)).unwrap();
    out.push(tally("union", &cov, k, |m| {
        let (t1, t2) = (table(m, "j1"), table(m, "j2"));
        ev(m, &cov, &u.object()) == unit(t1.iter().chain(t2).copied())
            && ev(m, &cov, &single.object()) == unit(t1.iter().copied())
            && ev(m, &cov, &none.object()).is_empty()
    }));
    out.push(tally("pullback", &cov, k, |m| {
        let (t1, t2) = (table(m, "j1"), table(m, "j2"));
        let want: BTreeSet<Vec<usize>> =
            pairs(m.size("A"), m.size("B")).filter(|&(a, b)| t1[a] == t2[b]).map(|(a, b)| vec![a, b]).collect();
        ev(m, &cov, &meet.apex) == want
    }));
    out
}
