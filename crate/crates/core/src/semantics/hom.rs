//! Homomorphisms and isomorphisms between finite structures, by
//! backtracking over element images with constraints checked as soon as all
//! of their elements are mapped.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use super::{all_tuples, FiniteStructure, Homomorphism};
use crate::syntax::Signature;

enum Constraint {
    /// `h(result) = f'(h(args))`; elements given as flat positions.
    Func { f: String, args: Vec<usize>, result: usize },
    /// `R'(h(args))`.
    Rel { r: String, args: Vec<usize> },
}

struct Layout {
    /// (sort, element) for each flat position.
    elems: Vec<(String, usize)>,
    offset: BTreeMap<String, usize>,
}

impl Layout {
    fn new(sig: &Signature, m: &FiniteStructure) -> Self {
        let mut elems = Vec::new();
        let mut offset = BTreeMap::new();
        for s in &sig.sorts {
            offset.insert(s.clone(), elems.len());
            for e in 0..m.size(s) {
                elems.push((s.clone(), e));
            }
        }
        Layout { elems, offset }
    }

    fn pos(&self, sort: &str, e: usize) -> usize {
        self.offset[sort] + e
    }
}

fn constraints(sig: &Signature, m: &FiniteStructure, layout: &Layout) -> Vec<Vec<Constraint>> {
    let mut by_pos: Vec<Vec<Constraint>> = (0..layout.elems.len().max(1)).map(|_| Vec::new()).collect();
    let mut nullary = Vec::new();
    for f in &sig.functions {
        for args in all_tuples(&m.sizes(&f.args)) {
            let result = m.apply(&f.name, &args);
            let arg_pos: Vec<usize> = args.iter().zip(&f.args).map(|(a, s)| layout.pos(s, *a)).collect();
            let res_pos = layout.pos(&f.result, result);
            let last = arg_pos.iter().copied().chain(std::iter::once(res_pos)).max().unwrap();
            by_pos[last].push(Constraint::Func { f: f.name.clone(), args: arg_pos, result: res_pos });
        }
    }
    for r in &sig.relations {
        for t in &m.relations[&r.name].tuples {
            let arg_pos: Vec<usize> = t.iter().zip(&r.args).map(|(a, s)| layout.pos(s, *a)).collect();
            match arg_pos.iter().max() {
                Some(&last) => by_pos[last].push(Constraint::Rel { r: r.name.clone(), args: arg_pos }),
                None => nullary.push(Constraint::Rel { r: r.name.clone(), args: arg_pos }),
            }
        }
    }
    // Nullary relation facts are checked before any element is assigned.
    by_pos.push(nullary);
    by_pos
}

struct Searcher<'a> {
    sig: &'a Signature,
    target: &'a FiniteStructure,
    layout: Layout,
    by_pos: Vec<Vec<Constraint>>,
    injective: bool,
    images: Vec<usize>,
    used: BTreeMap<String, Vec<bool>>,
}

impl Searcher<'_> {
    fn satisfied(&self, c: &Constraint) -> bool {
        match c {
            Constraint::Func { f, args, result } => {
                let img: Vec<usize> = args.iter().map(|&p| self.images[p]).collect();
                self.target.apply(f, &img) == self.images[*result]
            }
            Constraint::Rel { r, args } => {
                let img: Vec<usize> = args.iter().map(|&p| self.images[p]).collect();
                self.target.holds_rel(r, &img)
            }
        }
    }

    fn run(&mut self, visit: &mut dyn FnMut(&Homomorphism) -> ControlFlow<()>) -> ControlFlow<()> {
        let nullary = self.by_pos.last().unwrap();
        if !nullary.iter().all(|c| self.satisfied(c)) {
            return ControlFlow::Continue(());
        }
        self.go(0, visit)
    }

    fn go(&mut self, p: usize, visit: &mut dyn FnMut(&Homomorphism) -> ControlFlow<()>) -> ControlFlow<()> {
        if p == self.layout.elems.len() {
            let mut maps: BTreeMap<String, Vec<usize>> = self.sig.sorts.iter().map(|s| (s.clone(), Vec::new())).collect();
            for (pos, (s, _)) in self.layout.elems.iter().enumerate() {
                maps.get_mut(s).unwrap().push(self.images[pos]);
            }
            return visit(&Homomorphism { maps });
        }
        let sort = self.layout.elems[p].0.clone();
        for v in 0..self.target.size(&sort) {
            if self.injective && self.used[&sort][v] {
                continue;
            }
            self.images[p] = v;
            if self.by_pos[p].iter().all(|c| self.satisfied(c)) {
                if self.injective {
                    self.used.get_mut(&sort).unwrap()[v] = true;
                }
                let flow = self.go(p + 1, visit);
                if self.injective {
                    self.used.get_mut(&sort).unwrap()[v] = false;
                }
                flow?;
            }
        }
        ControlFlow::Continue(())
    }
}

fn search(
    sig: &Signature,
    m: &FiniteStructure,
    n: &FiniteStructure,
    injective: bool,
    visit: &mut dyn FnMut(&Homomorphism) -> ControlFlow<()>,
) {
    let layout = Layout::new(sig, m);
    let by_pos = constraints(sig, m, &layout);
    let images = vec![0; layout.elems.len()];
    let used = sig.sorts.iter().map(|s| (s.clone(), vec![false; n.size(s)])).collect();
    let mut s = Searcher { sig, target: n, layout, by_pos, injective, images, used };
    let _ = s.run(visit);
}

/// All homomorphisms `m → n`: function squares commute and relation tuples
/// are preserved. Ordered lexicographically by element images.
pub fn homomorphisms(sig: &Signature, m: &FiniteStructure, n: &FiniteStructure) -> Vec<Homomorphism> {
    let mut out = Vec::new();
    search(sig, m, n, false, &mut |h| {
        out.push(h.clone());
        ControlFlow::Continue(())
    });
    out
}

pub fn is_homomorphism(sig: &Signature, m: &FiniteStructure, n: &FiniteStructure, h: &Homomorphism) -> bool {
    for s in &sig.sorts {
        let map = match h.maps.get(s) {
            Some(map) => map,
            None => return false,
        };
        if map.len() != m.size(s) || map.iter().any(|&v| v >= n.size(s)) {
            return false;
        }
    }
    let img = |sorts: &[String], t: &[usize]| -> Vec<usize> { t.iter().zip(sorts).map(|(a, s)| h.maps[s][*a]).collect() };
    for f in &sig.functions {
        for args in all_tuples(&m.sizes(&f.args)) {
            let lhs = h.maps[&f.result][m.apply(&f.name, &args)];
            if n.apply(&f.name, &img(&f.args, &args)) != lhs {
                return false;
            }
        }
    }
    for r in &sig.relations {
        for t in &m.relations[&r.name].tuples {
            if !n.holds_rel(&r.name, &img(&r.args, t)) {
                return false;
            }
        }
    }
    true
}

/// An isomorphism `m ≅ n`, if one exists.
pub fn isomorphic(sig: &Signature, m: &FiniteStructure, n: &FiniteStructure) -> Option<Homomorphism> {
    if sig.sorts.iter().any(|s| m.size(s) != n.size(s)) {
        return None;
    }
    if sig.relations.iter().any(|r| m.relations[&r.name].tuples.len() != n.relations[&r.name].tuples.len()) {
        return None;
    }
    // A bijective homomorphism between equal-cardinality relations reflects them.
    let mut out = None;
    search(sig, m, n, true, &mut |h| {
        out = Some(h.clone());
        ControlFlow::Break(())
    });
    out
}

fn invariant(sig: &Signature, m: &FiniteStructure) -> Vec<usize> {
    let mut key: Vec<usize> = sig.sorts.iter().map(|s| m.size(s)).collect();
    for r in &sig.relations {
        key.push(m.relations[&r.name].tuples.len());
    }
    for f in &sig.functions {
        let t = &m.functions[&f.name];
        let mut counts = vec![0usize; m.size(&f.result)];
        for &v in &t.values {
            counts[v] += 1;
        }
        counts.sort_unstable();
        key.push(counts.len());
        key.extend(counts);
    }
    key
}

/// Partition `models` into isomorphism classes. Each class lists member
/// indices; the first member is the representative. Classes appear in order
/// of their representatives.
pub fn iso_classes(sig: &Signature, models: &[FiniteStructure]) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut buckets: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (i, m) in models.iter().enumerate() {
        let key = invariant(sig, m);
        let bucket = buckets.entry(key).or_default();
        match bucket.iter().copied().find(|&c| isomorphic(sig, &models[classes[c][0]], m).is_some()) {
            Some(c) => classes[c].push(i),
            None => {
                bucket.push(classes.len());
                classes.push(vec![i]);
            }
        }
    }
    classes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eqrel_sig() -> Signature {
        Signature::new().with_sort("A").with_relation("R", &["A", "A"])
    }

    fn rel_structure(n: usize, rel: &[(usize, usize)]) -> FiniteStructure {
        let mut m = FiniteStructure::with_sizes(&eqrel_sig(), &[("A".to_string(), n)].into());
        m.relations.get_mut("R").unwrap().tuples = rel.iter().map(|&(a, b)| vec![a, b]).collect();
        m
    }

    #[test]
    fn identity_is_a_homomorphism() {
        let m = rel_structure(2, &[(0, 0), (1, 1)]);
        let homs = homomorphisms(&eqrel_sig(), &m, &m);
        assert!(homs.contains(&Homomorphism::identity(&m)));
    }

    #[test]
    fn two_point_diagonal_to_one_point_diagonal() {
        let m = rel_structure(2, &[(0, 0), (1, 1)]);
        let n = rel_structure(1, &[(0, 0)]);
        assert_eq!(homomorphisms(&eqrel_sig(), &m, &n).len(), 1);
    }

    #[test]
    fn identity_family_does_not_preserve_full_relation_into_diagonal() {
        let m = rel_structure(2, &[(0, 0), (0, 1), (1, 0), (1, 1)]);
        let n = rel_structure(2, &[(0, 0), (1, 1)]);
        let id = Homomorphism::identity(&m);
        assert!(!is_homomorphism(&eqrel_sig(), &m, &n, &id));
        assert!(!homomorphisms(&eqrel_sig(), &m, &n).contains(&id));
    }

    #[test]
    fn isomorphism_classes_of_single_relations() {
        let a = rel_structure(2, &[(0, 1)]);
        let b = rel_structure(2, &[(1, 0)]);
        let c = rel_structure(2, &[(0, 0)]);
        assert!(isomorphic(&eqrel_sig(), &a, &b).is_some());
        assert!(isomorphic(&eqrel_sig(), &a, &c).is_none());
        assert_eq!(iso_classes(&eqrel_sig(), &[a, b, c]), vec![vec![0, 1], vec![2]]);
    }
}
