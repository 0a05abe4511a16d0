//! Random finite diagrams for the diagram/sequent dictionary. Each row's
//! property is decided directly on the function tables and compared with
//! validity of the row's sequents.

use std::collections::{BTreeMap, BTreeSet};

use coherent::semantics::{holds_sequent, FiniteStructure};
use coherent::syncat::{diagram_to_sequents, DiagramRow};
use coherent::syntax::Signature;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const MAX: usize = 4;

#[derive(Debug, Default, Clone, Copy)]
pub struct RowTally {
    pub row: usize,
    pub instances: usize,
    pub mismatches: usize,
    pub positive: usize,
}

fn map(r: &mut ChaCha8Rng, from: usize, to: usize) -> Vec<usize> {
    (0..from).map(|_| r.gen_range(0..to)).collect()
}

/// A random injection, or `None` when `from > to`.
fn injection(r: &mut ChaCha8Rng, from: usize, to: usize) -> Option<Vec<usize>> {
    if from > to {
        return None;
    }
    let mut all: Vec<usize> = (0..to).collect();
    all.shuffle(r);
    Some(all[..from].to_vec())
}

fn surjection(r: &mut ChaCha8Rng, from: usize, to: usize) -> Option<Vec<usize>> {
    if to > from || (to == 0 && from > 0) {
        return None;
    }
    let mut v: Vec<usize> = (0..to).collect();
    v.extend((to..from).map(|_| r.gen_range(0..to)));
    v.shuffle(r);
    Some(v)
}

struct Builder {
    sig: Signature,
    sizes: BTreeMap<String, usize>,
    tables: Vec<(String, Vec<usize>)>,
}

impl Builder {
    fn new() -> Self {
        Builder { sig: Signature::new(), sizes: BTreeMap::new(), tables: Vec::new() }
    }

    fn sort(&mut self, s: &str, n: usize) {
        self.sig = std::mem::take(&mut self.sig).with_sort(s);
        self.sizes.insert(s.to_string(), n);
    }

    fn fun(&mut self, f: &str, a: &str, b: &str, values: Vec<usize>) {
        assert_eq!(values.len(), self.sizes[a]);
        self.sig = std::mem::take(&mut self.sig).with_function(f, &[a], b);
        self.tables.push((f.to_string(), values));
    }

    fn build(self) -> (Signature, FiniteStructure) {
        let mut m = FiniteStructure::with_sizes(&self.sig, &self.sizes);
        for (f, v) in self.tables {
            m.functions.get_mut(&f).unwrap().values = v;
        }
        (self.sig, m)
    }
}

fn image(v: &[usize]) -> BTreeSet<usize> {
    v.iter().copied().collect()
}

fn is_injective(v: &[usize]) -> bool {
    image(v).len() == v.len()
}

/// One random instance of a row: the signature, structure, row data and
/// the directly decided property.
pub fn instance(r: &mut ChaCha8Rng, row: usize) -> (Signature, FiniteStructure, DiagramRow, bool) {
    let mut b = Builder::new();
    let size = |r: &mut ChaCha8Rng| r.gen_range(0..=MAX);
    let (data, prop) = match row {
        1 => {
            let n = size(r);
            b.sort("A", n);
            let v = if r.gen_bool(0.5) { (0..n).collect() } else { map(r, n, n) };
            let prop = v.iter().enumerate().all(|(i, &x)| i == x);
            b.fun("f", "A", "A", v);
            (DiagramRow::Identity { f: "f".into() }, prop)
        }
        2 => {
            let (na, nb, nc) = (size(r), r.gen_range(1..=MAX), r.gen_range(1..=MAX));
            b.sort("A", na);
            b.sort("B", nb);
            b.sort("C", nc);
            let f = map(r, na, nb);
            let g = map(r, nb, nc);
            let gf: Vec<usize> = f.iter().map(|&x| g[x]).collect();
            let h = if r.gen_bool(0.5) { gf.clone() } else { map(r, na, nc) };
            let prop = h == gf;
            b.fun("f", "A", "B", f);
            b.fun("g", "B", "C", g);
            b.fun("h", "A", "C", h);
            (DiagramRow::Commutes { f: "f".into(), g: "g".into(), h: "h".into() }, prop)
        }
        3 => {
            let (na, nb) = (size(r), r.gen_range(1..=MAX));
            b.sort("A", na);
            b.sort("B", nb);
            let f = if r.gen_bool(0.5) { injection(r, na, nb).unwrap_or_else(|| map(r, na, nb)) } else { map(r, na, nb) };
            let prop = is_injective(&f);
            b.fun("f", "A", "B", f);
            (DiagramRow::Mono { f: "f".into() }, prop)
        }
        4 => {
            let (na, nb) = (r.gen_range(1..=MAX), size(r).max(1));
            b.sort("A", na);
            b.sort("B", nb);
            let f = if r.gen_bool(0.5) { surjection(r, na, nb).unwrap_or_else(|| map(r, na, nb)) } else { map(r, na, nb) };
            let prop = image(&f).len() == nb;
            b.fun("f", "A", "B", f);
            (DiagramRow::Surjective { f: "f".into() }, prop)
        }
        5 => {
            let n = if r.gen_bool(0.4) { 1 } else { size(r) };
            b.sort("A", n);
            (DiagramRow::Terminal { sort: "A".into() }, n == 1)
        }
        6 => {
            let n = if r.gen_bool(0.4) { 0 } else { size(r) };
            b.sort("A", n);
            (DiagramRow::Initial { sort: "A".into() }, n == 0)
        }
        7 => {
            let (na, nb) = (r.gen_range(0..=2), r.gen_range(0..=2));
            let canonical = r.gen_bool(0.5);
            let nc = if canonical { na * nb } else { size(r) };
            b.sort("A", na);
            b.sort("B", nb);
            b.sort("C", nc);
            let (f, g) = if canonical {
                let mut pairs: Vec<(usize, usize)> = (0..na).flat_map(|a| (0..nb).map(move |bb| (a, bb))).collect();
                pairs.shuffle(r);
                (pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
            } else if na == 0 || nb == 0 {
                b.sizes.insert("C".into(), 0);
                (vec![], vec![])
            } else {
                (map(r, nc, na), map(r, nc, nb))
            };
            let pairs: BTreeSet<(usize, usize)> = f.iter().copied().zip(g.iter().copied()).collect();
            let prop = pairs.len() == f.len() && pairs.len() == na * nb;
            b.fun("f", "C", "A", f);
            b.fun("g", "C", "B", g);
            (DiagramRow::Product { f: "f".into(), g: "g".into() }, prop)
        }
        8 => {
            let (na, nb) = (size(r), r.gen_range(1..=MAX));
            b.sort("A", na);
            b.sort("B", nb);
            let f = map(r, na, nb);
            let g = if r.gen_bool(0.3) { f.clone() } else { map(r, na, nb) };
            let eq: Vec<usize> = (0..na).filter(|&a| f[a] == g[a]).collect();
            let e = if r.gen_bool(0.5) {
                let mut e = eq.clone();
                e.shuffle(r);
                e
            } else {
                let ne = r.gen_range(0..=na);
                injection(r, ne, na).unwrap()
            };
            b.sort("E", e.len());
            let prop = image(&e) == image(&eq);
            b.fun("e", "E", "A", e);
            b.fun("f", "A", "B", f);
            b.fun("g", "A", "B", g);
            (DiagramRow::Equalizer { e: "e".into(), f: "f".into(), g: "g".into() }, prop)
        }
        9 | 10 => {
            let nx = size(r);
            b.sort("X", nx);
            let k = r.gen_range(0..=3);
            let mut parts = Vec::new();
            let mut images = Vec::new();
            for i in 0..k {
                let ni = r.gen_range(0..=nx);
                let v = injection(r, ni, nx).unwrap();
                images.push(image(&v));
                let (s, f) = (format!("A{i}"), format!("f{i}"));
                b.sort(&s, ni);
                b.fun(&f, &s, "X", v);
                parts.push(f);
            }
            let all: BTreeSet<usize> = (0..nx).collect();
            let target: BTreeSet<usize> = if row == 9 {
                images.iter().flatten().copied().collect()
            } else {
                images.iter().fold(all.clone(), |acc, s| acc.intersection(s).copied().collect())
            };
            let g = if r.gen_bool(0.5) {
                let mut v: Vec<usize> = target.iter().copied().collect();
                v.shuffle(r);
                v
            } else {
                let nb = r.gen_range(0..=nx);
                injection(r, nb, nx).unwrap()
            };
            b.sort("B", g.len());
            let prop = image(&g) == target;
            b.fun("g", "B", "X", g);
            let row = if row == 9 { DiagramRow::Union { parts, g: "g".into() } } else { DiagramRow::Intersection { parts, g: "g".into() } };
            (row, prop)
        }
        _ => unreachable!("rows are 1 to 10"),
    };
    let (sig, m) = b.build();
    (sig, m, data, prop)
}

/// Tally `n` random instances of every row.
pub fn dictionary(r: &mut ChaCha8Rng, n: usize) -> Vec<RowTally> {
    (1..=10)
        .map(|row| {
            let mut t = RowTally { row, ..Default::default() };
            for _ in 0..n {
                let (sig, m, data, prop) = instance(r, row);
                m.check(&sig).unwrap();
                let seqs = diagram_to_sequents(&sig, &data).unwrap();
                let valid = seqs.iter().all(|s| holds_sequent(&m, &sig, s).unwrap());
                t.instances += 1;
                t.positive += prop as usize;
                t.mismatches += (prop != valid) as usize;
            }
            t
        })
        .collect()
}
