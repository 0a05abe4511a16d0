mod common;

use coherent::builtin;
use coherent::corpus::{load_morphism, load_theory};
use coherent::parser::{
    parse_category, parse_morphism, parse_object, parse_structure, parse_theory, render_morphism, render_object,
    render_structure, render_theory, ParseError,
};

#[test]
fn corpus_theories_round_trip() {
    let mut n = 0;
    for entry in std::fs::read_dir(common::corpus_dir()).unwrap() {
        let path = entry.unwrap().path();
        let ext = path.extension().unwrap().to_string_lossy().into_owned();
        if ext == "cohthy" || ext == "cohcat" {
            let t = load_theory(&path).unwrap();
            assert_eq!(parse_theory(&render_theory(&t)).unwrap(), t, "{}", path.display());
            n += 1;
        }
    }
    assert!(n >= 8);
}

#[test]
fn generated_theories_round_trip() {
    let mut r = common::rng(99);
    for i in 0..500 {
        let t = common::random_theory(&mut r, &format!("G{i}"));
        let text = render_theory(&t);
        assert_eq!(parse_theory(&text).unwrap(), t, "{text}");
    }
}

#[test]
fn structures_and_morphisms_round_trip() {
    let dir = common::corpus_dir();
    for (file, t) in [("ar_quotient.cohstr", builtin::ar()), ("eqrel_two.cohstr", builtin::eqrel())] {
        let m = parse_structure(&std::fs::read_to_string(dir.join(file)).unwrap(), &t.signature).unwrap();
        assert_eq!(parse_structure(&render_structure(&m, &t.signature), &t.signature).unwrap(), m);
    }
    let mut r = common::rng(4);
    for _ in 0..100 {
        let sig = common::random_signature(&mut r);
        let m = common::random_model(&mut r, &sig, 3);
        assert_eq!(parse_structure(&render_structure(&m, &sig), &sig).unwrap(), m);
    }
    for file in ["ar-inclusion.cohmor", "cov-inclusion.cohmor"] {
        let f = load_morphism(&dir.join(file)).unwrap();
        let src = format!("builtin:{}", f.source.name.to_lowercase());
        let tgt = format!("builtin:{}", f.target.name.to_lowercase());
        let text = render_morphism(&f, &src, &tgt);
        let g = parse_morphism(&text, &mut |r| builtin::by_name(r).ok_or_else(|| r.to_string())).unwrap();
        assert_eq!(g, f);
    }
}

#[test]
fn theory_examples() {
    let eq = builtin::eqrel();
    assert_eq!((eq.signature.sorts.len(), eq.signature.relations.len(), eq.axioms.len()), (1, 1, 3));
    let empty = parse_theory("theory Empty {}").unwrap();
    assert!(empty.signature.sorts.is_empty() && empty.axioms.is_empty());
    assert_eq!(render_theory(&empty).trim_end(), "theory Empty {}");
    let cov = builtin::cov();
    assert_eq!(cov.signature.sorts, vec!["A", "B", "S", "X"]);
    let fs: Vec<&str> = cov.signature.functions.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(fs, vec!["i1", "i2", "j1", "j2"]);
}

#[test]
fn structure_examples() {
    let sig = builtin::eqrel().signature;
    let m = parse_structure("A = {0, 1}; R = {(0, 0), (1, 1)};", &sig).unwrap();
    assert_eq!(m.size("A"), 2);
    let m = parse_structure("A = {0, 1};", &sig).unwrap();
    assert!(m.relations["R"].tuples.is_empty());
    let ar = builtin::ar().signature;
    let err = parse_structure("A = {0}; B = {0}; p = {0 -> 7}; R = {};", &ar).unwrap_err();
    assert!(matches!(err, ParseError::ElementOutOfCarrier { .. }), "{err}");
}

#[test]
fn rendering_uses_the_concrete_syntax() {
    let sig = builtin::ar().signature;
    let o = parse_object("[b:B]. exists a:A. b = p(a)", &sig).unwrap();
    assert!(render_object(&o).contains("exists a:A. b = p(a)"));
}

#[test]
fn errors_carry_spans() {
    for bad in ["theory T { sort A rel R : A axiom x [a:A]: R(a) => R(a, a) }", "theory T { sort A\n fun f : A -> Q }", "theory", "theory T { axiom a [x:A]: true => true }"] {
        let e = parse_theory(bad).unwrap_err();
        assert!(e.span().line >= 1, "{e}");
        assert!(e.to_string().contains(':'));
    }
    let e = parse_theory("theory T {\n  sort A\n  fun f : A -> Q\n}").unwrap_err();
    assert_eq!(e.span().line, 3);
}

#[test]
fn categories_parse() {
    let c = parse_category("category C { object X arrow e : X -> X compose e then e = e }").unwrap();
    assert_eq!(c.objects, vec!["X"]);
    assert_eq!(c.composite("e", "e").as_deref(), Some("e"));
    assert_eq!(c.composite("id_X", "e").as_deref(), Some("e"));
    assert!(parse_category("category C { arrow f : X -> Y }").is_err());
}

#[test]
fn empty_sides_are_nullary() {
    let t = parse_theory("theory T { sort A rel P : A axiom a [x:A]: => P(x) axiom b [x:A]: P(x) => }").unwrap();
    assert!(t.axioms[0].sequent.lhs.is_top());
    assert!(t.axioms[1].sequent.rhs.is_bot());
}
