use std::collections::BTreeSet;

use super::*;
use crate::chc::parse_constraint;

fn c(s: &str) -> LinConstraint {
    parse_constraint(s).unwrap()
}

fn keep(vs: &[&str]) -> BTreeSet<String> {
    vs.iter().map(|v| v.to_string()).collect()
}

fn same(a: &LinConstraint, b: &LinConstraint) -> bool {
    simplify(a) == simplify(b)
}

#[test]
fn satisfiability_examples() {
    assert!(!is_sat(&c("X=1, Y=0, X-Y =< -1")));
    assert!(is_sat(&LinConstraint::top()));
    assert!(!is_sat(&c("X =< 3, X >= 5")));
    assert!(is_sat(&c("X >= 1, Y >= 0, X >= Y")));
}

#[test]
fn entailment_examples() {
    let premise = c("X >= Y, X >= 1, Y >= 0, X1 = X+Y, Y1 = Y+1");
    assert!(entails(&premise, &c("X1 >= Y1")));
    assert!(!entails(&c("X >= Y, X1 = X+Y, Y1 = Y+1"), &c("X1 >= Y1")));
    assert!(entails(&c("X >= 3"), &LinConstraint::top()));
    assert!(entails(&LinConstraint::bottom(), &c("X >= 3")));
    assert!(entails(&c("X = 2"), &c("X >= 1, X =< 2")));
    assert!(entails(&c("X >= 2, X =< 2"), &c("X = 2")));
    assert!(!entails(&c("X >= 2"), &c("Y >= 0")));
}

#[test]
fn projection_examples() {
    let got = project(
        &c("X >= 1, Y >= 0, X1 = X+Y, Y1 = Y+1"),
        &keep(&["X1", "Y1"]),
    );
    assert!(same(&got, &c("Y1 >= 1, X1 >= Y1")), "{got}");
    let k = c("X >= 1, X + Y =< 4, Y >= 0");
    assert_eq!(project(&k, &k.vars()), simplify(&k));
    assert!(project(&LinConstraint::bottom(), &keep(&["X"])).is_false());
    let got = project(&c("X = 1, Y = 0, X1 = X+Y, Y1 = Y+1"), &keep(&["X1", "Y1"]));
    assert_eq!(got, c("X1 = 1, Y1 = 1"));
}

#[test]
fn hull_examples() {
    let h = convex_hull(&c("X=1, Y=0"), &c("X=1, Y=1")).unwrap();
    assert!(same(&h, &c("X=1, Y >= 0, Y =< 1")), "{h}");
    let k = c("X >= 0, Y >= X, Y =< 4");
    assert!(same(&convex_hull(&k, &k).unwrap(), &k));
    let h = convex_hull(&c("X=0"), &c("X=2")).unwrap();
    assert!(same(&h, &c("X >= 0, X =< 2")));
    assert!(convex_hull(&LinConstraint::bottom(), &k).is_err());
}

#[test]
fn widening_examples() {
    let w = widen(&c("X=1, Y=0"), &c("X=1, Y>=0, Y=<1")).unwrap();
    assert_eq!(w, simplify(&c("X=1, Y>=0")));
    let k = c("X >= 0, Y >= X, Y =< 4");
    assert_eq!(widen(&k, &k).unwrap(), simplify(&k));
    let w = widen(&c("X>=0, X=<1"), &c("X>=0, X=<2")).unwrap();
    assert_eq!(w, c("X >= 0"));
    assert!(widen(&k, &LinConstraint::bottom()).is_err());
}

#[test]
fn simplify_examples() {
    assert_eq!(simplify(&c("X >= 0, X >= 1")), c("X >= 1"));
    assert_eq!(simplify(&c("X = 1, X =< 2")), c("X = 1"));
    let k = c("X + Y =< 3, X >= 0, Y >= 0, X + Y =< 5, X - Y = 0");
    assert_eq!(simplify(&simplify(&k)), simplify(&k));
    assert_eq!(simplify(&c("X =< Y, Y =< X")), c("X = Y"));
}

#[test]
fn interpolant_examples() {
    let a = c("X=1, Y=0");
    let b = c("X-Y =< -1");
    let i = binary_interpolant(&a, &b).unwrap();
    assert!(entails(&a, &i));
    assert!(!is_sat(&i.and(&b)));
    assert_eq!(i, c("X >= Y"));
    assert!(
        binary_interpolant(&LinConstraint::bottom(), &LinConstraint::top())
            .unwrap()
            .is_false()
    );
    assert!(
        binary_interpolant(&LinConstraint::top(), &LinConstraint::bottom())
            .unwrap()
            .is_true()
    );
    assert!(matches!(
        binary_interpolant(&c("X >= 0"), &c("X =< 1")),
        Err(PolyError::Precondition(_))
    ));
}

#[test]
fn sequence_interpolant_examples() {
    let seq =
        sequence_interpolants(&PathFormulas::new(vec![c("X=1, Y=0"), c("X-Y =< -1")])).unwrap();
    assert_eq!(seq.len(), 3);
    assert!(seq[0].is_true());
    assert_eq!(seq[1], c("X >= Y"));
    assert!(seq[2].is_false());
    let seq = sequence_interpolants(&PathFormulas::new(vec![LinConstraint::bottom()])).unwrap();
    assert_eq!(seq, vec![LinConstraint::top(), LinConstraint::bottom()]);
    // A failing path through the loop head: initial values, the exit test,
    // then the violated assertion flag.
    let seq = sequence_interpolants(&PathFormulas::new(vec![
        c("X=1, Y=0"),
        c("X-Y =< -1, D=0"),
        c("D=0"),
    ]))
    .unwrap();
    assert_eq!(seq[1], c("X >= Y"));
}

#[test]
fn display_forms() {
    assert_eq!(c("X - Y =< -1").to_string(), "X-Y =< -1");
    assert_eq!(c("X >= 1").to_string(), "X >= 1");
    assert_eq!(c("X1 = X + Y").to_string(), "X-X1+Y = 0");
    assert_eq!(c("2*X =< 1").to_string(), "2*X =< 1");
    assert_eq!(c("X =< 1/2").to_string(), "2*X =< 1");
}

#[test]
fn model_satisfies() {
    let k = c("X + Y = 3, X - Y >= 1, Z >= X");
    let m = model(&k).unwrap();
    assert_eq!(k.holds_at(&m), Some(true));
}
