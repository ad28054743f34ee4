use super::*;
use crate::chc::{emit_chc, parse_chc, replay};
use crate::frontend::{encode_interpreter, parse_imp};

const ACCUMULATOR: &str =
    "int x = 1; int y = 0; while (*) { x = x + y; y = y + 1; } assert(x >= y);";

fn accumulator_vcs() -> Specialized {
    let enc = encode_interpreter(&parse_imp(ACCUMULATOR).unwrap());
    specialize_remove(&enc, 100_000).unwrap()
}

fn prop(p: &ChcProgram, g: Generalization) -> Specialized {
    let cfg = PropConfig {
        generalization: g,
        ..PropConfig::default()
    };
    specialize_prop(p, &cfg).unwrap()
}

#[test]
fn remove_yields_the_loop_conditions() {
    let vc = accumulator_vcs();
    assert_eq!(
        emit_chc(&vc.program),
        "unsafe :- X = 1, Y = 0, new1(X,Y).\n\
         new1(X,Y) :- X-X1+Y = 0, Y-Y1 = -1, new1(X1,Y1).\n\
         new1(X,Y) :- X-Y =< -1.\n"
    );
    assert_eq!(vc.definitions.len(), 1);
    assert_eq!(vc.definitions[0].pred, "reach");
}

#[test]
fn remove_provenance_replays_in_the_interpreter() {
    let enc = encode_interpreter(&parse_imp(ACCUMULATOR).unwrap());
    let vc = specialize_remove(&enc, 100_000).unwrap();
    // Goal, one loop iteration, exit: not an answer, the store is unsat.
    let ids = map_derivation(&vc.provenance, &[0, 1, 2]);
    assert!(replay(&enc.program, &ids).is_none());
    for (i, prov) in vc.provenance.iter().enumerate() {
        assert!(!prov.is_empty(), "clause {i} has no provenance");
    }
}

#[test]
fn polyhedral_propagation_splits_the_loop() {
    let s = prop(&accumulator_vcs().program, Generalization::Polyhedral);
    assert_eq!(
        emit_chc(&s.program),
        "unsafe :- X = 1, Y = 0, new1(X,Y).\n\
         new1(X,Y) :- X = 1, X1 = 1, Y = 0, Y1 = 1, new2(X1,Y1).\n\
         new2(X,Y) :- X = 1, X1-Y = 1, Y-Y1 = -1, Y >= 0, new3(X1,Y1).\n\
         new2(X,Y) :- X = 1, Y >= 2.\n\
         new3(X,Y) :- X-X1+Y = 0, Y-Y1 = -1, X >= 1, Y >= 0, new3(X1,Y1).\n\
         new3(X,Y) :- X >= 1, X-Y =< -1.\n"
    );
    assert!(s.definitions.iter().all(|d| d.pred == "new1"));
    assert_eq!(s.definitions[2].parent, Some(1));
}

#[test]
fn monovariant_propagation_keeps_one_definition() {
    let s = prop(&accumulator_vcs().program, Generalization::Monovariant);
    assert_eq!(
        emit_chc(&s.program),
        "unsafe :- X = 1, Y = 0, new1(X,Y).\n\
         new1(X,Y) :- X-X1+Y = 0, Y-Y1 = -1, X >= 1, Y >= 0, new1(X1,Y1).\n\
         new1(X,Y) :- X >= 1, X-Y =< -1.\n"
    );
    assert_eq!(s.definitions.len(), 1);
}

#[test]
fn prop_provenance_maps_derivations_back() {
    let vc = parse_chc("unsafe :- X=0, p(X).\np(X) :- X1=X+1, p(X1).\np(X) :- X >= 3.\n").unwrap();
    let s = prop(&vc, Generalization::Polyhedral);
    let t = match crate::chc::bounded_oracle(&s.program, 30) {
        crate::chc::OracleOutcome::FoundAnswer(t) => t,
        o => panic!("expected an answer, got {}", o.name()),
    };
    let back = map_derivation(&s.provenance, &t.clause_ids());
    assert!(replay(&vc, &back).is_some());
}

#[test]
fn unfold_resolves_the_leftmost_selectable_atom() {
    let p = parse_chc("q(X) :- X >= 1.\nq(X) :- X =< -1.\nr(X) :- X = 0.\n").unwrap();
    let c = parse_chc("unsafe :- X >= 0, r(X), q(X).\n")
        .unwrap()
        .clause(0)
        .clone();
    let mut counter = counter_after(&p, &[]);
    let rs = unfold(&c, &p, &|q| q == "q", &mut counter).unwrap();
    // q(X) with X >= 0 only matches the first clause.
    assert_eq!(rs.len(), 1);
    assert_eq!(rs[0].used, 0);
    assert_eq!(rs[0].clause.body.len(), 1);
    assert_eq!(rs[0].clause.body[0].pred, "r");
    assert!(unfold(&c, &p, &|_| false, &mut counter).is_none());
}

#[test]
fn fold_checks_the_definition() {
    let d = Definition {
        name: "new1".into(),
        pred: "p".into(),
        params: vec!["X".into()],
        constraint: crate::chc::parse_constraint("X >= 0").unwrap(),
        parent: None,
    };
    let ok = parse_chc("unsafe :- Y = 2, p(Y).\n")
        .unwrap()
        .clause(0)
        .clone();
    let folded = fold(&ok, &d).unwrap();
    assert_eq!(folded.body[0].pred, "new1");
    let bad = parse_chc("unsafe :- Y = -2, p(Y).\n")
        .unwrap()
        .clause(0)
        .clone();
    assert_eq!(fold(&bad, &d), Err(SpecError::FoldMismatch));
}

#[test]
fn syntactic_verdicts() {
    let unsafe_fact = parse_chc("unsafe :- X = 1.\n").unwrap();
    assert_eq!(
        syntactic_verdict(&unsafe_fact),
        Some(SyntacticVerdict::Unsafe(0))
    );
    let dead = parse_chc("unsafe :- p(X).\np(X) :- X1 = X+1, p(X1).\n").unwrap();
    assert_eq!(syntactic_verdict(&dead), Some(SyntacticVerdict::Safe));
    assert_eq!(syntactic_verdict(&accumulator_vcs().program), None);
}

#[test]
fn prop_rejects_nonlinear() {
    let p = parse_chc("unsafe :- p(X), p(Y).\np(X) :- X = 0.\n").unwrap();
    assert!(matches!(
        specialize_prop(&p, &PropConfig::default()),
        Err(SpecError::NonLinear(0))
    ));
}
