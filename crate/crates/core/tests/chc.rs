use specint::chc::{
    bounded_oracle, emit_chc, parse_chc, parse_constraint, ChcError, ChcProgram, Head,
    OracleOutcome,
};

fn corpus(name: &str) -> String {
    std::fs::read_to_string(format!(
        "{}/../../corpus/{name}",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap()
}

#[test]
fn goal_clause_shape() {
    let p = parse_chc("unsafe :- X=1, Y=0, p(X,Y).").unwrap();
    let c = p.clause(0);
    assert_eq!(c.head, Head::Goal);
    assert_eq!(c.constraint, parse_constraint("X = 1, Y = 0").unwrap());
    assert_eq!(c.body.len(), 1);
    assert_eq!(c.body[0].to_string(), "p(X,Y)");
    assert!(parse_chc("p(X) :- X >= 0.").unwrap().clause(0).is_fact());
}

#[test]
fn arity_mismatch() {
    assert!(matches!(
        parse_chc("p(X) :- p(X,Y)."),
        Err(ChcError::ArityMismatch { .. })
    ));
}

#[test]
fn parse_errors_carry_positions() {
    match parse_chc("p(X) :- X >= .") {
        Err(ChcError::Parse { line, col, .. }) => assert_eq!((line, col), (1, 14)),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn fixtures_round_trip() {
    // The stored listing has eight clauses.
    for (name, n) in [("fig1b.clp", 8), ("fig1c.clp", 11)] {
        let p = parse_chc(&corpus(name)).unwrap();
        assert_eq!(p.len(), n);
        let back = parse_chc(&emit_chc(&p)).unwrap();
        assert_eq!(back.len(), n);
        assert_eq!(emit_chc(&back), emit_chc(&p));
    }
    assert_eq!(emit_chc(&ChcProgram::empty()), "");
}

#[test]
fn interleaved_bodies_are_normalized() {
    let p = parse_chc("q(X) :- X >= 0, r(X), X =< 3.\nr(X) :- X = 1.").unwrap();
    assert_eq!(
        emit_chc(&p),
        "q(X) :- X >= 0, X =< 3, r(X).\nr(X) :- X = 1.\n"
    );
}

#[test]
fn strict_relations_use_the_integer_shift() {
    let p = parse_chc("p(X,Y) :- X < Y.").unwrap();
    assert_eq!(
        p.clause(0).constraint,
        parse_constraint("X - Y =< -1").unwrap()
    );
}

#[test]
fn oracle_examples() {
    let b = parse_chc(&corpus("fig1b.clp")).unwrap();
    assert_eq!(bounded_oracle(&b, 6), OracleOutcome::NoAnswerWithinDepth);
    let contradiction = parse_chc("unsafe :- X = 1, X =< 0.").unwrap();
    for d in [1, 5, 20] {
        assert_eq!(
            bounded_oracle(&contradiction, d),
            OracleOutcome::ExhaustedAll
        );
    }
    let p = parse_chc("unsafe :- p(X).\np(X) :- X = 0.").unwrap();
    assert!(bounded_oracle(&p, 2).is_found());
}

#[test]
fn live_predicates_are_those_reachable_from_the_goal() {
    let p = parse_chc("unsafe :- p(X).\np(X) :- q(X).\nq(X) :- X = 0.\nr(X) :- q(X).").unwrap();
    let live: Vec<String> = p.live_predicates().into_iter().collect();
    assert_eq!(live, vec!["p".to_string(), "q".to_string()]);
}
