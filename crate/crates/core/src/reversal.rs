//! Reversal of linear programs.
//!
//! In a linear program every derivation of the goal is a chain
//! `goal -> p1 -> ... -> pn -> fact`. Reversal turns the chain around: the
//! facts become goal clauses, goal clauses become facts and every
//! transition `p(X) :- c, q(Y)` becomes `q_rev(Y) :- c, p_rev(X)`. A
//! predicate `q_rev` then holds for exactly the arguments `q` is called with
//! in some derivation from the goal, so the goal of the reversed program is
//! derivable iff the goal of the original one is.
//!
//! Clause `i` of the result comes from clause `i` of the input, and the
//! derivations correspond in reverse order.

use crate::chc::{ChcProgram, Clause, Head};
use crate::terms::Atom;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReversalError {
    #[error("clause {0} has more than one body atom")]
    NonLinear(usize),
}

pub const REVERSED_SUFFIX: &str = "_rev";

fn rev_atom(a: &Atom) -> Atom {
    Atom::new(format!("{}{REVERSED_SUFFIX}", a.pred), a.args.clone())
}

pub fn reverse(p: &ChcProgram) -> Result<ChcProgram, ReversalError> {
    let mut out = Vec::with_capacity(p.len());
    for (i, c) in p.clauses().iter().enumerate() {
        let rc = match (&c.head, c.body.as_slice()) {
            (_, [_, _, ..]) => return Err(ReversalError::NonLinear(i)),
            (Head::Goal, []) => c.clone(),
            (Head::Goal, [q]) => Clause::new(Head::Atom(rev_atom(q)), c.constraint.clone(), vec![]),
            (Head::Atom(h), []) => Clause::new(Head::Goal, c.constraint.clone(), vec![rev_atom(h)]),
            (Head::Atom(h), [q]) => Clause::new(
                Head::Atom(rev_atom(q)),
                c.constraint.clone(),
                vec![rev_atom(h)],
            ),
        };
        out.push(rc);
    }
    Ok(ChcProgram::new(out).expect("reversal preserves arities"))
}

/// Maps a derivation of the reversed program to the corresponding
/// derivation of the input.
pub fn map_reversed_derivation(ids: &[usize]) -> Vec<usize> {
    ids.iter().rev().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chc::{bounded_oracle, emit_chc, parse_chc, replay};

    const SRC: &str = "unsafe :- X=1, Y=0, p(X,Y).\n\
                       p(X,Y) :- X1=X+Y, Y1=Y+1, p(X1,Y1).\n\
                       p(X,Y) :- X-Y =< -1.\n";

    #[test]
    fn running_example() {
        let r = reverse(&parse_chc(SRC).unwrap()).unwrap();
        assert_eq!(
            emit_chc(&r),
            "p_rev(X,Y) :- X = 1, Y = 0.\n\
             p_rev(X1,Y1) :- X-X1+Y = 0, Y-Y1 = -1, p_rev(X,Y).\n\
             unsafe :- X-Y =< -1, p_rev(X,Y).\n"
        );
    }

    #[test]
    fn derivations_correspond_in_reverse() {
        let src = "unsafe :- X=0, p(X).\np(X) :- X1=X+1, p(X1).\np(X) :- X >= 2.\n";
        let p = parse_chc(src).unwrap();
        let r = reverse(&p).unwrap();
        let t = match bounded_oracle(&r, 10) {
            crate::chc::OracleOutcome::FoundAnswer(t) => t,
            other => panic!("expected an answer, got {}", other.name()),
        };
        let back = map_reversed_derivation(&t.clause_ids());
        assert!(replay(&p, &back).is_some());
    }

    #[test]
    fn rejects_nonlinear() {
        let p = parse_chc("unsafe :- p(X), p(Y).\np(X) :- X = 0.\n").unwrap();
        assert_eq!(reverse(&p), Err(ReversalError::NonLinear(0)));
    }
}
