//! Constrained Horn clauses: data model, text syntax and a bounded
//! top-down oracle.
//!
//! The syntax is Prolog-like:
//!
//! ```text
//! unsafe :- X=1, Y=0, p(X,Y).
//! p(X,Y) :- X1=X+Y, Y1=Y+1, p(X1,Y1).
//! p(X,Y) :- X-Y =< -1.
//! ```
//!
//! Constraints and atoms may be interleaved in a body; they are normalized to
//! one constraint followed by the atoms in their original order.

mod emit;
mod model;
mod oracle;
mod parse;

pub use emit::emit_chc;
pub use model::{
    ChcProgram, Clause, CounterexampleTrace, Head, Invariant, TraceStep, Verdict, GOAL,
};
pub use oracle::{bounded_oracle, replay, resolve_step, OracleOutcome};
pub use parse::{parse_chc, parse_constraint};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChcError {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("predicate `{pred}` used with arity {found}, previously {expected}")]
    ArityMismatch {
        pred: String,
        expected: usize,
        found: usize,
    },
    #[error("{0}")]
    Shape(String),
}
