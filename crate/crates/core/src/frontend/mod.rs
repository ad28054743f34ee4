//! The mini imperative language and its encoding as an interpreter in
//! constrained Horn clauses.
//!
//! ```text
//! int x = 1;
//! int y = 0;
//! while (*) { x = x + y; y = y + 1; }
//! assert(x >= y);
//! ```
//!
//! Structured statements are desugared into labelled commands (assignment,
//! conditional jump, jump, halt). The final assertion is negated into one
//! error constraint per conjunct.

mod encode;
mod parse;

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Signed;

pub use encode::{encode_interpreter, InterpreterEncoding, INTERPRETER_PREDICATES};
pub use parse::parse_imp;

use crate::polyhedra::LinConstraint;
use crate::terms::Rat;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("nonlinear expression at {line}:{col}")]
    NonlinearExpression { line: usize, col: usize },
    #[error("`!=` is not supported: its negation is not convex")]
    Disequality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    At(usize),
    Halt,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::At(n) => write!(f, "{n}"),
            Label::Halt => f.write_str("h"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    Const(Rat),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    /// Constant coefficient times an expression.
    Mul(Rat, Box<Expr>),
    Neg(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, env: &BTreeMap<String, Rat>) -> Rat {
        match self {
            Expr::Var(v) => env[v].clone(),
            Expr::Const(k) => k.clone(),
            Expr::Add(a, b) => a.eval(env) + b.eval(env),
            Expr::Sub(a, b) => a.eval(env) - b.eval(env),
            Expr::Mul(k, e) => k * e.eval(env),
            Expr::Neg(e) => -e.eval(env),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl CmpOp {
    pub fn holds(self, a: &Rat, b: &Rat) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
        }
    }

    pub(crate) fn functor(self) -> &'static str {
        match self {
            CmpOp::Lt => "lt",
            CmpOp::Le => "le",
            CmpOp::Gt => "gt",
            CmpOp::Ge => "ge",
            CmpOp::Eq => "eq",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    Nondet,
    Cmp(Expr, CmpOp, Expr),
    And(Box<Cond>, Box<Cond>),
}

impl Cond {
    /// Truth value for deterministic conditions; `None` for `*`.
    pub fn eval(&self, env: &BTreeMap<String, Rat>) -> Option<bool> {
        match self {
            Cond::Nondet => None,
            Cond::Cmp(a, op, b) => Some(op.holds(&a.eval(env), &b.eval(env))),
            Cond::And(a, b) => Some(a.eval(env)? && b.eval(env)?),
        }
    }

    pub(crate) fn conjuncts(&self) -> Vec<(&Expr, CmpOp, &Expr)> {
        match self {
            Cond::Nondet => vec![],
            Cond::Cmp(a, op, b) => vec![(a, *op, b)],
            Cond::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Assign(String, Expr),
    IteGoto(Cond, Label, Label),
    Goto(Label),
    Halt,
}

/// A program in labelled-command form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpProgram {
    /// Declared variables in order, with their optional initial value.
    pub variables: Vec<(String, Option<Rat>)>,
    /// Commands at labels `0..n`; the halt command sits at [`Label::Halt`].
    pub commands: Vec<Command>,
    /// The asserted condition.
    pub assertion: Cond,
    /// Initial constraint over the logic variables of the program variables.
    pub init: LinConstraint,
    /// One error constraint per negated conjunct of the assertion.
    pub errors: Vec<LinConstraint>,
    /// Logic variable name of each program variable.
    pub logic_names: BTreeMap<String, String>,
}

impl ImpProgram {
    pub fn entry(&self) -> Label {
        if self.commands.is_empty() {
            Label::Halt
        } else {
            Label::At(0)
        }
    }

    pub fn command(&self, l: Label) -> &Command {
        match l {
            Label::At(n) => &self.commands[n],
            Label::Halt => &Command::Halt,
        }
    }

    /// Label of the command written after `n`.
    pub fn next_label(&self, n: usize) -> Label {
        if n + 1 < self.commands.len() {
            Label::At(n + 1)
        } else {
            Label::Halt
        }
    }

    /// Targets of jumps that go backwards (loop heads).
    pub fn loop_heads(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, c) in self.commands.iter().enumerate() {
            if let Command::Goto(Label::At(t)) = c {
                if *t <= i && !out.contains(t) {
                    out.push(*t);
                }
            }
        }
        out.sort();
        out
    }

    pub fn var_names(&self) -> Vec<String> {
        self.variables.iter().map(|(v, _)| v.clone()).collect()
    }

    pub fn logic_name(&self, v: &str) -> &str {
        &self.logic_names[v]
    }

    pub fn assertion_holds(&self, env: &BTreeMap<String, Rat>) -> bool {
        self.assertion.eval(env).unwrap_or(true)
    }

    pub fn is_loop_free(&self) -> bool {
        self.loop_heads().is_empty()
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Assign(v, e) => write!(f, "{v} = {e}"),
            Command::IteGoto(c, a, b) => write!(f, "if ({c}) {a} else {b}"),
            Command::Goto(l) => write!(f, "goto {l}"),
            Command::Halt => f.write_str("halt"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) => f.write_str(v),
            Expr::Const(k) => {
                if k.is_negative() {
                    write!(f, "({k})")
                } else {
                    write!(f, "{k}")
                }
            }
            Expr::Add(a, b) => write!(f, "{a} + {b}"),
            Expr::Sub(a, b) => write!(f, "{a} - ({b})"),
            Expr::Mul(k, e) => write!(f, "{k}*({e})"),
            Expr::Neg(e) => write!(f, "-({e})"),
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::Nondet => f.write_str("*"),
            Cond::Cmp(a, op, b) => {
                let s = match op {
                    CmpOp::Lt => "<",
                    CmpOp::Le => "<=",
                    CmpOp::Gt => ">",
                    CmpOp::Ge => ">=",
                    CmpOp::Eq => "==",
                };
                write!(f, "{a} {s} {b}")
            }
            Cond::And(a, b) => write!(f, "{a} && {b}"),
        }
    }
}

impl fmt::Display for ImpProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.commands.iter().enumerate() {
            writeln!(f, "l{i}: {c};")?;
        }
        writeln!(f, "lh: halt;")
    }
}
