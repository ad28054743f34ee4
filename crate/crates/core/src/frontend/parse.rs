use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::One;

use super::{CmpOp, Command, Cond, Expr, FrontendError, ImpProgram, Label};
use crate::polyhedra::{LinAtom, LinConstraint, LinExpr, Truth};
use crate::terms::Rat;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Punct(&'static str),
    Eof,
}

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

const PUNCTS: [&str; 20] = [
    "==", "!=", "<=", ">=", "&&", "(", ")", "{", "}", ";", ",", "=", "<", ">", "+", "-", "*", "!",
    "[", "]",
];

fn lex(text: &str) -> Result<Vec<Lexed>, FrontendError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (l0, c0) = (line, col);
        if c.is_ascii_digit() || c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            let digits = c.is_ascii_digit();
            while i < chars.len()
                && (if digits {
                    chars[i].is_ascii_digit()
                } else {
                    chars[i].is_ascii_alphanumeric() || chars[i] == '_'
                })
            {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = if digits {
                Tok::Int(s.parse().expect("digits"))
            } else {
                Tok::Ident(s)
            };
            out.push(Lexed {
                tok,
                line: l0,
                col: c0,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) else {
            return Err(FrontendError::Parse {
                line,
                col,
                msg: format!("unexpected character `{c}`"),
            });
        };
        i += p.len();
        col += p.len();
        out.push(Lexed {
            tok: Tok::Punct(p),
            line: l0,
            col: c0,
        });
    }
    out.push(Lexed {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

const KEYWORDS: [&str; 5] = ["int", "if", "else", "while", "assert"];

enum Stmt {
    Assign(String, Expr),
    If(Cond, Vec<Stmt>, Vec<Stmt>),
    While(Cond, Vec<Stmt>),
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    declared: BTreeSet<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn at_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FrontendError> {
        let l = &self.toks[self.pos];
        Err(FrontendError::Parse {
            line: l.line,
            col: l.col,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, p: &str) -> Result<(), FrontendError> {
        if self.at(p) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{p}`"))
        }
    }

    fn ident(&mut self) -> Result<String, FrontendError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.err("expected an identifier"),
        }
    }

    fn declarations(&mut self) -> Result<Vec<(String, Option<Rat>)>, FrontendError> {
        let mut vars = Vec::new();
        while self.at_kw("int") {
            self.bump();
            loop {
                let name = self.ident()?;
                if !self.declared.insert(name.clone()) {
                    return self.err(format!("variable `{name}` declared twice"));
                }
                let init = if self.at("=") {
                    self.bump();
                    let neg = self.at("-");
                    if neg {
                        self.bump();
                    }
                    match self.bump() {
                        Tok::Int(n) => Some(Rat::from_integer(if neg { -n } else { n })),
                        _ => {
                            self.pos -= 1;
                            return self.err("expected an integer initializer");
                        }
                    }
                } else {
                    None
                };
                vars.push((name, init));
                if self.at(",") {
                    self.bump();
                    continue;
                }
                self.expect(";")?;
                break;
            }
        }
        Ok(vars)
    }

    fn statements(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        let mut out = Vec::new();
        loop {
            if self.at("}") || self.at_kw("assert") || *self.peek() == Tok::Eof {
                return Ok(out);
            }
            out.push(self.statement()?);
        }
    }

    fn block(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        if self.at("{") {
            self.bump();
            let body = self.statements()?;
            self.expect("}")?;
            Ok(body)
        } else {
            Ok(vec![self.statement()?])
        }
    }

    fn statement(&mut self) -> Result<Stmt, FrontendError> {
        if self.at_kw("if") {
            self.bump();
            self.expect("(")?;
            let c = self.cond()?;
            self.expect(")")?;
            let then = self.block()?;
            let els = if self.at_kw("else") {
                self.bump();
                self.block()?
            } else {
                Vec::new()
            };
            return Ok(Stmt::If(c, then, els));
        }
        if self.at_kw("while") {
            self.bump();
            self.expect("(")?;
            let c = self.cond()?;
            self.expect(")")?;
            return Ok(Stmt::While(c, self.block()?));
        }
        if self.at_kw("int") {
            return self.err("declarations must precede statements");
        }
        let v = self.ident()?;
        if !self.declared.contains(&v) {
            return Err(FrontendError::UndeclaredVariable(v));
        }
        self.expect("=")?;
        let e = self.expr()?;
        self.expect(";")?;
        Ok(Stmt::Assign(v, e))
    }

    fn cond(&mut self) -> Result<Cond, FrontendError> {
        if self.at("*") && matches!(self.toks[self.pos + 1].tok, Tok::Punct(")")) {
            self.bump();
            return Ok(Cond::Nondet);
        }
        let mut c = self.comparison()?;
        while self.at("&&") {
            self.bump();
            c = Cond::And(Box::new(c), Box::new(self.comparison()?));
        }
        Ok(c)
    }

    fn comparison(&mut self) -> Result<Cond, FrontendError> {
        let a = self.expr()?;
        let op = match self.peek() {
            Tok::Punct("<") => CmpOp::Lt,
            Tok::Punct("<=") => CmpOp::Le,
            Tok::Punct(">") => CmpOp::Gt,
            Tok::Punct(">=") => CmpOp::Ge,
            Tok::Punct("==") => CmpOp::Eq,
            Tok::Punct("!=") => return Err(FrontendError::Disequality),
            _ => return self.err("expected a comparison operator"),
        };
        self.bump();
        let b = self.expr()?;
        Ok(Cond::Cmp(a, op, b))
    }

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        let mut acc = self.product()?;
        loop {
            if self.at("+") {
                self.bump();
                acc = Expr::Add(Box::new(acc), Box::new(self.product()?));
            } else if self.at("-") {
                self.bump();
                acc = Expr::Sub(Box::new(acc), Box::new(self.product()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Expr, FrontendError> {
        let mut acc = self.factor()?;
        while self.at("*") {
            let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
            self.bump();
            let rhs = self.factor()?;
            acc = match (constant_value(&acc), constant_value(&rhs)) {
                (Some(k), _) => Expr::Mul(k, Box::new(rhs)),
                (None, Some(k)) => Expr::Mul(k, Box::new(acc)),
                (None, None) => return Err(FrontendError::NonlinearExpression { line, col }),
            };
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, FrontendError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Const(Rat::from_integer(n)))
            }
            Tok::Punct("-") => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(_) => {
                let v = self.ident()?;
                if !self.declared.contains(&v) {
                    return Err(FrontendError::UndeclaredVariable(v));
                }
                Ok(Expr::Var(v))
            }
            _ => self.err("expected an expression"),
        }
    }
}

fn constant_value(e: &Expr) -> Option<Rat> {
    match e {
        Expr::Var(_) => None,
        Expr::Const(k) => Some(k.clone()),
        Expr::Add(a, b) => Some(constant_value(a)? + constant_value(b)?),
        Expr::Sub(a, b) => Some(constant_value(a)? - constant_value(b)?),
        Expr::Mul(k, e) => Some(k * constant_value(e)?),
        Expr::Neg(e) => Some(-constant_value(e)?),
    }
}

fn compile(stmts: &[Stmt], out: &mut Vec<Command>) {
    for s in stmts {
        match s {
            Stmt::Assign(v, e) => out.push(Command::Assign(v.clone(), e.clone())),
            Stmt::While(c, body) => {
                let head = out.len();
                out.push(Command::Halt);
                compile(body, out);
                out.push(Command::Goto(Label::At(head)));
                out[head] = Command::IteGoto(c.clone(), Label::At(head + 1), Label::At(out.len()));
            }
            Stmt::If(c, then, els) => {
                let test = out.len();
                out.push(Command::Halt);
                compile(then, out);
                if els.is_empty() {
                    out[test] =
                        Command::IteGoto(c.clone(), Label::At(test + 1), Label::At(out.len()));
                } else {
                    let jump = out.len();
                    out.push(Command::Halt);
                    compile(els, out);
                    out[jump] = Command::Goto(Label::At(out.len()));
                    out[test] =
                        Command::IteGoto(c.clone(), Label::At(test + 1), Label::At(jump + 1));
                }
            }
        }
    }
}

fn close_label(l: Label, n: usize) -> Label {
    match l {
        Label::At(k) if k >= n => Label::Halt,
        l => l,
    }
}

pub(crate) fn logic_names(vars: &[String]) -> BTreeMap<String, String> {
    let mut used = BTreeSet::new();
    let mut out = BTreeMap::new();
    for v in vars {
        let mut cs = v.chars();
        let first = cs.next().expect("identifier");
        let base: String = first.to_ascii_uppercase().to_string() + cs.as_str();
        let mut name = base.clone();
        let mut k = 0;
        while used.contains(&name) {
            k += 1;
            name = format!("{base}_{k}");
        }
        used.insert(name.clone());
        out.insert(v.clone(), name);
    }
    out
}

pub(crate) fn linearize(e: &Expr, names: &BTreeMap<String, String>) -> LinExpr {
    match e {
        Expr::Var(v) => LinExpr::var(names[v].clone()),
        Expr::Const(k) => LinExpr::constant(k.clone()),
        Expr::Add(a, b) => linearize(a, names).add(&linearize(b, names)),
        Expr::Sub(a, b) => linearize(a, names).sub(&linearize(b, names)),
        Expr::Mul(k, e) => linearize(e, names).scale(k),
        Expr::Neg(e) => linearize(e, names).scale(&-Rat::one()),
    }
}

/// Integer relation `a op b` as linear atoms (strict comparisons are
/// shifted by one). Disjunctive results come from negated equalities.
pub(crate) fn relation(a: &LinExpr, op: CmpOp, b: &LinExpr, negated: bool) -> Vec<Truth> {
    let one = LinExpr::constant(Rat::one());
    let lt = |x: &LinExpr, y: &LinExpr| LinAtom::le(&x.add(&one), y);
    match (op, negated) {
        (CmpOp::Lt, false) | (CmpOp::Ge, true) => vec![lt(a, b)],
        (CmpOp::Le, false) | (CmpOp::Gt, true) => vec![LinAtom::le(a, b)],
        (CmpOp::Gt, false) | (CmpOp::Le, true) => vec![lt(b, a)],
        (CmpOp::Ge, false) | (CmpOp::Lt, true) => vec![LinAtom::le(b, a)],
        (CmpOp::Eq, false) => vec![LinAtom::eq(a, b)],
        (CmpOp::Eq, true) => vec![lt(a, b), lt(b, a)],
    }
}

/// Parses a program and desugars it into labelled commands.
pub fn parse_imp(text: &str) -> Result<ImpProgram, FrontendError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        declared: BTreeSet::new(),
    };
    let variables = p.declarations()?;
    let stmts = p.statements()?;
    if !p.at_kw("assert") {
        return p.err("expected `assert(...)` at the end of the program");
    }
    p.bump();
    p.expect("(")?;
    let assertion = p.cond()?;
    if assertion == Cond::Nondet {
        return p.err("the assertion must be a comparison");
    }
    p.expect(")")?;
    p.expect(";")?;
    if *p.peek() != Tok::Eof {
        return p.err("unexpected text after the assertion");
    }

    let mut commands = Vec::new();
    compile(&stmts, &mut commands);
    let n = commands.len();
    for c in &mut commands {
        match c {
            Command::IteGoto(_, a, b) => {
                *a = close_label(*a, n);
                *b = close_label(*b, n);
            }
            Command::Goto(l) => *l = close_label(*l, n),
            _ => {}
        }
    }

    let names: Vec<String> = variables.iter().map(|(v, _)| v.clone()).collect();
    let logic_names = logic_names(&names);
    let init = LinConstraint::from_truths(variables.iter().filter_map(|(v, k)| {
        let k = k.as_ref()?;
        Some(LinAtom::eq(
            &LinExpr::var(logic_names[v].clone()),
            &LinExpr::constant(k.clone()),
        ))
    }));
    let mut errors = Vec::new();
    for (a, op, b) in assertion.conjuncts() {
        let (a, b) = (linearize(a, &logic_names), linearize(b, &logic_names));
        for t in relation(&a, op, &b, true) {
            let c = LinConstraint::from_truths([t]);
            if !c.is_false() && !errors.contains(&c) {
                errors.push(c);
            }
        }
    }
    Ok(ImpProgram {
        variables,
        commands,
        assertion,
        init,
        errors,
        logic_names,
    })
}
