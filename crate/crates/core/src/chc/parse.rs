use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::model::{ChcProgram, Clause, Head, GOAL};
use super::ChcError;
use crate::polyhedra::{LinAtom, LinConstraint, LinExpr, Truth};
use crate::terms::{Atom, Rat, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Pred(String),
    Var(String),
    Int(BigInt),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    If,
    Eq,
    Le,
    Ge,
    Lt,
    Gt,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Lexed>, ChcError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let tok = if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Lexed {
                tok: Tok::Int(s.parse().expect("digits")),
                line: l0,
                col: c0,
            });
            continue;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = if c.is_ascii_lowercase() {
                Tok::Pred(s)
            } else {
                Tok::Var(s)
            };
            out.push(Lexed {
                tok,
                line: l0,
                col: c0,
            });
            continue;
        } else if two == ":-" {
            advance(2, &mut i, &mut col);
            Tok::If
        } else if two == "=<" {
            advance(2, &mut i, &mut col);
            Tok::Le
        } else if two == ">=" {
            advance(2, &mut i, &mut col);
            Tok::Ge
        } else {
            let t = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '=' => Tok::Eq,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                _ => {
                    return Err(ChcError::Parse {
                        line,
                        col,
                        msg: format!("unexpected character `{c}`"),
                    })
                }
            };
            advance(1, &mut i, &mut col);
            t
        };
        out.push(Lexed {
            tok,
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

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    anon: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ChcError> {
        let l = &self.toks[self.pos];
        Err(ChcError::Parse {
            line: l.line,
            col: l.col,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ChcError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}, found {:?}", self.peek()))
        }
    }

    fn var_name(&mut self, v: String) -> String {
        if v == "_" {
            self.anon += 1;
            format!("_{}", self.anon)
        } else {
            v
        }
    }

    fn clause(&mut self) -> Result<Clause, ChcError> {
        let head = match self.bump() {
            Tok::Pred(p) if p == GOAL => {
                if *self.peek() == Tok::LParen {
                    return self.err(format!("`{GOAL}` takes no arguments"));
                }
                Head::Goal
            }
            Tok::Pred(p) => Head::Atom(self.atom_rest(p)?),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                return self.err("expected a clause head");
            }
        };
        let mut lits = Vec::new();
        let mut body = Vec::new();
        match self.bump() {
            Tok::Dot => {}
            Tok::If => loop {
                self.literal(&mut lits, &mut body)?;
                match self.bump() {
                    Tok::Comma => continue,
                    Tok::Dot => break,
                    _ => {
                        self.pos = self.pos.saturating_sub(1);
                        return self.err("expected `,` or `.`");
                    }
                }
            },
            _ => {
                self.pos = self.pos.saturating_sub(1);
                return self.err("expected `:-` or `.`");
            }
        }
        Ok(Clause::new(head, LinConstraint::from_truths(lits), body))
    }

    fn atom_rest(&mut self, pred: String) -> Result<Atom, ChcError> {
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            loop {
                args.push(self.term()?);
                match self.bump() {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    _ => {
                        self.pos = self.pos.saturating_sub(1);
                        return self.err("expected `,` or `)` in argument list");
                    }
                }
            }
        }
        Ok(Atom::new(pred, args))
    }

    fn term(&mut self) -> Result<Term, ChcError> {
        match self.bump() {
            Tok::Var(v) => Ok(Term::Var(self.var_name(v))),
            Tok::Int(n) => Ok(Term::Num(self.rational_rest(n)?)),
            Tok::Minus => match self.bump() {
                Tok::Int(n) => Ok(Term::Num(-self.rational_rest(n)?)),
                _ => {
                    self.pos = self.pos.saturating_sub(1);
                    self.err("expected a number after `-`")
                }
            },
            Tok::Pred(f) => {
                if *self.peek() == Tok::LParen {
                    let a = self.atom_rest(f)?;
                    Ok(Term::compound(a.pred, a.args))
                } else {
                    Ok(Term::Sym(f))
                }
            }
            Tok::LBrack => {
                let mut items = Vec::new();
                if *self.peek() == Tok::RBrack {
                    self.bump();
                    return Ok(Term::list(items));
                }
                loop {
                    items.push(self.term()?);
                    match self.bump() {
                        Tok::Comma => continue,
                        Tok::RBrack => break,
                        _ => {
                            self.pos = self.pos.saturating_sub(1);
                            return self.err("expected `,` or `]` in list");
                        }
                    }
                }
                Ok(Term::list(items))
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                self.err("expected a term")
            }
        }
    }

    fn rational_rest(&mut self, n: BigInt) -> Result<Rat, ChcError> {
        if *self.peek() == Tok::Slash {
            if let Tok::Int(d) = self.peek2().clone() {
                if d.is_zero() {
                    self.bump();
                    return self.err("zero denominator");
                }
                self.bump();
                self.bump();
                return Ok(Rat::new(n, d));
            }
        }
        Ok(Rat::from_integer(n))
    }

    fn literal(&mut self, lits: &mut Vec<Truth>, body: &mut Vec<Atom>) -> Result<(), ChcError> {
        if let Tok::Pred(p) = self.peek().clone() {
            if p == GOAL {
                return self.err(format!("`{GOAL}` may not appear in a body"));
            }
            self.bump();
            body.push(self.atom_rest(p)?);
            return Ok(());
        }
        lits.push(self.relation()?);
        Ok(())
    }

    fn relation(&mut self) -> Result<Truth, ChcError> {
        let lhs = self.expr()?;
        let rel = self.bump();
        let rhs = self.expr()?;
        let one = LinExpr::constant(Rat::one());
        Ok(match rel {
            Tok::Eq => LinAtom::eq(&lhs, &rhs),
            Tok::Le => LinAtom::le(&lhs, &rhs),
            Tok::Ge => LinAtom::ge(&lhs, &rhs),
            // Integer relaxation of strict comparisons.
            Tok::Lt => LinAtom::le(&lhs.add(&one), &rhs),
            Tok::Gt => LinAtom::ge(&lhs, &rhs.add(&one)),
            _ => {
                self.pos = self.pos.saturating_sub(2);
                return self.err("expected a relation (=, =<, >=, <, >)");
            }
        })
    }

    fn expr(&mut self) -> Result<LinExpr, ChcError> {
        let mut acc = self.product()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = acc.add(&self.product()?);
                }
                Tok::Minus => {
                    self.bump();
                    acc = acc.sub(&self.product()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<LinExpr, ChcError> {
        let mut acc = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.factor()?;
            acc = if acc.is_constant() {
                rhs.scale(acc.constant_term())
            } else if rhs.is_constant() {
                acc.scale(rhs.constant_term())
            } else {
                return self.err("nonlinear product");
            };
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<LinExpr, ChcError> {
        match self.bump() {
            Tok::Int(n) => Ok(LinExpr::constant(self.rational_rest(n)?)),
            Tok::Var(v) => Ok(LinExpr::var(self.var_name(v))),
            Tok::Minus => Ok(self.factor()?.scale(&-Rat::one())),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                self.err("expected a linear expression")
            }
        }
    }
}

/// Parses a program in the CHC text syntax.
pub fn parse_chc(text: &str) -> Result<ChcProgram, ChcError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        anon: 0,
    };
    let mut clauses = Vec::new();
    while *p.peek() != Tok::Eof {
        clauses.push(p.clause()?);
    }
    ChcProgram::new(clauses)
}

/// Parses a comma-separated conjunction of linear relations, such as
/// `X >= 1, Y = 0`. The empty string is TRUE.
pub fn parse_constraint(text: &str) -> Result<LinConstraint, ChcError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        anon: 0,
    };
    let mut lits = Vec::new();
    if *p.peek() == Tok::Eof {
        return Ok(LinConstraint::top());
    }
    loop {
        lits.push(p.relation()?);
        match p.bump() {
            Tok::Comma => continue,
            Tok::Eof => break,
            _ => {
                p.pos = p.pos.saturating_sub(1);
                return p.err("expected `,` or end of input");
            }
        }
    }
    Ok(LinConstraint::from_truths(lits))
}
