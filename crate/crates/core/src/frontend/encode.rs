use std::collections::{BTreeMap, BTreeSet};

use num_traits::One;

use super::parse::relation;
use super::{CmpOp, Command, Cond, Expr, ImpProgram, Label};
use crate::chc::{ChcProgram, Clause, Head};
use crate::polyhedra::{LinAtom, LinConstraint, LinExpr};
use crate::terms::{Atom, Rat, Term};

/// Predicates of the interpreter. Everything except `reach` is unfolded
/// away by the specializer.
pub const INTERPRETER_PREDICATES: [&str; 9] = [
    "tr",
    "at",
    "eval",
    "beval",
    "update",
    "nextlab",
    "initConf",
    "errorConf",
    "reach",
];

/// The interpreter clauses together with the program they encode.
#[derive(Debug, Clone)]
pub struct InterpreterEncoding {
    pub program: ChcProgram,
    pub imp: ImpProgram,
    /// Logic variable of each program variable, in declaration order.
    pub env_vars: Vec<String>,
    /// Symbol standing for each program variable inside `int(_)` terms.
    pub symbols: BTreeMap<String, String>,
}

impl InterpreterEncoding {
    pub fn label_term(l: Label) -> Term {
        match l {
            Label::At(n) => Term::int(n as i64),
            Label::Halt => Term::sym("h"),
        }
    }

    pub fn command_term(&self, c: &Command) -> Term {
        match c {
            Command::Assign(v, e) => Term::compound(
                "asgn",
                vec![
                    self.var_term(v),
                    Term::compound("expr", vec![self.expr_term(e)]),
                ],
            ),
            Command::IteGoto(c, a, b) => Term::compound(
                "ite",
                vec![
                    self.cond_term(c),
                    Self::label_term(*a),
                    Self::label_term(*b),
                ],
            ),
            Command::Goto(l) => Term::compound("goto", vec![Self::label_term(*l)]),
            Command::Halt => Term::sym("halt"),
        }
    }

    fn var_term(&self, v: &str) -> Term {
        Term::compound("int", vec![Term::sym(self.symbols[v].clone())])
    }

    fn expr_term(&self, e: &Expr) -> Term {
        match e {
            Expr::Var(v) => self.var_term(v),
            Expr::Const(k) => Term::compound("int", vec![Term::Num(k.clone())]),
            Expr::Add(a, b) => Term::compound("plus", vec![self.expr_term(a), self.expr_term(b)]),
            Expr::Sub(a, b) => Term::compound("minus", vec![self.expr_term(a), self.expr_term(b)]),
            Expr::Mul(k, e) => Term::compound(
                "mult",
                vec![
                    Term::compound("int", vec![Term::Num(k.clone())]),
                    self.expr_term(e),
                ],
            ),
            Expr::Neg(e) => Term::compound("neg", vec![self.expr_term(e)]),
        }
    }

    fn cond_term(&self, c: &Cond) -> Term {
        match c {
            Cond::Nondet => Term::sym("nondet"),
            Cond::Cmp(a, op, b) => {
                Term::compound(op.functor(), vec![self.expr_term(a), self.expr_term(b)])
            }
            Cond::And(a, b) => Term::compound("and", vec![self.cond_term(a), self.cond_term(b)]),
        }
    }

    /// `[[int(x1),T1],...]` for the given value terms.
    pub fn env_term(&self, values: &[Term]) -> Term {
        let vars = self.imp.var_names();
        Term::list(
            vars.iter()
                .zip(values)
                .map(|(v, t)| Term::list(vec![self.var_term(v), t.clone()]))
                .collect(),
        )
    }

    fn env_vars_term(&self) -> Term {
        let vals: Vec<Term> = self.env_vars.iter().map(|v| Term::var(v.clone())).collect();
        self.env_term(&vals)
    }

    /// Splits `cf(cmd(L,C),Env)` into label, command and environment values.
    pub fn config_parts(t: &Term) -> Option<(&Term, &Term, Vec<&Term>)> {
        let Term::Compound(f, args) = t else {
            return None;
        };
        if f != "cf" || args.len() != 2 {
            return None;
        }
        let Term::Compound(g, lc) = &args[0] else {
            return None;
        };
        if g != "cmd" || lc.len() != 2 {
            return None;
        }
        let Term::Compound(_, entries) = &args[1] else {
            return None;
        };
        let mut vals = Vec::with_capacity(entries.len());
        for e in entries {
            let Term::Compound(_, pair) = e else {
                return None;
            };
            vals.push(pair.get(1)?);
        }
        Some((&lc[0], &lc[1], vals))
    }

    pub fn halt_label_term() -> Term {
        Self::label_term(Label::Halt)
    }
}

fn atom(pred: &str, args: Vec<Term>) -> Atom {
    Atom::new(pred, args)
}

fn v(name: &str) -> Term {
    Term::var(name)
}

fn cf(l: Term, c: Term, env: Term) -> Term {
    Term::compound("cf", vec![Term::compound("cmd", vec![l, c]), env])
}

fn clause(head: Atom, c: LinConstraint, body: Vec<Atom>) -> Clause {
    Clause::new(Head::Atom(head), c, body)
}

fn lin(truths: impl IntoIterator<Item = crate::polyhedra::Truth>) -> LinConstraint {
    LinConstraint::from_truths(truths)
}

fn collect_numbers(e: &Expr, consts: &mut BTreeSet<Rat>, coeffs: &mut BTreeSet<Rat>) {
    match e {
        Expr::Var(_) => {}
        Expr::Const(k) => {
            consts.insert(k.clone());
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            collect_numbers(a, consts, coeffs);
            collect_numbers(b, consts, coeffs);
        }
        Expr::Mul(k, e) => {
            coeffs.insert(k.clone());
            collect_numbers(e, consts, coeffs);
        }
        Expr::Neg(e) => collect_numbers(e, consts, coeffs),
    }
}

fn collect_cond_numbers(c: &Cond, consts: &mut BTreeSet<Rat>, coeffs: &mut BTreeSet<Rat>) {
    for (a, _, b) in c.conjuncts() {
        collect_numbers(a, consts, coeffs);
        collect_numbers(b, consts, coeffs);
    }
}

fn symbols(vars: &[String]) -> BTreeMap<String, String> {
    let plain = vars
        .iter()
        .all(|v| v.starts_with(|c: char| c.is_ascii_lowercase()));
    vars.iter()
        .map(|v| {
            let s = if plain { v.clone() } else { format!("v_{v}") };
            (v.clone(), s)
        })
        .collect()
}

/// Encodes `prog` as the interpreter clauses: the transition relation `tr`
/// over configurations `cf(cmd(L,C),Env)`, the program facts `at`, and the
/// reachability clauses whose goal is derivable iff some run from an
/// initial configuration ends in an error configuration.
pub fn encode_interpreter(prog: &ImpProgram) -> InterpreterEncoding {
    let vars = prog.var_names();
    let env_vars: Vec<String> = vars
        .iter()
        .map(|x| prog.logic_name(x).to_string())
        .collect();
    let enc = InterpreterEncoding {
        program: ChcProgram::empty(),
        imp: prog.clone(),
        env_vars: env_vars.clone(),
        symbols: symbols(&vars),
    };
    let top = LinConstraint::top;
    let mut cs: Vec<Clause> = Vec::new();

    // Transitions.
    let env = v("Env");
    let env1 = v("Env1");
    cs.push(clause(
        atom(
            "tr",
            vec![
                cf(
                    v("L"),
                    Term::compound("asgn", vec![v("X"), Term::compound("expr", vec![v("E")])]),
                    env.clone(),
                ),
                cf(v("L1"), v("C"), env1.clone()),
            ],
        ),
        top(),
        vec![
            atom("eval", vec![v("E"), env.clone(), v("V")]),
            atom("update", vec![env.clone(), v("X"), v("V"), env1.clone()]),
            atom("nextlab", vec![v("L"), v("L1")]),
            atom("at", vec![v("L1"), v("C")]),
        ],
    ));
    let ite = Term::compound("ite", vec![v("E"), v("L1"), v("L2")]);
    for (target, test) in [("L1", v("E")), ("L2", Term::compound("not", vec![v("E")]))] {
        cs.push(clause(
            atom(
                "tr",
                vec![
                    cf(v("L"), ite.clone(), env.clone()),
                    cf(v(target), v("C"), env.clone()),
                ],
            ),
            top(),
            vec![
                atom("beval", vec![test, env.clone()]),
                atom("at", vec![v(target), v("C")]),
            ],
        ));
    }
    cs.push(clause(
        atom(
            "tr",
            vec![
                cf(v("L"), Term::compound("goto", vec![v("L1")]), env.clone()),
                cf(v("L1"), v("C"), env.clone()),
            ],
        ),
        top(),
        vec![atom("at", vec![v("L1"), v("C")])],
    ));

    // Program facts.
    for (i, c) in prog.commands.iter().enumerate() {
        cs.push(clause(
            atom(
                "at",
                vec![
                    InterpreterEncoding::label_term(Label::At(i)),
                    enc.command_term(c),
                ],
            ),
            top(),
            vec![],
        ));
    }
    cs.push(clause(
        atom(
            "at",
            vec![
                InterpreterEncoding::label_term(Label::Halt),
                enc.command_term(&Command::Halt),
            ],
        ),
        top(),
        vec![],
    ));

    // Reachability.
    cs.push(Clause::new(
        Head::Goal,
        top(),
        vec![atom("initConf", vec![v("X")]), atom("reach", vec![v("X")])],
    ));
    cs.push(clause(
        atom("reach", vec![v("X")]),
        top(),
        vec![
            atom("tr", vec![v("X"), v("X1")]),
            atom("reach", vec![v("X1")]),
        ],
    ));
    cs.push(clause(
        atom("reach", vec![v("X")]),
        top(),
        vec![atom("errorConf", vec![v("X")])],
    ));
    let env_vars_t = enc.env_vars_term();
    cs.push(clause(
        atom(
            "initConf",
            vec![cf(
                InterpreterEncoding::label_term(prog.entry()),
                v("_C"),
                env_vars_t.clone(),
            )],
        ),
        prog.init.clone(),
        vec![atom(
            "at",
            vec![InterpreterEncoding::label_term(prog.entry()), v("_C")],
        )],
    ));
    for e in &prog.errors {
        cs.push(clause(
            atom(
                "errorConf",
                vec![cf(
                    InterpreterEncoding::halt_label_term(),
                    Term::sym("halt"),
                    env_vars_t.clone(),
                )],
            ),
            e.clone(),
            vec![],
        ));
    }

    // Expression evaluation.
    let mut consts = BTreeSet::new();
    let mut coeffs = BTreeSet::new();
    for c in &prog.commands {
        match c {
            Command::Assign(_, e) => collect_numbers(e, &mut consts, &mut coeffs),
            Command::IteGoto(c, _, _) => collect_cond_numbers(c, &mut consts, &mut coeffs),
            _ => {}
        }
    }
    for (x, lx) in vars.iter().zip(&env_vars) {
        cs.push(clause(
            atom("eval", vec![enc.var_term(x), env_vars_t.clone(), v(lx)]),
            top(),
            vec![],
        ));
    }
    let ve = LinExpr::var("V");
    let v1 = LinExpr::var("V1");
    let v2 = LinExpr::var("V2");
    for k in &consts {
        cs.push(clause(
            atom(
                "eval",
                vec![
                    Term::compound("int", vec![Term::Num(k.clone())]),
                    env.clone(),
                    v("V"),
                ],
            ),
            lin([LinAtom::eq(&ve, &LinExpr::constant(k.clone()))]),
            vec![],
        ));
    }
    let sub_evals = || {
        vec![
            atom("eval", vec![v("E1"), v("Env"), v("V1")]),
            atom("eval", vec![v("E2"), v("Env"), v("V2")]),
        ]
    };
    for (f, rhs) in [("plus", v1.add(&v2)), ("minus", v1.sub(&v2))] {
        cs.push(clause(
            atom(
                "eval",
                vec![
                    Term::compound(f, vec![v("E1"), v("E2")]),
                    env.clone(),
                    v("V"),
                ],
            ),
            lin([LinAtom::eq(&ve, &rhs)]),
            sub_evals(),
        ));
    }
    cs.push(clause(
        atom(
            "eval",
            vec![Term::compound("neg", vec![v("E1")]), env.clone(), v("V")],
        ),
        lin([LinAtom::eq(&ve, &v1.scale(&-Rat::one()))]),
        vec![atom("eval", vec![v("E1"), v("Env"), v("V1")])],
    ));
    for k in &coeffs {
        cs.push(clause(
            atom(
                "eval",
                vec![
                    Term::compound(
                        "mult",
                        vec![Term::compound("int", vec![Term::Num(k.clone())]), v("E1")],
                    ),
                    env.clone(),
                    v("V"),
                ],
            ),
            lin([LinAtom::eq(&ve, &v1.scale(k))]),
            vec![atom("eval", vec![v("E1"), v("Env"), v("V1")])],
        ));
    }

    // Boolean evaluation.
    let not = |t: Term| Term::compound("not", vec![t]);
    let bv = LinExpr::var("B");
    let zero = LinExpr::zero();
    cs.push(clause(
        atom("beval", vec![Term::sym("nondet"), env.clone()]),
        lin([LinAtom::ge(&bv, &LinExpr::constant(Rat::one()))]),
        vec![],
    ));
    cs.push(clause(
        atom("beval", vec![not(Term::sym("nondet")), env.clone()]),
        lin([LinAtom::le(&bv, &zero)]),
        vec![],
    ));
    for op in [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq] {
        let test = Term::compound(op.functor(), vec![v("E1"), v("E2")]);
        for negated in [false, true] {
            let t = if negated {
                not(test.clone())
            } else {
                test.clone()
            };
            for r in relation(&v1, op, &v2, negated) {
                cs.push(clause(
                    atom("beval", vec![t.clone(), env.clone()]),
                    lin([r]),
                    sub_evals(),
                ));
            }
        }
    }
    let conj = Term::compound("and", vec![v("B1"), v("B2")]);
    cs.push(clause(
        atom("beval", vec![conj.clone(), env.clone()]),
        top(),
        vec![
            atom("beval", vec![v("B1"), env.clone()]),
            atom("beval", vec![v("B2"), env.clone()]),
        ],
    ));
    for b in ["B1", "B2"] {
        cs.push(clause(
            atom("beval", vec![not(conj.clone()), env.clone()]),
            top(),
            vec![atom("beval", vec![not(v(b)), env.clone()])],
        ));
    }

    // Environment update and label succession.
    for (i, x) in vars.iter().enumerate() {
        let mut after: Vec<Term> = env_vars.iter().map(|n| v(n)).collect();
        after[i] = v("_V");
        cs.push(clause(
            atom(
                "update",
                vec![
                    env_vars_t.clone(),
                    enc.var_term(x),
                    v("_V"),
                    enc.env_term(&after),
                ],
            ),
            top(),
            vec![],
        ));
    }
    for i in 0..prog.commands.len() {
        cs.push(clause(
            atom(
                "nextlab",
                vec![
                    InterpreterEncoding::label_term(Label::At(i)),
                    InterpreterEncoding::label_term(prog.next_label(i)),
                ],
            ),
            top(),
            vec![],
        ));
    }

    InterpreterEncoding {
        program: ChcProgram::new(cs).expect("interpreter clauses are well formed"),
        ..enc
    }
}
