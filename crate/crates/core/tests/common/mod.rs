//! Test oracles shared by the integration tests. None of them call into the
//! solver under test except to build inputs.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use specint::chc::{bounded_oracle, parse_constraint, ChcProgram, OracleOutcome};
use specint::driver::{verify_source, PipelineConfig, Source};
use specint::frontend::{encode_interpreter, parse_imp, Command, ImpProgram, Label};
use specint::polyhedra::{is_sat, simplify, LinAtom, LinConstraint, Rel, Truth};
use specint::reversal::reverse;
use specint::specializer::{specialize_prop, specialize_remove, Generalization, PropConfig};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qd(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Eq,
    Le,
    Lt,
}

/// `Σ coeffs·var kind bound`.
#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: BTreeMap<String, Q>,
    pub kind: Kind,
    pub bound: Q,
}

impl Row {
    pub fn of_atom(a: &LinAtom) -> Row {
        Row {
            coeffs: a.coeffs().clone(),
            kind: if a.rel() == Rel::Eq {
                Kind::Eq
            } else {
                Kind::Le
            },
            bound: a.bound().clone(),
        }
    }

    /// The complement of a non-strict atom as a strict row.
    pub fn negation_of(a: &LinAtom) -> Vec<Row> {
        let neg = |coeffs: &BTreeMap<String, Q>, bound: &Q| Row {
            coeffs: coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect(),
            kind: Kind::Lt,
            bound: -bound,
        };
        let pos = |coeffs: &BTreeMap<String, Q>, bound: &Q| Row {
            coeffs: coeffs.clone(),
            kind: Kind::Lt,
            bound: bound.clone(),
        };
        match a.rel() {
            // not (e <= b)  <=>  -e < -b
            Rel::Le => vec![neg(a.coeffs(), a.bound())],
            // not (e = b) is a disjunction; callers handle the two sides.
            Rel::Eq => vec![neg(a.coeffs(), a.bound()), pos(a.coeffs(), a.bound())],
        }
    }
}

/// Rational satisfiability by Fourier–Motzkin elimination with strictness
/// tracking.
pub fn fm_sat(rows: &[Row]) -> bool {
    let mut rows: Vec<Row> = rows.to_vec();
    loop {
        for r in &mut rows {
            r.coeffs.retain(|_, c| !c.is_zero());
        }
        for r in &rows {
            if r.coeffs.is_empty() {
                let ok = match r.kind {
                    Kind::Eq => r.bound.is_zero(),
                    Kind::Le => !r.bound.is_negative(),
                    Kind::Lt => r.bound.is_positive(),
                };
                if !ok {
                    return false;
                }
            }
        }
        rows.retain(|r| !r.coeffs.is_empty());
        let Some(var) = rows.iter().flat_map(|r| r.coeffs.keys()).min().cloned() else {
            return true;
        };
        if let Some(i) = rows
            .iter()
            .position(|r| r.kind == Kind::Eq && r.coeffs.contains_key(&var))
        {
            let e = rows.remove(i);
            let c = e.coeffs[&var].clone();
            for r in &mut rows {
                if let Some(k) = r.coeffs.get(&var).cloned() {
                    let f = k / &c;
                    for (v, ec) in &e.coeffs {
                        *r.coeffs.entry(v.clone()).or_insert_with(Q::zero) -= &f * ec;
                    }
                    r.bound -= &f * &e.bound;
                }
            }
            continue;
        }
        let (with, without): (Vec<Row>, Vec<Row>) =
            rows.into_iter().partition(|r| r.coeffs.contains_key(&var));
        let mut next = without;
        let (up, lo): (Vec<Row>, Vec<Row>) =
            with.into_iter().partition(|r| r.coeffs[&var].is_positive());
        for u in &up {
            for l in &lo {
                let a = u.coeffs[&var].clone();
                let b = -l.coeffs[&var].clone();
                let mut coeffs = BTreeMap::new();
                for (v, c) in &u.coeffs {
                    *coeffs.entry(v.clone()).or_insert_with(Q::zero) += c * &b;
                }
                for (v, c) in &l.coeffs {
                    *coeffs.entry(v.clone()).or_insert_with(Q::zero) += c * &a;
                }
                coeffs.remove(&var);
                let kind = if u.kind == Kind::Lt || l.kind == Kind::Lt {
                    Kind::Lt
                } else {
                    Kind::Le
                };
                next.push(Row {
                    coeffs,
                    kind,
                    bound: &u.bound * &b + &l.bound * &a,
                });
            }
        }
        rows = next;
    }
}

pub fn rows_of(c: &LinConstraint) -> Vec<Row> {
    if c.is_false() {
        return vec![Row {
            coeffs: BTreeMap::new(),
            kind: Kind::Lt,
            bound: q(0),
        }];
    }
    c.atoms().iter().map(Row::of_atom).collect()
}

/// `a ⊨ b`, decided atom by atom with strict complements.
pub fn fm_entails(a: &LinConstraint, b: &LinConstraint) -> bool {
    if !fm_sat(&rows_of(a)) {
        return true;
    }
    if b.is_false() {
        return false;
    }
    b.atoms().iter().all(|atom| {
        Row::negation_of(atom).into_iter().all(|n| {
            let mut rows = rows_of(a);
            rows.push(n);
            !fm_sat(&rows)
        })
    })
}

pub fn fm_equivalent(a: &LinConstraint, b: &LinConstraint) -> bool {
    fm_entails(a, b) && fm_entails(b, a)
}

/// A random atom over `vars` with small integer coefficients.
pub fn random_atom(rng: &mut ChaCha8Rng, vars: &[&str], eq_chance: f64) -> Option<LinAtom> {
    let mut coeffs = BTreeMap::new();
    for v in vars {
        let k: i64 = rng.gen_range(-3..=3);
        if k != 0 {
            coeffs.insert(v.to_string(), q(k));
        }
    }
    let rel = if rng.gen_bool(eq_chance) {
        Rel::Eq
    } else {
        Rel::Le
    };
    match LinAtom::new(coeffs, rel, q(rng.gen_range(-6..=6))) {
        Truth::Atom(a) => Some(a),
        _ => None,
    }
}

pub fn random_constraint(rng: &mut ChaCha8Rng, vars: &[&str], max_atoms: usize) -> LinConstraint {
    let n = rng.gen_range(1..=max_atoms);
    let atoms: Vec<LinAtom> = (0..n)
        .filter_map(|_| random_atom(rng, vars, 0.15))
        .collect();
    LinConstraint::from_atoms(atoms)
}

pub fn random_point(rng: &mut ChaCha8Rng, vars: &BTreeSet<String>) -> BTreeMap<String, Q> {
    vars.iter()
        .map(|v| (v.clone(), qd(rng.gen_range(-40..=40), rng.gen_range(1..=4))))
        .collect()
}

/// Result of exhaustively executing a program with nondeterministic choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ground {
    Safe,
    Unsafe,
    Unknown,
}

/// Explores the reachable states of `prog` breadth first. Only programs
/// whose variables all have initial values are supported.
pub fn explore(prog: &ImpProgram, max_states: usize) -> Ground {
    let names = prog.var_names();
    let Some(init): Option<Vec<Q>> = prog.variables.iter().map(|(_, v)| v.clone()).collect() else {
        return Ground::Unknown;
    };
    let env_of = |vals: &[Q]| -> BTreeMap<String, Q> {
        names.iter().cloned().zip(vals.iter().cloned()).collect()
    };
    let mut seen: BTreeSet<(Label, Vec<Q>)> = BTreeSet::new();
    let mut queue = VecDeque::new();
    queue.push_back((prog.entry(), init));
    while let Some((l, vals)) = queue.pop_front() {
        if !seen.insert((l, vals.clone())) {
            continue;
        }
        if seen.len() > max_states {
            return Ground::Unknown;
        }
        let env = env_of(&vals);
        let mut push = |l: Label, v: Vec<Q>| queue.push_back((l, v));
        match (l, prog.command(l)) {
            (Label::Halt, _) | (_, Command::Halt) => {
                if !prog.assertion_holds(&env) {
                    return Ground::Unsafe;
                }
            }
            (Label::At(n), Command::Assign(x, e)) => {
                let mut v = vals.clone();
                let i = names.iter().position(|m| m == x).unwrap();
                v[i] = e.eval(&env);
                push(prog.next_label(n), v);
            }
            (_, Command::IteGoto(c, a, b)) => match c.eval(&env) {
                Some(true) => push(*a, vals.clone()),
                Some(false) => push(*b, vals.clone()),
                None => {
                    push(*a, vals.clone());
                    push(*b, vals.clone());
                }
            },
            (_, Command::Goto(t)) => push(*t, vals.clone()),
        }
    }
    Ground::Safe
}

/// Generates the source of a small program: at most three initialized
/// variables, at most two loops.
pub fn random_program(rng: &mut ChaCha8Rng) -> String {
    let nv = rng.gen_range(1..=3);
    let vars: Vec<&str> = ["x", "y", "z"][..nv].to_vec();
    let mut src = String::new();
    for v in &vars {
        src.push_str(&format!("int {v} = {};\n", rng.gen_range(-2..=3)));
    }
    let mut loops = 0;
    let body = block(rng, &vars, 2, &mut loops, 3);
    src.push_str(&body);
    src.push_str(&format!("assert({});\n", cond(rng, &vars, false)));
    src
}

fn expr(rng: &mut ChaCha8Rng, vars: &[&str]) -> String {
    let v = vars[rng.gen_range(0..vars.len())];
    let w = vars[rng.gen_range(0..vars.len())];
    let k: i64 = rng.gen_range(-2..=2);
    match rng.gen_range(0..4) {
        0 => format!("{v} + {k}"),
        1 => format!("{v} + {w}"),
        2 => format!("{v} - {w} + {k}"),
        _ => format!("2 * {v} + {k}"),
    }
}

fn cond(rng: &mut ChaCha8Rng, vars: &[&str], allow_nondet: bool) -> String {
    if allow_nondet && rng.gen_bool(0.3) {
        return "*".into();
    }
    let v = vars[rng.gen_range(0..vars.len())];
    let op = ["<", "<=", ">", ">=", "=="][rng.gen_range(0..5)];
    let rhs = if rng.gen_bool(0.5) {
        rng.gen_range(-3..=6).to_string()
    } else {
        vars[rng.gen_range(0..vars.len())].to_string()
    };
    format!("{v} {op} {rhs}")
}

fn block(
    rng: &mut ChaCha8Rng,
    vars: &[&str],
    depth: usize,
    loops: &mut usize,
    max_stmts: usize,
) -> String {
    let mut out = String::new();
    for _ in 0..rng.gen_range(1..=max_stmts) {
        let x = vars[rng.gen_range(0..vars.len())];
        match rng.gen_range(0..6) {
            0..=2 => out.push_str(&format!("{x} = {};\n", expr(rng, vars))),
            3 if depth > 0 => {
                let t = block(rng, vars, depth - 1, loops, 2);
                let e = block(rng, vars, depth - 1, loops, 1);
                out.push_str(&format!(
                    "if ({}) {{\n{t}}} else {{\n{e}}}\n",
                    cond(rng, vars, true)
                ));
            }
            4 | 5 if depth > 0 && *loops < 2 => {
                *loops += 1;
                let b = block(rng, vars, depth - 1, loops, 2);
                out.push_str(&format!("while ({}) {{\n{b}}}\n", cond(rng, vars, true)));
            }
            _ => out.push_str(&format!("{x} = {};\n", expr(rng, vars))),
        }
    }
    out
}

/// Vertices of a bounded 2-D polygon given as a constraint over X and Y.
pub fn vertices(c: &LinConstraint) -> Vec<(Q, Q)> {
    let lines: Vec<&LinAtom> = c.atoms().iter().collect();
    let mut out: Vec<(Q, Q)> = Vec::new();
    let coef = |a: &LinAtom, v: &str| a.coeffs().get(v).cloned().unwrap_or_else(|| q(0));
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let (a1, b1, c1) = (
                coef(lines[i], "X"),
                coef(lines[i], "Y"),
                lines[i].bound().clone(),
            );
            let (a2, b2, c2) = (
                coef(lines[j], "X"),
                coef(lines[j], "Y"),
                lines[j].bound().clone(),
            );
            let det = &a1 * &b2 - &a2 * &b1;
            if det == q(0) {
                continue;
            }
            let x = (&c1 * &b2 - &c2 * &b1) / &det;
            let y = (&a1 * &c2 - &a2 * &c1) / &det;
            let pt: BTreeMap<String, Q> =
                [("X".to_string(), x.clone()), ("Y".to_string(), y.clone())].into();
            if c.holds_at(&pt) == Some(true) && !out.contains(&(x.clone(), y.clone())) {
                out.push((x, y));
            }
        }
    }
    out
}

fn cross(o: &(Q, Q), a: &(Q, Q), b: &(Q, Q)) -> Q {
    (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
}

/// Convex hull of points, counter-clockwise (monotone chain).
fn polygon(mut pts: Vec<(Q, Q)>) -> Vec<(Q, Q)> {
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<(Q, Q)> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= q(0)
        {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<(Q, Q)> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= q(0)
        {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn inside(poly: &[(Q, Q)], p: &(Q, Q)) -> bool {
    match poly.len() {
        0 => false,
        1 => &poly[0] == p,
        2 => {
            cross(&poly[0], &poly[1], p) == q(0)
                && p.0 >= poly[0].0.clone().min(poly[1].0.clone())
                && p.0 <= poly[0].0.clone().max(poly[1].0.clone())
                && p.1 >= poly[0].1.clone().min(poly[1].1.clone())
                && p.1 <= poly[0].1.clone().max(poly[1].1.clone())
        }
        n => (0..n).all(|i| cross(&poly[i], &poly[(i + 1) % n], p) >= q(0)),
    }
}

pub fn random_polygon(rng: &mut ChaCha8Rng) -> LinConstraint {
    loop {
        let (x0, y0) = (rng.gen_range(-5..=3), rng.gen_range(-5..=3));
        let (w, h) = (rng.gen_range(0..=4), rng.gen_range(0..=4));
        let mut c = parse_constraint(&format!(
            "X >= {x0}, X =< {}, Y >= {y0}, Y =< {}",
            x0 + w,
            y0 + h
        ))
        .unwrap();
        if let Some(a) = random_atom(rng, &["X", "Y"], 0.0) {
            c = c.and(&LinConstraint::from_atoms([a]));
        }
        if is_sat(&c) {
            return c;
        }
    }
}

/// Compares a computed hull of two bounded 2-D polygons with the convex
/// hull of their vertices.
pub fn hull_matches_vertex_oracle(
    a: &LinConstraint,
    b: &LinConstraint,
    h: &LinConstraint,
) -> Result<(), String> {
    let mut pts = vertices(a);
    pts.extend(vertices(b));
    let poly = polygon(pts);
    for p in &poly {
        let pt: BTreeMap<String, Q> = [
            ("X".to_string(), p.0.clone()),
            ("Y".to_string(), p.1.clone()),
        ]
        .into();
        if h.holds_at(&pt) != Some(true) {
            return Err(format!("{h} misses a vertex of {a} or {b}"));
        }
    }
    let hb = h.and(&parse_constraint("X >= -20, X =< 20, Y >= -20, Y =< 20").unwrap());
    for v in vertices(&simplify(&hb)) {
        if !inside(&poly, &v) {
            return Err(format!(
                "{h} has vertex {v:?} outside the hull of {a} and {b}"
            ));
        }
    }
    Ok(())
}

/// The starting conditions of `src` and their transformed versions.
pub fn variants(src: &str) -> Vec<(&'static str, ChcProgram)> {
    let enc = encode_interpreter(&parse_imp(src).unwrap());
    let vc = specialize_remove(&enc, 1_000_000).unwrap().program;
    let mut out = vec![("remove", vc.clone())];
    for (name, g) in [
        ("prop-M", Generalization::Monovariant),
        ("prop-PH", Generalization::Polyhedral),
    ] {
        let cfg = PropConfig {
            generalization: g,
            ..PropConfig::default()
        };
        let s = specialize_prop(&vc, &cfg).unwrap().program;
        if name == "prop-PH" {
            out.push(("reverse-PH", reverse(&s).unwrap()));
        }
        out.push((name, s));
    }
    out.push(("reverse", reverse(&vc).unwrap()));
    out
}

/// Checks every transformation of `src` and the pipeline verdict against
/// exhaustive execution.
pub fn transformations_agree(src: &str) -> Result<(), String> {
    let prog = parse_imp(src).unwrap();
    let truth = explore(&prog, 5_000);
    for (name, p) in variants(src) {
        for d in 1..=10 {
            match bounded_oracle(&p, d) {
                OracleOutcome::FoundAnswer(_) if truth == Ground::Safe => {
                    return Err(format!("{name} finds an answer at depth {d}:\n{src}"));
                }
                OracleOutcome::ExhaustedAll if truth == Ground::Unsafe => {
                    return Err(format!("{name} exhausts at depth {d}:\n{src}"));
                }
                _ => {}
            }
        }
        if prog.is_loop_free() {
            let expected = if truth == Ground::Unsafe {
                "FOUND_ANSWER"
            } else {
                "EXHAUSTED_ALL"
            };
            let got = bounded_oracle(&p, 10).name();
            if got != expected {
                return Err(format!("{name} gives {got}, expected {expected}:\n{src}"));
            }
        }
    }
    let cfg = PipelineConfig {
        phase_deadline: std::time::Duration::from_secs(2),
        total_deadline: std::time::Duration::from_secs(4),
        max_iterations: 2,
        ..PipelineConfig::default()
    };
    let r = verify_source(Source::Imp(src.to_string()), &cfg).unwrap();
    match (r.verdict.name(), truth) {
        ("SAFE", Ground::Unsafe) | ("UNSAFE", Ground::Safe) => {
            Err(format!("pipeline says {}:\n{src}", r.verdict.name()))
        }
        _ => Ok(()),
    }
}

/// Source of a random linear clause set over `p`, `q` and `r`.
pub fn random_chc(rng: &mut ChaCha8Rng) -> String {
    let preds = ["p", "q", "r"];
    let arity: BTreeMap<&str, usize> = preds.iter().map(|p| (*p, rng.gen_range(1..=2))).collect();
    let args = |p: &str, prefix: &str| -> Vec<String> {
        (0..arity[p]).map(|i| format!("{prefix}{i}")).collect()
    };
    let mut out = String::new();
    let lit = |rng: &mut ChaCha8Rng, vars: &[String]| -> String {
        let v = &vars[rng.gen_range(0..vars.len())];
        let w = &vars[rng.gen_range(0..vars.len())];
        let k: i64 = rng.gen_range(-3..=3);
        match rng.gen_range(0..4) {
            0 => format!("{v} = {w} + {k}"),
            1 => format!("{v} >= {k}"),
            2 => format!("{v} - {w} =< {k}"),
            _ => format!("2*{v} + {w} < {k}"),
        }
    };
    let g = preds[rng.gen_range(0..3)];
    let ga = args(g, "A");
    out.push_str(&format!(
        "unsafe :- {}, {g}({}).\n",
        lit(rng, &ga),
        ga.join(",")
    ));
    for _ in 0..rng.gen_range(2..=5) {
        let h = preds[rng.gen_range(0..3)];
        let ha = args(h, "X");
        if rng.gen_bool(0.4) {
            out.push_str(&format!("{h}({}) :- {}.\n", ha.join(","), lit(rng, &ha)));
        } else {
            let b = preds[rng.gen_range(0..3)];
            let ba = args(b, "Y");
            let all: Vec<String> = ha.iter().chain(&ba).cloned().collect();
            out.push_str(&format!(
                "{h}({}) :- {}, {b}({}), {}.\n",
                ha.join(","),
                lit(rng, &all),
                ba.join(","),
                lit(rng, &all)
            ));
        }
    }
    out
}
