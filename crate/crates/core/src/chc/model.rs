use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::polyhedra::{self, LinAtom, LinConstraint, LinExpr, Rel, Truth};
use crate::terms::{Atom, Rat, Substitution, Term};

use super::ChcError;

/// Name of the goal head in the textual syntax.
pub const GOAL: &str = "unsafe";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Head {
    Goal,
    Atom(Atom),
}

impl Head {
    pub fn pred(&self) -> Option<&str> {
        match self {
            Head::Goal => None,
            Head::Atom(a) => Some(&a.pred),
        }
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Head::Goal => f.write_str(GOAL),
            Head::Atom(a) => write!(f, "{a}"),
        }
    }
}

/// `head :- constraint, body`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    pub head: Head,
    pub constraint: LinConstraint,
    pub body: Vec<Atom>,
}

impl Clause {
    pub fn new(head: Head, constraint: LinConstraint, body: Vec<Atom>) -> Self {
        Clause {
            head,
            constraint,
            body,
        }
    }

    pub fn is_goal(&self) -> bool {
        self.head == Head::Goal
    }

    /// A clause with no body atoms.
    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    pub fn is_linear(&self) -> bool {
        self.body.len() <= 1
    }

    pub fn head_atom(&self) -> Option<&Atom> {
        match &self.head {
            Head::Goal => None,
            Head::Atom(a) => Some(a),
        }
    }

    /// Variables of the head and body atoms, in order of first appearance.
    pub fn atom_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Head::Atom(h) = &self.head {
            h.collect_vars(&mut out);
        }
        for b in &self.body {
            b.collect_vars(&mut out);
        }
        out
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut s: BTreeSet<String> = self.atom_vars().into_iter().collect();
        s.extend(self.constraint.vars());
        s
    }

    /// Constraint variables that occur in no atom.
    pub fn locals(&self) -> BTreeSet<String> {
        let atom_vars: BTreeSet<String> = self.atom_vars().into_iter().collect();
        self.constraint
            .vars()
            .into_iter()
            .filter(|v| !atom_vars.contains(v))
            .collect()
    }

    pub fn rename_vars(&self, map: &BTreeMap<String, String>) -> Clause {
        let rename_term = |t: &Term| rename_term(t, map);
        Clause {
            head: match &self.head {
                Head::Goal => Head::Goal,
                Head::Atom(a) => Head::Atom(Atom::new(
                    a.pred.clone(),
                    a.args.iter().map(rename_term).collect(),
                )),
            },
            constraint: self.constraint.rename_with(map),
            body: self
                .body
                .iter()
                .map(|a| Atom::new(a.pred.clone(), a.args.iter().map(rename_term).collect()))
                .collect(),
        }
    }

    /// Applies `s` to atoms and constraint. Bindings of constraint variables
    /// to variables rename them and bindings to numbers substitute them;
    /// `None` if a constraint variable is bound to a non-numeric term.
    pub fn apply_subst(&self, s: &Substitution) -> Option<Clause> {
        let constraint = apply_to_constraint(&self.constraint, s)?;
        Some(Clause {
            head: match &self.head {
                Head::Goal => Head::Goal,
                Head::Atom(a) => Head::Atom(a.apply(s)),
            },
            constraint,
            body: self.body.iter().map(|a| a.apply(s)).collect(),
        })
    }
}

fn rename_term(t: &Term, map: &BTreeMap<String, String>) -> Term {
    match t {
        Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
        Term::Num(_) | Term::Sym(_) => t.clone(),
        Term::Compound(f, args) => Term::Compound(
            f.clone(),
            args.iter().map(|a| rename_term(a, map)).collect(),
        ),
    }
}

/// The numeric value a term denotes in a constraint, if any.
pub(crate) fn term_as_expr(t: &Term) -> Option<LinExpr> {
    match t {
        Term::Var(v) => Some(LinExpr::var(v.clone())),
        Term::Num(q) => Some(LinExpr::constant(q.clone())),
        _ => None,
    }
}

pub(crate) fn apply_to_constraint(c: &LinConstraint, s: &Substitution) -> Option<LinConstraint> {
    if c.is_false() || s.is_empty() {
        return Some(c.clone());
    }
    let mut out = Vec::with_capacity(c.len());
    for a in c.atoms() {
        let mut coeffs: BTreeMap<String, Rat> = BTreeMap::new();
        let mut bound = a.bound().clone();
        for (v, q) in a.coeffs() {
            match s.get(v) {
                None => *coeffs.entry(v.clone()).or_default() += q,
                Some(Term::Var(w)) => *coeffs.entry(w.clone()).or_default() += q,
                Some(Term::Num(k)) => bound -= q * k,
                Some(_) => return None,
            }
        }
        out.push(LinAtom::new(coeffs, a.rel(), bound));
    }
    Some(LinConstraint::from_truths(out))
}

/// Linear equalities `v = t` for the bindings of `s` whose target is a
/// variable or a number.
pub(crate) fn binding_equalities(s: &Substitution) -> Vec<Truth> {
    s.iter()
        .filter_map(|(v, t)| {
            term_as_expr(t).map(|e| LinAtom::relate(&LinExpr::var(v.clone()), Rel::Eq, &e))
        })
        .collect()
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        let mut lits: Vec<String> = Vec::new();
        if self.constraint.is_false() {
            lits.push("1 =< 0".to_string());
        } else {
            lits.extend(self.constraint.atoms().iter().map(|a| a.to_string()));
        }
        lits.extend(self.body.iter().map(|a| a.to_string()));
        if !lits.is_empty() {
            write!(f, " :- {}", lits.join(", "))?;
        }
        f.write_str(".")
    }
}

/// An ordered set of clauses with a predicate index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChcProgram {
    clauses: Vec<Clause>,
    index: BTreeMap<String, Vec<usize>>,
    goals: Vec<usize>,
    arities: BTreeMap<String, usize>,
}

impl ChcProgram {
    pub fn new(clauses: Vec<Clause>) -> Result<Self, ChcError> {
        let mut arities: BTreeMap<String, usize> = BTreeMap::new();
        let mut index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut goals = Vec::new();
        for (i, c) in clauses.iter().enumerate() {
            let mut check = |a: &Atom| -> Result<(), ChcError> {
                if a.pred == GOAL {
                    return Err(ChcError::Shape(format!(
                        "`{GOAL}` may only appear as a clause head"
                    )));
                }
                match arities.get(&a.pred) {
                    Some(&n) if n != a.arity() => Err(ChcError::ArityMismatch {
                        pred: a.pred.clone(),
                        expected: n,
                        found: a.arity(),
                    }),
                    Some(_) => Ok(()),
                    None => {
                        arities.insert(a.pred.clone(), a.arity());
                        Ok(())
                    }
                }
            };
            match &c.head {
                Head::Goal => goals.push(i),
                Head::Atom(h) => {
                    check(h)?;
                    index.entry(h.pred.clone()).or_default().push(i);
                }
            }
            for b in &c.body {
                check(b)?;
            }
        }
        Ok(ChcProgram {
            clauses,
            index,
            goals,
            arities,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, i: usize) -> &Clause {
        &self.clauses[i]
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Positions of the clauses whose head is `pred`.
    pub fn clauses_for(&self, pred: &str) -> &[usize] {
        self.index.get(pred).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn goal_clauses(&self) -> &[usize] {
        &self.goals
    }

    pub fn arity(&self, pred: &str) -> Option<usize> {
        self.arities.get(pred).copied()
    }

    /// Every predicate that occurs in the program.
    pub fn predicates(&self) -> BTreeSet<String> {
        self.arities.keys().cloned().collect()
    }

    pub fn is_linear(&self) -> bool {
        self.clauses.iter().all(Clause::is_linear)
    }

    /// Callees of `pred` (or of the goal for `None`), without duplicates, in
    /// clause order.
    pub fn callees(&self, pred: Option<&str>) -> Vec<String> {
        let ids: &[usize] = match pred {
            None => &self.goals,
            Some(p) => self.clauses_for(p),
        };
        let mut out: Vec<String> = Vec::new();
        for &i in ids {
            for b in &self.clauses[i].body {
                if !out.contains(&b.pred) {
                    out.push(b.pred.clone());
                }
            }
        }
        out
    }

    /// Predicates reachable from the goal clauses.
    pub fn live_predicates(&self) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = self.callees(None);
        while let Some(p) = stack.pop() {
            if seen.insert(p.clone()) {
                stack.extend(self.callees(Some(&p)));
            }
        }
        seen
    }

    /// Predicates with at least one derivation whose clause constraints are
    /// each satisfiable (an over-approximation of non-emptiness).
    pub fn productive_predicates(&self) -> BTreeSet<String> {
        let sat: Vec<bool> = self
            .clauses
            .iter()
            .map(|c| polyhedra::is_sat(&c.constraint))
            .collect();
        let mut prod: BTreeSet<String> = BTreeSet::new();
        loop {
            let mut changed = false;
            for (i, c) in self.clauses.iter().enumerate() {
                let Head::Atom(h) = &c.head else { continue };
                if prod.contains(&h.pred) || !sat[i] {
                    continue;
                }
                if c.body.iter().all(|b| prod.contains(&b.pred)) {
                    prod.insert(h.pred.clone());
                    changed = true;
                }
            }
            if !changed {
                return prod;
            }
        }
    }

    /// True when some goal clause can possibly be derived.
    pub fn goal_productive(&self) -> bool {
        let prod = self.productive_predicates();
        self.goals.iter().any(|&i| {
            let c = &self.clauses[i];
            polyhedra::is_sat(&c.constraint) && c.body.iter().all(|b| prod.contains(&b.pred))
        })
    }

    /// Strongly connected components of the call graph in reverse
    /// topological order (callees before callers).
    pub fn sccs(&self) -> Vec<Vec<String>> {
        let preds: Vec<String> = self.predicates().into_iter().collect();
        let pos: BTreeMap<&str, usize> = preds
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_str(), i))
            .collect();
        let succ: Vec<Vec<usize>> = preds
            .iter()
            .map(|p| {
                self.callees(Some(p))
                    .iter()
                    .map(|q| pos[q.as_str()])
                    .collect()
            })
            .collect();
        tarjan(&succ)
            .into_iter()
            .map(|comp| comp.into_iter().map(|i| preds[i].clone()).collect())
            .collect()
    }

    /// Predicates lying on a cycle of the call graph.
    pub fn recursive_predicates(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for comp in self.sccs() {
            if comp.len() > 1 {
                out.extend(comp);
            } else if self.callees(Some(&comp[0])).contains(&comp[0]) {
                out.insert(comp[0].clone());
            }
        }
        out
    }

    /// Parameter names of `pred`: the head variables of its first clause
    /// whose head arguments are distinct variables, else `A1..Ak`.
    pub fn param_names(&self, pred: &str) -> Vec<String> {
        for &i in self.clauses_for(pred) {
            if let Some(vs) = self.clauses[i]
                .head_atom()
                .and_then(Atom::distinct_var_args)
            {
                return vs;
            }
        }
        let n = self.arity(pred).unwrap_or(0);
        (1..=n).map(|k| format!("A{k}")).collect()
    }
}

fn tarjan(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct St<'a> {
        succ: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    fn visit(s: &mut St, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on[v] = true;
        for k in 0..s.succ[v].len() {
            let w = s.succ[v][k];
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on[w] => s.low[v] = s.low[v].min(iw),
                _ => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = s.stack.pop().expect("scc stack");
                s.on[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort();
            s.out.push(comp);
        }
    }
    let n = succ.len();
    let mut s = St {
        succ,
        index: vec![None; n],
        low: vec![0; n],
        on: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.out
}

/// A predicate invariant over named parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invariant {
    pub params: Vec<String>,
    pub constraint: LinConstraint,
}

/// One resolution step of a counterexample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    /// Position of the resolved clause in its program.
    pub clause: usize,
    /// The selected atom before unification; `None` when resolving the goal.
    pub atom: Option<Atom>,
    /// Most general unifier of the selected atom and the renamed clause head.
    pub subst: Substitution,
    /// Accumulated constraint store after this step.
    pub store: LinConstraint,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CounterexampleTrace {
    pub steps: Vec<TraceStep>,
}

impl CounterexampleTrace {
    pub fn clause_ids(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.clause).collect()
    }

    pub fn final_store(&self) -> LinConstraint {
        self.steps
            .last()
            .map(|s| s.store.clone())
            .unwrap_or_default()
    }

    /// Each store extends its predecessor and the final store is satisfiable
    /// (hence so is every earlier one).
    pub fn replays(&self) -> bool {
        let mut prev: Option<&LinConstraint> = None;
        for s in &self.steps {
            if let Some(p) = prev {
                if !p.atoms().iter().all(|a| s.store.atoms().contains(a)) {
                    return false;
                }
            }
            prev = Some(&s.store);
        }
        !self.steps.is_empty() && polyhedra::is_sat(&self.final_store())
    }
}

impl fmt::Display for CounterexampleTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(f, "step {}: clause {} {}", i + 1, s.clause, s.subst)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Safe(BTreeMap<String, Invariant>),
    Unsafe(CounterexampleTrace),
    Unknown(String),
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Safe(_) => "SAFE",
            Verdict::Unsafe(_) => "UNSAFE",
            Verdict::Unknown(_) => "UNKNOWN",
        }
    }

    pub fn is_definite(&self) -> bool {
        !matches!(self, Verdict::Unknown(_))
    }
}
