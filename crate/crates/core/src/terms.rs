//! First-order terms, most general unifiers and fresh-variable renaming.
//!
//! Terms carry the symbolic structure of the interpreter encoding
//! (configurations, environments, commands) as well as the arguments of
//! predicate calls. Numeric constants are exact rationals kept in lowest
//! terms, so syntactic equality of terms is meaningful.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use num_traits::One;

use crate::chc::{Clause, Head};

/// Exact rational number used throughout the crate.
pub type Rat = BigRational;

/// Functor used for fixed-length lists such as `[[int(x),X],[int(y),Y]]`.
pub const LIST_FUNCTOR: &str = "[]";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Num(Rat),
    Sym(String),
    Compound(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn sym(name: impl Into<String>) -> Term {
        Term::Sym(name.into())
    }

    pub fn int(value: i64) -> Term {
        Term::Num(Rat::from_integer(value.into()))
    }

    /// Builds a compound term. A compound with no arguments collapses to a
    /// symbol, so `f()` and `f` are the same term.
    pub fn compound(functor: impl Into<String>, args: Vec<Term>) -> Term {
        let functor = functor.into();
        assert!(!functor.is_empty(), "compound functor must be nonempty");
        if args.is_empty() && functor != LIST_FUNCTOR {
            Term::Sym(functor)
        } else {
            Term::Compound(functor, args)
        }
    }

    pub fn list(items: Vec<Term>) -> Term {
        Term::Compound(LIST_FUNCTOR.to_string(), items)
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Num(_) | Term::Sym(_) => true,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn occurs(&self, var: &str) -> bool {
        match self {
            Term::Var(v) => v == var,
            Term::Num(_) | Term::Sym(_) => false,
            Term::Compound(_, args) => args.iter().any(|a| a.occurs(var)),
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.iter().any(|o| o == v) {
                    out.push(v.clone());
                }
            }
            Term::Num(_) | Term::Sym(_) => {}
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.into_iter().collect()
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Compound(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
            _ => 0,
        }
    }
}

pub fn fmt_rat(q: &Rat, f: &mut impl fmt::Write) -> fmt::Result {
    if q.denom().is_one() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Num(q) => fmt_rat(q, f),
            Term::Sym(s) => f.write_str(s),
            Term::Compound(functor, args) => {
                let list = functor == LIST_FUNCTOR;
                if list {
                    f.write_str("[")?;
                } else {
                    write!(f, "{functor}(")?;
                }
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(if list { "]" } else { ")" })
            }
        }
    }
}

/// A predicate applied to argument terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            pred: pred.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        self.args.iter().for_each(|a| a.collect_vars(out));
    }

    pub fn apply(&self, s: &Substitution) -> Atom {
        Atom {
            pred: self.pred.clone(),
            args: self.args.iter().map(|a| s.apply(a)).collect(),
        }
    }

    /// The argument variables when every argument is a distinct variable.
    pub fn distinct_var_args(&self) -> Option<Vec<String>> {
        let mut out: Vec<String> = Vec::with_capacity(self.args.len());
        for a in &self.args {
            let v = a.as_var()?;
            if out.iter().any(|o| o == v) {
                return None;
            }
            out.push(v.to_string());
        }
        Some(out)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// An idempotent substitution from variable names to terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.bindings.iter()
    }

    /// Builds a substitution from raw bindings, resolving chains so the
    /// result is idempotent. Returns `None` if the bindings are cyclic.
    pub fn from_bindings(pairs: impl IntoIterator<Item = (String, Term)>) -> Option<Self> {
        let mut s = Substitution::new();
        for (v, t) in pairs {
            let t = s.apply(&t);
            if t == Term::Var(v.clone()) {
                continue;
            }
            if let Some(existing) = s.bindings.get(&v).cloned() {
                s = unify_with(s, &existing, &t)?;
            } else {
                s.bind(v, t)?;
            }
        }
        Some(s)
    }

    /// Adds `var ↦ term` where `term` has already been applied to `self`.
    fn bind(&mut self, var: String, term: Term) -> Option<()> {
        if term.occurs(&var) {
            return None;
        }
        let single = Substitution {
            bindings: BTreeMap::from([(var.clone(), term.clone())]),
        };
        for t in self.bindings.values_mut() {
            *t = single.apply(t);
        }
        self.bindings.insert(var, term);
        Some(())
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.bindings.is_empty() {
            return t.clone();
        }
        match t {
            Term::Var(v) => self.bindings.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::Num(_) | Term::Sym(_) => t.clone(),
            Term::Compound(f, args) => {
                Term::Compound(f.clone(), args.iter().map(|a| self.apply(a)).collect())
            }
        }
    }

    pub fn domain(&self) -> impl Iterator<Item = &String> {
        self.bindings.keys()
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} ↦ {t}")?;
        }
        f.write_str("}")
    }
}

pub fn apply_subst(s: &Substitution, t: &Term) -> Term {
    s.apply(t)
}

/// Most general unifier of two terms, with occurs-check.
pub fn unify(t1: &Term, t2: &Term) -> Option<Substitution> {
    unify_with(Substitution::new(), t1, t2)
}

/// Extends `s` to a unifier of `t1` and `t2`.
pub fn unify_with(mut s: Substitution, t1: &Term, t2: &Term) -> Option<Substitution> {
    let mut stack = vec![(s.apply(t1), s.apply(t2))];
    while let Some((a, b)) = stack.pop() {
        let (a, b) = (s.apply(&a), s.apply(&b));
        match (a, b) {
            (Term::Var(x), Term::Var(y)) if x == y => {}
            (Term::Var(x), t) | (t, Term::Var(x)) => s.bind(x, t)?,
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                stack.extend(xs.into_iter().zip(ys));
            }
            (a, b) => {
                if a != b {
                    return None;
                }
            }
        }
    }
    Some(s)
}

/// Unifies two argument tuples pairwise.
pub fn unify_args(s: Substitution, xs: &[Term], ys: &[Term]) -> Option<Substitution> {
    if xs.len() != ys.len() {
        return None;
    }
    xs.iter()
        .zip(ys)
        .try_fold(s, |s, (x, y)| unify_with(s, x, y))
}

/// One-way matching: finds `s` with `s(pattern) == target`, binding only
/// variables of `pattern`. Variables of `target` are treated as constants.
pub fn match_term(pattern: &Term, target: &Term, s: &mut BTreeMap<String, Term>) -> bool {
    match (pattern, target) {
        (Term::Var(v), t) => match s.get(v) {
            Some(bound) => bound == t,
            None => {
                s.insert(v.clone(), t.clone());
                true
            }
        },
        (Term::Compound(f, xs), Term::Compound(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_term(x, y, s))
        }
        (a, b) => a == b,
    }
}

/// Source of fresh variable names `V<k>`. One counter is threaded through a
/// whole pipeline run so renamings are reproducible.
#[derive(Debug, Clone, Default)]
pub struct FreshCounter {
    next: u64,
}

impl FreshCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(next: u64) -> Self {
        Self { next }
    }

    pub fn peek(&self) -> u64 {
        self.next
    }

    pub fn fresh(&mut self) -> String {
        let name = format!("V{}", self.next);
        self.next += 1;
        name
    }
}

/// Renames every variable of `c` to a fresh `V<k>`, visiting head
/// arguments, then body arguments, then the remaining constraint variables
/// in name order.
pub fn rename_apart(c: &Clause, counter: &mut FreshCounter) -> Clause {
    let mut order = Vec::new();
    if let Head::Atom(h) = &c.head {
        h.collect_vars(&mut order);
    }
    for b in &c.body {
        b.collect_vars(&mut order);
    }
    for v in c.constraint.vars() {
        if !order.contains(&v) {
            order.push(v);
        }
    }
    let map: BTreeMap<String, String> = order.into_iter().map(|v| (v, counter.fresh())).collect();
    c.rename_vars(&map)
}
