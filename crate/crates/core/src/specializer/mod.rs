//! Unfold/fold program specialization.
//!
//! [`specialize_remove`] compiles the interpreter away, producing
//! verification conditions over one predicate per loop head.
//! [`specialize_prop`] then propagates constraints through the conditions,
//! introducing a definition `newk(X) :- g(X), q(X)` for every call context and
//! generalizing `g` so that only finitely many definitions arise.
//!
//! Every output clause records its provenance: the input clauses resolved,
//! in order, to derive it. Concatenating the provenance of the clauses of an
//! output derivation gives a derivation in the input program.

mod prop;
mod remove;

use std::collections::{BTreeMap, BTreeSet};

pub use prop::{specialize_prop, Definition, Generalization, PropConfig};
pub use remove::specialize_remove;

use crate::chc::{ChcProgram, Clause, Head};
use crate::polyhedra::{self, LinAtom, LinConstraint, LinExpr};
use crate::terms::{rename_apart, unify_args, Atom, FreshCounter, Substitution, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("specialization exceeded {0} unfolding steps")]
    BudgetExceeded(usize),
    #[error("clause {0} has more than one body atom")]
    NonLinear(usize),
    #[error("clause {0} has a non-numeric argument")]
    Shape(usize),
    #[error("fold precondition violated: the clause constraint does not entail the definition")]
    FoldMismatch,
}

/// A program together with the provenance of each of its clauses.
#[derive(Debug, Clone)]
pub struct Specialized {
    pub program: ChcProgram,
    /// For each clause, the input clauses used to derive it.
    pub provenance: Vec<Vec<usize>>,
    /// Definitions introduced, one per output predicate.
    pub definitions: Vec<Definition>,
}

/// One resolvent of an unfolding step.
#[derive(Debug, Clone)]
pub struct Unfolded {
    pub clause: Clause,
    /// Position of the program clause that was resolved.
    pub used: usize,
}

/// Resolves the leftmost body atom of `c` whose predicate satisfies
/// `selectable` with every clause of `p`, dropping resolvents whose
/// constraint is unsatisfiable. `None` if no atom is selectable.
pub fn unfold(
    c: &Clause,
    p: &ChcProgram,
    selectable: &dyn Fn(&str) -> bool,
    counter: &mut FreshCounter,
) -> Option<Vec<Unfolded>> {
    let pos = c.body.iter().position(|a| selectable(&a.pred))?;
    let sel = &c.body[pos];
    let cvars = c.constraint.vars();
    let mut out = Vec::new();
    for &i in p.clauses_for(&sel.pred) {
        let d = rename_apart(p.clause(i), counter);
        let head = d.head_atom().expect("indexed clauses have heads");
        let Some(s) = unify_args(Substitution::new(), &sel.args, &head.args) else {
            continue;
        };
        let mut body = c.body[..pos].to_vec();
        body.extend(d.body.iter().cloned());
        body.extend(c.body[pos + 1..].iter().cloned());
        let joined = Clause::new(c.head.clone(), c.constraint.and(&d.constraint), body);
        let Some(r) = joined.apply_subst(&s) else {
            continue;
        };
        let touched = s.domain().any(|v| cvars.contains(v));
        if (!d.constraint.is_empty() || touched) && !polyhedra::is_sat(&r.constraint) {
            continue;
        }
        if r.constraint.is_false() {
            continue;
        }
        out.push(Unfolded { clause: r, used: i });
    }
    Some(out)
}

/// Replaces the body atom `q(Y)` of `e` by `d.name(Y)`, provided the
/// constraint of `e` entails the definition constraint at `Y`.
pub fn fold(e: &Clause, d: &Definition) -> Result<Clause, SpecError> {
    let [atom] = e.body.as_slice() else {
        return Err(SpecError::FoldMismatch);
    };
    if atom.pred != d.pred {
        return Err(SpecError::FoldMismatch);
    }
    let args = atom.distinct_var_args().ok_or(SpecError::FoldMismatch)?;
    let map: BTreeMap<String, String> =
        d.params.iter().cloned().zip(args.iter().cloned()).collect();
    let g = d.constraint.rename_with(&map);
    let keep: BTreeSet<String> = args.iter().cloned().collect();
    if !polyhedra::entails(&polyhedra::project(&e.constraint, &keep), &g) {
        return Err(SpecError::FoldMismatch);
    }
    Ok(Clause::new(
        e.head.clone(),
        e.constraint.clone(),
        vec![Atom::new(d.name.clone(), atom.args.clone())],
    ))
}

/// What can be read off a program without solving.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyntacticVerdict {
    /// No goal clause can be derived.
    Safe,
    /// The goal clause at this position has no body atoms and a satisfiable
    /// constraint.
    Unsafe(usize),
}

pub fn syntactic_verdict(p: &ChcProgram) -> Option<SyntacticVerdict> {
    for &g in p.goal_clauses() {
        let c = p.clause(g);
        if c.is_fact() && polyhedra::is_sat(&c.constraint) {
            return Some(SyntacticVerdict::Unsafe(g));
        }
    }
    if !p.goal_productive() {
        return Some(SyntacticVerdict::Safe);
    }
    None
}

/// A counter whose names cannot clash with any `V<k>` already used in `p`
/// or in `extra`.
pub(crate) fn counter_after(p: &ChcProgram, extra: &[String]) -> FreshCounter {
    let mut next = 0u64;
    let mut see = |v: &str| {
        if let Some(k) = v.strip_prefix('V').and_then(|d| d.parse::<u64>().ok()) {
            next = next.max(k + 1);
        }
    };
    for c in p.clauses() {
        for v in c.vars() {
            see(&v);
        }
    }
    for v in extra {
        see(v);
    }
    FreshCounter::starting_at(next)
}

/// Rewrites `c` so that every atom argument is a distinct variable, adding
/// equalities for repeated variables and numbers. `None` for compound
/// arguments.
pub(crate) fn flatten_args(c: &Clause, counter: &mut FreshCounter) -> Option<Clause> {
    let mut eqs = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut fix = |a: &Atom, eqs: &mut Vec<_>, seen: &mut BTreeSet<String>| -> Option<Atom> {
        let mut args = Vec::with_capacity(a.args.len());
        for t in &a.args {
            let rhs = match t {
                Term::Var(v) if seen.insert(v.clone()) => {
                    args.push(t.clone());
                    continue;
                }
                Term::Var(v) => LinExpr::var(v.clone()),
                Term::Num(q) => LinExpr::constant(q.clone()),
                _ => return None,
            };
            let f = counter.fresh();
            seen.insert(f.clone());
            eqs.push(LinAtom::eq(&LinExpr::var(f.clone()), &rhs));
            args.push(Term::Var(f));
        }
        Some(Atom::new(a.pred.clone(), args))
    };
    let head = match &c.head {
        Head::Goal => Head::Goal,
        Head::Atom(h) => Head::Atom(fix(h, &mut eqs, &mut seen)?),
    };
    let mut body = Vec::with_capacity(c.body.len());
    for b in &c.body {
        body.push(fix(b, &mut eqs, &mut seen)?);
    }
    Some(Clause::new(
        head,
        c.constraint.and(&LinConstraint::from_truths(eqs)),
        body,
    ))
}

/// Renames the variables of `c` deterministically: head arguments after the
/// parameters of the head predicate, body arguments after the parameters of
/// the callee (suffixed with `1` unless the clause is a goal clause), and
/// anything else `L1, L2, ...`. The constraint is projected onto the atom
/// variables and simplified with the body variables as pivots.
pub(crate) fn canonical_clause(c: &Clause, params: &dyn Fn(&str) -> Vec<String>) -> Clause {
    let atom_vars: BTreeSet<String> = c.atom_vars().into_iter().collect();
    let projected = polyhedra::project(&c.constraint, &atom_vars);
    let c = Clause::new(c.head.clone(), projected, c.body.clone());

    let mut map: BTreeMap<String, String> = BTreeMap::new();
    let mut used: BTreeSet<String> = BTreeSet::new();
    let mut assign = |v: &str, base: String, map: &mut BTreeMap<String, String>| {
        if map.contains_key(v) {
            return;
        }
        let mut name = base.clone();
        let mut k = 0;
        while used.contains(&name) {
            k += 1;
            name = format!("{base}_{k}");
        }
        used.insert(name.clone());
        map.insert(v.to_string(), name);
    };
    if let Head::Atom(h) = &c.head {
        let ps = params(&h.pred);
        for (i, t) in h.args.iter().enumerate() {
            if let Term::Var(v) = t {
                assign(v, ps[i].clone(), &mut map);
            }
        }
    }
    let suffix = if c.is_goal() { "" } else { "1" };
    for b in &c.body {
        let ps = params(&b.pred);
        for (i, t) in b.args.iter().enumerate() {
            if let Term::Var(v) = t {
                assign(v, format!("{}{suffix}", ps[i]), &mut map);
            }
        }
    }
    for (k, v) in c.constraint.vars().into_iter().enumerate() {
        assign(&v, format!("L{}", k + 1), &mut map);
    }
    let renamed = c.rename_vars(&map);
    let mut preferred = Vec::new();
    for b in &renamed.body {
        b.collect_vars(&mut preferred);
    }
    Clause::new(
        renamed.head.clone(),
        polyhedra::simplify_with(&renamed.constraint, &preferred),
        renamed.body.clone(),
    )
}

/// Keeps the clauses whose head is the goal or a live, productive predicate
/// and whose body atoms are all productive. Returns the kept positions.
pub(crate) fn live_clauses(p: &ChcProgram) -> Vec<usize> {
    let live = p.live_predicates();
    let prod = p.productive_predicates();
    (0..p.len())
        .filter(|&i| {
            let c = p.clause(i);
            let head_ok = match c.head.pred() {
                None => true,
                Some(h) => live.contains(h) && prod.contains(h),
            };
            head_ok && !c.constraint.is_false() && c.body.iter().all(|b| prod.contains(&b.pred))
        })
        .collect()
}

/// Builds a program from clauses with provenance, removing dead clauses.
pub(crate) fn assemble(
    clauses: Vec<(Clause, Vec<usize>)>,
    definitions: Vec<Definition>,
) -> Specialized {
    let (cs, prov): (Vec<Clause>, Vec<Vec<usize>>) = clauses.into_iter().unzip();
    let p = ChcProgram::new(cs).expect("specialized clauses are well formed");
    let keep = live_clauses(&p);
    let cs: Vec<Clause> = keep.iter().map(|&i| p.clause(i).clone()).collect();
    let prov: Vec<Vec<usize>> = keep.iter().map(|&i| prov[i].clone()).collect();
    let program = ChcProgram::new(cs).expect("subset of a well-formed program");
    let preds = program.predicates();
    Specialized {
        program,
        provenance: prov,
        definitions: definitions
            .into_iter()
            .filter(|d| preds.contains(&d.name))
            .collect(),
    }
}

/// Maps a derivation of a specialized program (as clause positions) to the
/// derivation of its input program.
pub fn map_derivation(provenance: &[Vec<usize>], ids: &[usize]) -> Vec<usize> {
    ids.iter()
        .flat_map(|&i| provenance[i].iter().copied())
        .collect()
}

#[cfg(test)]
mod tests;
