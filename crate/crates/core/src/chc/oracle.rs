//! Exhaustive depth-bounded top-down evaluation, used as ground truth.

use std::collections::BTreeSet;

use super::model::{
    apply_to_constraint, binding_equalities, ChcProgram, CounterexampleTrace, TraceStep,
};
use crate::polyhedra::{self, LinConstraint};
use crate::terms::{rename_apart, unify_args, Atom, FreshCounter, Substitution};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    FoundAnswer(CounterexampleTrace),
    NoAnswerWithinDepth,
    ExhaustedAll,
}

impl OracleOutcome {
    pub fn name(&self) -> &'static str {
        match self {
            OracleOutcome::FoundAnswer(_) => "FOUND_ANSWER",
            OracleOutcome::NoAnswerWithinDepth => "NO_ANSWER_WITHIN_DEPTH",
            OracleOutcome::ExhaustedAll => "EXHAUSTED_ALL",
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, OracleOutcome::FoundAnswer(_))
    }
}

/// Result of resolving one atom with one clause.
pub struct Resolvent {
    /// Remaining goal, leftmost atom first.
    pub goal: Vec<Atom>,
    /// Store with the unifier applied, projected to stay small.
    pub store: LinConstraint,
    pub subst: Substitution,
    /// Constraint added by this step, over unsubstituted names.
    pub increment: LinConstraint,
}

/// Resolves the leftmost atom of `goal` (or the goal head when `goal` is
/// `None`) with clause `idx`. `None` if the head does not unify or the
/// resulting store is unsatisfiable.
pub fn resolve_step(
    p: &ChcProgram,
    goal: Option<&[Atom]>,
    store: &LinConstraint,
    idx: usize,
    counter: &mut FreshCounter,
) -> Option<Resolvent> {
    let clause = rename_apart(p.clause(idx), counter);
    let (subst, rest): (Substitution, &[Atom]) = match goal {
        None => {
            if !clause.is_goal() {
                return None;
            }
            (Substitution::new(), &[])
        }
        Some(g) => {
            let (sel, rest) = g.split_first()?;
            let head = clause.head_atom()?;
            if head.pred != sel.pred {
                return None;
            }
            (
                unify_args(Substitution::new(), &sel.args, &head.args)?,
                rest,
            )
        }
    };
    let increment = LinConstraint::from_truths(binding_equalities(&subst)).and(&clause.constraint);
    let applied_store = apply_to_constraint(store, &subst)?;
    let applied_clause = apply_to_constraint(&clause.constraint, &subst)?;
    let mut new_store = applied_store.and(&applied_clause);
    if (!applied_clause.is_empty() || !subst.is_empty()) && !polyhedra::is_sat(&new_store) {
        return None;
    }
    let goal: Vec<Atom> = clause
        .body
        .iter()
        .chain(rest.iter())
        .map(|a| a.apply(&subst))
        .collect();
    let mut live = Vec::new();
    for a in &goal {
        a.collect_vars(&mut live);
    }
    let live: BTreeSet<String> = live.into_iter().collect();
    let dead = new_store
        .vars()
        .iter()
        .filter(|v| !live.contains(*v))
        .count();
    if dead > 8 {
        new_store = polyhedra::project(&new_store, &live);
    }
    Some(Resolvent {
        goal,
        store: new_store,
        subst,
        increment,
    })
}

struct Search<'a> {
    p: &'a ChcProgram,
    counter: FreshCounter,
    cut: bool,
    path: Vec<(usize, Option<Atom>, Substitution, LinConstraint)>,
}

impl Search<'_> {
    fn dfs(&mut self, goal: &[Atom], store: &LinConstraint, depth_left: usize) -> bool {
        if goal.is_empty() {
            return true;
        }
        if depth_left == 0 {
            self.cut = true;
            return false;
        }
        let p = self.p;
        for &idx in p.clauses_for(&goal[0].pred) {
            let Some(r) = resolve_step(p, Some(goal), store, idx, &mut self.counter) else {
                continue;
            };
            self.path
                .push((idx, Some(goal[0].clone()), r.subst, r.increment));
            if self.dfs(&r.goal, &r.store, depth_left - 1) {
                return true;
            }
            self.path.pop();
        }
        false
    }

    fn trace(&self) -> CounterexampleTrace {
        let mut store = LinConstraint::top();
        let steps = self
            .path
            .iter()
            .map(|(clause, atom, subst, inc)| {
                store = store.and(inc);
                TraceStep {
                    clause: *clause,
                    atom: atom.clone(),
                    subst: subst.clone(),
                    store: store.clone(),
                }
            })
            .collect();
        CounterexampleTrace { steps }
    }
}

/// Explores every derivation of the goal with at most `depth` resolution
/// steps, resolving the goal head being the first step.
pub fn bounded_oracle(p: &ChcProgram, depth: usize) -> OracleOutcome {
    assert!(depth >= 1, "oracle depth must be positive");
    let mut s = Search {
        p,
        counter: FreshCounter::new(),
        cut: false,
        path: Vec::new(),
    };
    for &g in p.goal_clauses() {
        let Some(r) = resolve_step(p, None, &LinConstraint::top(), g, &mut s.counter) else {
            continue;
        };
        if !polyhedra::is_sat(&r.store) {
            continue;
        }
        s.path.push((g, None, r.subst, r.increment));
        if s.dfs(&r.goal, &r.store, depth - 1) {
            return OracleOutcome::FoundAnswer(s.trace());
        }
        s.path.pop();
    }
    if s.cut {
        OracleOutcome::NoAnswerWithinDepth
    } else {
        OracleOutcome::ExhaustedAll
    }
}

/// Rebuilds a derivation that resolves the leftmost atom with the given
/// clauses in order. `None` unless the sequence is a complete, satisfiable
/// refutation of the goal.
pub fn replay(p: &ChcProgram, clause_ids: &[usize]) -> Option<CounterexampleTrace> {
    let (&first, rest) = clause_ids.split_first()?;
    if first >= p.len() {
        return None;
    }
    let mut s = Search {
        p,
        counter: FreshCounter::new(),
        cut: false,
        path: Vec::new(),
    };
    let r = resolve_step(p, None, &LinConstraint::top(), first, &mut s.counter)?;
    if !polyhedra::is_sat(&r.store) {
        return None;
    }
    let mut goal = r.goal;
    let mut store = r.store;
    s.path.push((first, None, r.subst, r.increment));
    for &idx in rest {
        if idx >= p.len() {
            return None;
        }
        let r = resolve_step(p, Some(&goal), &store, idx, &mut s.counter)?;
        s.path
            .push((idx, Some(goal[0].clone()), r.subst, r.increment));
        goal = r.goal;
        store = r.store;
    }
    if !goal.is_empty() {
        return None;
    }
    let t = s.trace();
    t.replays().then_some(t)
}
