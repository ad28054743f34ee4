use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use crate::chc::{ChcProgram, Clause};
use crate::polyhedra::{self, LinAtom, LinConstraint};
use crate::terms::{FreshCounter, Term};

/// A path through non-cut predicates, from a cut point (or the goal) to a
/// cut point (or a fact). `constraint` mentions the parameters of `from`
/// under their own names and the arguments of `to` as `target_args`.
#[derive(Debug, Clone)]
pub struct Segment {
    pub from: Option<String>,
    pub to: Option<String>,
    pub constraint: LinConstraint,
    pub target_args: Vec<String>,
    pub clauses: Vec<usize>,
}

/// A call of a non-cut predicate reached partway through a segment.
#[derive(Debug, Clone)]
pub(crate) struct Visit {
    pub from: Option<String>,
    pub pred: String,
    pub constraint: LinConstraint,
    pub args: Vec<String>,
}

pub(crate) struct Segments {
    pub segments: Vec<Segment>,
    pub visits: Vec<Visit>,
}

struct Walker<'a> {
    p: &'a ChcProgram,
    cuts: &'a BTreeSet<String>,
    counter: FreshCounter,
    out: Segments,
    limit: usize,
}

impl Walker<'_> {
    /// Renames `c` so that its head arguments become `args` and its other
    /// variables keep their names unless already in use.
    fn rename(&mut self, c: &Clause, args: &[String], used: &mut BTreeSet<String>) -> Clause {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        if let Some(h) = c.head_atom() {
            for (t, a) in h.args.iter().zip(args) {
                if let Term::Var(v) = t {
                    map.insert(v.clone(), a.clone());
                }
            }
        }
        let mut rest: Vec<String> = Vec::new();
        for b in &c.body {
            b.collect_vars(&mut rest);
        }
        rest.extend(c.constraint.vars());
        for v in rest {
            if map.contains_key(&v) {
                continue;
            }
            let name = if used.contains(&v) {
                self.counter.fresh()
            } else {
                v.clone()
            };
            used.insert(name.clone());
            map.insert(v, name);
        }
        c.rename_vars(&map)
    }

    fn follow(
        &mut self,
        from: &Option<String>,
        c: Clause,
        clauses: Vec<usize>,
        acc: LinConstraint,
        used: BTreeSet<String>,
    ) -> bool {
        if self.out.segments.len() >= self.limit {
            return false;
        }
        let acc = acc.and(&c.constraint);
        let Some(b) = c.body.first() else {
            self.out.segments.push(Segment {
                from: from.clone(),
                to: None,
                constraint: acc,
                target_args: vec![],
                clauses,
            });
            return true;
        };
        let args: Vec<String> = b
            .args
            .iter()
            .map(|t| t.as_var().expect("flattened arguments").to_string())
            .collect();
        if self.cuts.contains(&b.pred) {
            self.out.segments.push(Segment {
                from: from.clone(),
                to: Some(b.pred.clone()),
                constraint: acc,
                target_args: args,
                clauses,
            });
            return true;
        }
        self.out.visits.push(Visit {
            from: from.clone(),
            pred: b.pred.clone(),
            constraint: acc.clone(),
            args: args.clone(),
        });
        let p = self.p;
        for &ci in p.clauses_for(&b.pred) {
            let mut used = used.clone();
            let next = self.rename(p.clause(ci), &args, &mut used);
            let mut cl = clauses.clone();
            cl.push(ci);
            if !self.follow(from, next, cl, acc.clone(), used) {
                return false;
            }
        }
        true
    }
}

/// Every segment of `p` between cut points. `None` if there are more than
/// `limit` of them.
pub(crate) fn segments(
    p: &ChcProgram,
    cuts: &BTreeSet<String>,
    params: &BTreeMap<String, Vec<String>>,
    counter: FreshCounter,
    limit: usize,
) -> Option<Segments> {
    let mut w = Walker {
        p,
        cuts,
        counter,
        out: Segments {
            segments: vec![],
            visits: vec![],
        },
        limit,
    };
    for &g in p.goal_clauses() {
        let mut used = BTreeSet::new();
        let c = w.rename(p.clause(g), &[], &mut used);
        if !w.follow(&None, c, vec![g], LinConstraint::top(), used) {
            return None;
        }
    }
    for cut in cuts {
        let ps = &params[cut];
        for &ci in p.clauses_for(cut) {
            let mut used: BTreeSet<String> = ps.iter().cloned().collect();
            let c = w.rename(p.clause(ci), ps, &mut used);
            if !w.follow(&Some(cut.clone()), c, vec![ci], LinConstraint::top(), used) {
                return None;
            }
        }
    }
    let mut out = w.out;
    for s in &mut out.segments {
        let mut keep: BTreeSet<String> = s.target_args.iter().cloned().collect();
        if let Some(f) = &s.from {
            keep.extend(params[f].iter().cloned());
        }
        s.constraint =
            polyhedra::simplify_with(&polyhedra::project(&s.constraint, &keep), &s.target_args);
    }
    for v in &mut out.visits {
        let mut keep: BTreeSet<String> = v.args.iter().cloned().collect();
        if let Some(f) = &v.from {
            keep.extend(params[f].iter().cloned());
        }
        v.constraint = polyhedra::project(&v.constraint, &keep);
    }
    Some(out)
}

/// One entailment checked while closing the candidate reuse conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsumptionRecord {
    pub from: Option<String>,
    pub to: String,
    pub premise: LinConstraint,
    pub conclusion: LinConstraint,
    pub holds: bool,
}

pub(crate) fn rename_params(
    c: &LinConstraint,
    params: &[String],
    args: &[String],
) -> LinConstraint {
    let map: BTreeMap<String, String> = params.iter().cloned().zip(args.iter().cloned()).collect();
    c.rename_with(&map)
}

pub(crate) enum Closed {
    Inductive {
        candidates: BTreeMap<String, LinConstraint>,
        checks: Vec<SubsumptionRecord>,
        safe: bool,
    },
    OutOfTime,
}

/// Weakens the candidates to their largest subset that holds on entry and
/// is preserved along every cut-to-cut segment, then checks that no fact
/// segment is reachable under them.
pub(crate) fn close(
    segs: &Segments,
    candidates: &BTreeMap<String, LinConstraint>,
    params: &BTreeMap<String, Vec<String>>,
    deadline: Option<Instant>,
) -> Closed {
    let mut cand: BTreeMap<String, Vec<LinAtom>> = candidates
        .iter()
        .map(|(p, c)| (p.clone(), c.split_equalities()))
        .collect();
    let premise_of = |cand: &BTreeMap<String, Vec<LinAtom>>, s: &Segment| match &s.from {
        None => s.constraint.clone(),
        Some(p) => {
            LinConstraint::from_atoms(cand.get(p).cloned().unwrap_or_default()).and(&s.constraint)
        }
    };
    loop {
        let mut changed = false;
        for s in &segs.segments {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return Closed::OutOfTime;
            }
            let Some(q) = &s.to else { continue };
            let premise = premise_of(&cand, s);
            let Some(atoms) = cand.get_mut(q) else {
                continue;
            };
            let before = atoms.len();
            atoms.retain(|a| {
                let c = rename_params(
                    &LinConstraint::from_atoms([a.clone()]),
                    &params[q],
                    &s.target_args,
                );
                polyhedra::entails(&premise, &c)
            });
            changed |= atoms.len() != before;
        }
        if !changed {
            break;
        }
    }
    let mut checks = Vec::new();
    for s in &segs.segments {
        let Some(q) = &s.to else { continue };
        let premise = premise_of(&cand, s);
        let conclusion = rename_params(
            &LinConstraint::from_atoms(cand.get(q).cloned().unwrap_or_default()),
            &params[q],
            &s.target_args,
        );
        let holds = polyhedra::entails(&premise, &conclusion);
        checks.push(SubsumptionRecord {
            from: s.from.clone(),
            to: q.clone(),
            premise,
            conclusion,
            holds,
        });
    }
    let safe = segs
        .segments
        .iter()
        .filter(|s| s.to.is_none())
        .all(|s| !polyhedra::is_sat(&premise_of(&cand, s)));
    Closed::Inductive {
        candidates: cand
            .into_iter()
            .map(|(p, atoms)| (p, polyhedra::simplify(&LinConstraint::from_atoms(atoms))))
            .collect(),
        checks,
        safe,
    }
}
