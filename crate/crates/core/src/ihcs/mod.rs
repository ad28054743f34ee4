//! Interpolating tabled Horn-clause solver for linear programs.
//!
//! Each round builds a depth-first, left-to-right derivation tree of the
//! goal in which calls of cut predicates (targets of back edges in the call
//! graph) are frozen once they occur `k` times among their ancestors. An
//! answer found in the tree is a counterexample. Otherwise every failed
//! leaf contributes a path interpolant to the nodes above it, and the
//! annotation of the topmost call of each cut predicate becomes the reuse
//! condition of that predicate. The completion check then weakens the reuse
//! conditions to a set of atoms that is preserved along every path between
//! cut points; if the weakened conditions still exclude every fact, the
//! frozen calls are subsumed and the program is safe. Otherwise `k` grows
//! and the next round starts, with reuse conditions conjoined across rounds.

mod complete;
mod tree;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

pub use complete::{Segment, SubsumptionRecord};
pub use tree::{tree_interpolant, DerivationTree, NodeKind, TreeNode};

use crate::chc::{bounded_oracle, replay, ChcProgram, Invariant, OracleOutcome, Verdict};
use crate::polyhedra::{self, LinConstraint};
use crate::specializer::{counter_after, flatten_args};
use complete::{close, rename_params, segments, Closed};
use tree::{Builder, Built};

/// Tree size past which a round is abandoned.
const MAX_NODES: usize = 200_000;
/// Segment count past which the completion check is abandoned.
const MAX_SEGMENTS: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveBudget {
    pub deadline: Option<Duration>,
    /// Unwinding bound of the first round.
    pub counter_bound: usize,
    pub bound_multiplier: usize,
    /// No round runs with a larger bound.
    pub max_bound: usize,
}

impl Default for SolveBudget {
    fn default() -> Self {
        SolveBudget {
            deadline: Some(Duration::from_secs(15)),
            counter_bound: 1,
            bound_multiplier: 2,
            max_bound: 64,
        }
    }
}

impl SolveBudget {
    pub fn with_deadline(d: Duration) -> Self {
        SolveBudget {
            deadline: Some(d),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryStatus {
    Open,
    Complete,
}

/// The reuse condition of a cut predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableEntry {
    pub predicate: String,
    pub params: Vec<String>,
    pub reuse_condition: LinConstraint,
    pub status: EntryStatus,
    /// Argument tuples of the calls frozen below the predicate's topmost call.
    pub frozen_children: Vec<Vec<String>>,
}

/// The constraint of a path from a call of a predicate (over its
/// parameters) to a later call of the same predicate with `target_args`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclePath {
    pub constraint: LinConstraint,
    pub target_args: Vec<String>,
}

/// True iff the reuse condition of `entry`, conjoined with each path,
/// entails the reuse condition renamed to the path's target arguments.
pub fn subsumption_check(entry: &TableEntry, paths: &[CyclePath]) -> bool {
    paths.iter().all(|path| {
        let premise = entry.reuse_condition.and(&path.constraint);
        let conclusion = rename_params(&entry.reuse_condition, &entry.params, &path.target_args);
        polyhedra::entails(&premise, &conclusion)
    })
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub verdict: Verdict,
    pub table: Vec<TableEntry>,
    /// Completion-check entailments of the last round.
    pub checks: Vec<SubsumptionRecord>,
    pub rounds: usize,
    /// Derivation tree of the last round.
    pub trace_dump: String,
}

impl SolveResult {
    fn unknown(why: &str, rounds: usize) -> Self {
        SolveResult {
            verdict: Verdict::Unknown(why.to_string()),
            table: vec![],
            checks: vec![],
            rounds,
            trace_dump: String::new(),
        }
    }
}

/// Predicates that are targets of back edges in a depth-first traversal of
/// the call graph from the goal.
pub fn cut_points(p: &ChcProgram) -> BTreeSet<String> {
    fn visit(
        p: &ChcProgram,
        q: &str,
        on_stack: &mut Vec<String>,
        done: &mut BTreeSet<String>,
        cuts: &mut BTreeSet<String>,
    ) {
        on_stack.push(q.to_string());
        for r in p.callees(Some(q)) {
            if on_stack.contains(&r) {
                cuts.insert(r);
            } else if !done.contains(&r) {
                visit(p, &r, on_stack, done, cuts);
            }
        }
        on_stack.pop();
        done.insert(q.to_string());
    }
    let mut cuts = BTreeSet::new();
    let mut done = BTreeSet::new();
    for r in p.callees(None) {
        if !done.contains(&r) {
            visit(p, &r, &mut Vec::new(), &mut done, &mut cuts);
        }
    }
    cuts
}

/// Builds the bounded derivation tree of `p` with unwinding bound `bound`
/// and annotates it with interpolants. `None` if the tree contains an
/// answer or grows too large.
pub fn derivation_tree(p: &ChcProgram, bound: usize) -> Option<DerivationTree> {
    let p = normalize(p)?;
    let cuts = cut_points(&p);
    let b = Builder {
        p: &p,
        cuts: &cuts,
        bound,
        deadline: None,
        max_nodes: MAX_NODES,
        counter: counter_after(&p, &[]),
    };
    match b.build() {
        Built::Tree(mut t) => {
            t.annotate(None);
            Some(t)
        }
        _ => None,
    }
}

/// Linear program with only variables as atom arguments. Clause positions
/// are preserved.
fn normalize(p: &ChcProgram) -> Option<ChcProgram> {
    if !p.is_linear() {
        return None;
    }
    let mut counter = counter_after(p, &[]);
    let flat = p
        .clauses()
        .iter()
        .map(|c| flatten_args(c, &mut counter))
        .collect::<Option<Vec<_>>>()?;
    ChcProgram::new(flat).ok()
}

fn out_of_time(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

/// Reuse conditions read off the topmost call of each cut predicate.
fn candidates(
    t: &DerivationTree,
    cuts: &BTreeSet<String>,
    params: &BTreeMap<String, Vec<String>>,
) -> BTreeMap<String, LinConstraint> {
    let mut out: BTreeMap<String, LinConstraint> = BTreeMap::new();
    let mut stack = vec![(0usize, BTreeSet::<String>::new())];
    while let Some((i, seen)) = stack.pop() {
        let n = &t.nodes[i];
        let mut seen = seen;
        if n.kind == NodeKind::Call {
            if let Some(q) = n.pred.as_ref().filter(|q| cuts.contains(*q)) {
                if seen.insert(q.clone()) {
                    let a = rename_params(&n.annotation(), &n.args, &params[q]);
                    let e = out.entry(q.clone()).or_insert_with(LinConstraint::top);
                    *e = e.and(&a);
                }
            }
        }
        for &c in n.children.iter().rev() {
            stack.push((c, seen.clone()));
        }
    }
    for q in cuts {
        out.entry(q.clone()).or_insert_with(LinConstraint::top);
    }
    out
}

fn frozen_below(t: &DerivationTree, q: &str) -> Vec<Vec<String>> {
    t.nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Frozen && n.pred.as_deref() == Some(q))
        .map(|n| n.args.clone())
        .collect()
}

/// Call-context invariants: cut predicates take their reuse condition,
/// other predicates the hull of the contexts they are reached in.
fn invariants(
    p: &ChcProgram,
    segs: &complete::Segments,
    cand: &BTreeMap<String, LinConstraint>,
    params: &BTreeMap<String, Vec<String>>,
) -> BTreeMap<String, Invariant> {
    let mut out = BTreeMap::new();
    for q in p.predicates() {
        let ps = params[&q].clone();
        let constraint = match cand.get(&q) {
            Some(c) => c.clone(),
            None => {
                let keep: BTreeSet<String> = ps.iter().cloned().collect();
                let mut acc: Option<LinConstraint> = None;
                for v in segs.visits.iter().filter(|v| v.pred == q) {
                    let pre = match &v.from {
                        None => v.constraint.clone(),
                        Some(f) => cand[f].and(&v.constraint),
                    };
                    let ctx = polyhedra::project(&rename_params(&pre, &v.args, &ps), &keep);
                    if !polyhedra::is_sat(&ctx) {
                        continue;
                    }
                    acc = Some(match acc {
                        None => ctx,
                        Some(a) => polyhedra::convex_hull(&a, &ctx).expect("satisfiable operands"),
                    });
                }
                polyhedra::simplify(&acc.unwrap_or_else(LinConstraint::bottom))
            }
        };
        out.insert(
            q,
            Invariant {
                params: ps,
                constraint,
            },
        );
    }
    out
}

/// Re-verifies a safety certificate from scratch: every segment between
/// cut points preserves the invariants and no fact is reachable.
pub fn check_certificate(p: &ChcProgram, inv: &BTreeMap<String, Invariant>) -> bool {
    let Some(p) = normalize(p) else { return false };
    let cuts = cut_points(&p);
    let params: BTreeMap<String, Vec<String>> = p
        .predicates()
        .into_iter()
        .map(|q| {
            let ps = p.param_names(&q);
            (q, ps)
        })
        .collect();
    let Some(segs) = segments(&p, &cuts, &params, counter_after(&p, &[]), MAX_SEGMENTS) else {
        return false;
    };
    let inv_of = |q: &str, args: &[String]| match inv.get(q) {
        Some(i) => rename_params(&i.constraint, &i.params, args),
        None => LinConstraint::top(),
    };
    segs.segments.iter().all(|s| {
        let premise = match &s.from {
            None => s.constraint.clone(),
            Some(f) => inv_of(f, &params[f]).and(&s.constraint),
        };
        let conclusion = match &s.to {
            None => LinConstraint::bottom(),
            Some(q) => inv_of(q, &s.target_args),
        };
        polyhedra::entails(&premise, &conclusion)
    })
}

/// Answers longer than this are reported as found.
const SHORTEN_LIMIT: usize = 24;

/// The first answer of minimal length, if one shorter than `found` exists
/// within [`SHORTEN_LIMIT`] steps.
fn shortest_answer(p: &ChcProgram, found: Vec<usize>) -> Vec<usize> {
    for d in 1..found.len().min(SHORTEN_LIMIT + 1) {
        if let OracleOutcome::FoundAnswer(t) = bounded_oracle(p, d) {
            return t.clause_ids();
        }
    }
    found
}

pub fn solve(p: &ChcProgram, budget: &SolveBudget) -> SolveResult {
    assert!(budget.counter_bound >= 1 && budget.bound_multiplier >= 2);
    let start = Instant::now();
    let deadline = budget.deadline.map(|d| start + d);
    let Some(flat) = normalize(p) else {
        return SolveResult::unknown("nonlinear clauses unsupported", 0);
    };
    let cuts = cut_points(&flat);
    let params: BTreeMap<String, Vec<String>> = flat
        .predicates()
        .into_iter()
        .map(|q| {
            let ps = flat.param_names(&q);
            (q, ps)
        })
        .collect();
    let Some(segs) = segments(
        &flat,
        &cuts,
        &params,
        counter_after(&flat, &[]),
        MAX_SEGMENTS,
    ) else {
        return SolveResult::unknown("too many paths between cut points", 0);
    };

    let mut stored: BTreeMap<String, LinConstraint> = BTreeMap::new();
    let mut bound = budget.counter_bound;
    let mut rounds = 0;
    let mut last = SolveResult::unknown("no round completed", 0);
    while bound <= budget.max_bound {
        if out_of_time(deadline) {
            last.verdict = Verdict::Unknown("deadline reached".into());
            return last;
        }
        rounds += 1;
        last.rounds = rounds;
        let b = Builder {
            p: &flat,
            cuts: &cuts,
            bound,
            deadline,
            max_nodes: MAX_NODES,
            counter: counter_after(&flat, &[]),
        };
        let mut t = match b.build() {
            Built::Answer(ids) => {
                let ids = shortest_answer(&flat, ids);
                let trace = replay(p, &ids).expect("tree answers replay on the input");
                return SolveResult {
                    verdict: Verdict::Unsafe(trace),
                    table: vec![],
                    checks: vec![],
                    rounds,
                    trace_dump: String::new(),
                };
            }
            Built::OutOfTime => {
                last.verdict = Verdict::Unknown("deadline reached".into());
                return last;
            }
            Built::TooLarge => {
                last.verdict = Verdict::Unknown("derivation tree too large".into());
                return last;
            }
            Built::Tree(t) => t,
        };
        if !t.annotate(deadline) {
            last.verdict = Verdict::Unknown("deadline reached".into());
            return last;
        }
        for (q, c) in candidates(&t, &cuts, &params) {
            let e = stored.entry(q).or_insert_with(LinConstraint::top);
            *e = polyhedra::simplify(&e.and(&c));
        }
        last.trace_dump = t.dump();
        match close(&segs, &stored, &params, deadline) {
            Closed::OutOfTime => {
                last.verdict = Verdict::Unknown("deadline reached".into());
                return last;
            }
            Closed::Inductive {
                candidates: cand,
                checks,
                safe,
            } => {
                last.table = cuts
                    .iter()
                    .map(|q| TableEntry {
                        predicate: q.clone(),
                        params: params[q].clone(),
                        reuse_condition: cand[q].clone(),
                        status: if safe {
                            EntryStatus::Complete
                        } else {
                            EntryStatus::Open
                        },
                        frozen_children: frozen_below(&t, q),
                    })
                    .collect();
                last.checks = checks;
                if safe {
                    let inv = invariants(&flat, &segs, &cand, &params);
                    if check_certificate(p, &inv) {
                        last.verdict = Verdict::Safe(inv);
                        return last;
                    }
                }
            }
        }
        bound = bound.saturating_mul(budget.bound_multiplier);
    }
    last.verdict = Verdict::Unknown(format!(
        "no proof up to unwinding bound {}",
        budget.max_bound
    ));
    last
}
