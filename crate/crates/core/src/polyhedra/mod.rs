//! Exact linear arithmetic over the rationals.
//!
//! Constraints are conjunctions of linear equalities and non-strict
//! inequalities. Every operation is exact: satisfiability and entailment go
//! through a rational simplex, projection is Fourier–Motzkin with
//! redundancy removal, and interpolants come from Farkas certificates.

mod hull;
mod interp;
mod linear;
mod project;
pub(crate) mod simplex;

pub use hull::{convex_hull, widen};
pub use interp::{binary_interpolant, sequence_interpolants, PathFormulas};
pub use linear::{LinAtom, LinConstraint, LinExpr, Rel, Truth};
pub use project::project;

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::terms::Rat;
use simplex::{Lp, LpOutcome};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolyError {
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
}

/// Equalities in echelon form plus the inequalities with pivot variables
/// substituted out.
struct Reduced {
    eqs: Vec<LinAtom>,
    ineqs: LinConstraint,
}

fn reduce(c: &LinConstraint) -> Option<Reduced> {
    if c.is_false() {
        return None;
    }
    let (eqs, ineqs): (Vec<LinAtom>, Vec<LinAtom>) =
        c.atoms().iter().cloned().partition(|a| a.rel() == Rel::Eq);
    let eqs = linear::echelon(eqs)?;
    let mut out = Vec::with_capacity(ineqs.len());
    for a in ineqs {
        let mut e = LinExpr::from_atom_lhs(&a);
        for eq in &eqs {
            e = e.eliminate_with(eq);
        }
        match LinAtom::from_expr(e, Rel::Le) {
            Truth::Atom(x) => out.push(x),
            Truth::True => {}
            Truth::False => return None,
        }
    }
    let ineqs = LinConstraint::from_atoms(out);
    if ineqs.is_false() {
        return None;
    }
    Some(Reduced { eqs, ineqs })
}

/// Satisfiability over the rationals.
pub fn is_sat(c: &LinConstraint) -> bool {
    if c.is_false() {
        return false;
    }
    if c.atoms().is_empty() {
        return true;
    }
    let Some(r) = reduce(c) else { return false };
    r.ineqs.is_empty()
        || !matches!(
            Lp::from_constraint(&r.ineqs).maximize(None),
            LpOutcome::Infeasible
        )
}

/// A rational point satisfying `c`, or `None` when `c` is unsatisfiable.
/// Variables left unconstrained by the solver are set to zero.
pub fn model(c: &LinConstraint) -> Option<BTreeMap<String, Rat>> {
    let r = reduce(c)?;
    let lp = Lp::from_constraint(&r.ineqs);
    let mut point = match lp.maximize(None) {
        LpOutcome::Infeasible => return None,
        LpOutcome::Optimal { point, .. } => lp.assignment(&point),
        LpOutcome::Unbounded => unreachable!("feasibility problem has no objective"),
    };
    let pivots: std::collections::BTreeSet<&String> =
        r.eqs.iter().filter_map(|e| e.vars().next()).collect();
    for v in c.vars() {
        if !pivots.contains(&v) {
            point.entry(v).or_insert_with(Rat::zero);
        }
    }
    for eq in &r.eqs {
        let mut it = eq.coeffs().iter();
        let (pivot, _) = it.next().expect("nonempty equality");
        let mut val = eq.bound().clone();
        for (v, q) in it {
            val -= q * &point[v];
        }
        point.insert(pivot.clone(), val);
    }
    Some(point)
}

/// Supremum of `expr` over the models of `c`: `None` if unbounded,
/// `Some(None)` if `c` is unsatisfiable.
pub(crate) fn maximize(c: &LinConstraint, expr: &BTreeMap<String, Rat>) -> Option<Option<Rat>> {
    let Some(r) = reduce(c) else {
        return Some(None);
    };
    let mut e = LinExpr::from_parts(expr.clone(), Rat::from_integer(0.into()));
    for eq in &r.eqs {
        e = e.eliminate_with(eq);
    }
    let lp = Lp::from_constraint(&r.ineqs);
    let Some(obj) = lp.objective(e.coeffs()) else {
        return if is_sat(&r.ineqs) { None } else { Some(None) };
    };
    match lp.maximize(Some(&obj)) {
        LpOutcome::Infeasible => Some(None),
        LpOutcome::Unbounded => None,
        LpOutcome::Optimal { value, .. } => Some(Some(value + e.constant_term())),
    }
}

/// Does every model of `c` satisfy `atom`?
pub fn entails_atom(c: &LinConstraint, atom: &LinAtom) -> bool {
    let upper = match maximize(c, atom.coeffs()) {
        None => return false,
        Some(None) => return true,
        Some(Some(v)) => v,
    };
    if upper > *atom.bound() {
        return false;
    }
    if atom.rel() == Rel::Le {
        return true;
    }
    let neg: BTreeMap<String, Rat> = atom
        .coeffs()
        .iter()
        .map(|(v, q)| (v.clone(), -q.clone()))
        .collect();
    match maximize(c, &neg) {
        None => false,
        Some(None) => true,
        Some(Some(v)) => -v >= *atom.bound(),
    }
}

/// `c1 ⊨ c2`: every rational model of `c1` satisfies `c2`.
pub fn entails(c1: &LinConstraint, c2: &LinConstraint) -> bool {
    if c1.is_false() || c2.atoms().is_empty() && !c2.is_false() {
        return true;
    }
    if !is_sat(c1) {
        return true;
    }
    if c2.is_false() {
        return false;
    }
    c2.atoms().iter().all(|a| entails_atom(c1, a))
}

pub fn equivalent(c1: &LinConstraint, c2: &LinConstraint) -> bool {
    entails(c1, c2) && entails(c2, c1)
}

/// Canonical irredundant form. Implicit equalities are made explicit and
/// reduced to echelon form with the smallest-named variable as pivot; pivot
/// variables are substituted out of the inequalities, and every inequality
/// entailed by the others is dropped. Equivalent inputs yield identical
/// outputs.
pub fn simplify(c: &LinConstraint) -> LinConstraint {
    simplify_with(c, &[])
}

/// [`simplify`] with the variables of `preferred` chosen as equality pivots
/// first, so they are expressed in terms of the others and eliminated from
/// the inequalities. Canonical for a fixed `preferred`.
pub fn simplify_with(c: &LinConstraint, preferred: &[String]) -> LinConstraint {
    if c.is_false() || !is_sat(c) {
        return LinConstraint::bottom();
    }
    if c.atoms().is_empty() {
        return c.clone();
    }
    let mut eqs: Vec<LinAtom> = Vec::new();
    let mut ineqs: Vec<LinAtom> = Vec::new();
    for a in c.atoms() {
        match a.rel() {
            Rel::Eq => eqs.push(a.clone()),
            Rel::Le => ineqs.push(a.clone()),
        }
    }
    // Implicit equalities: inequalities whose reverse direction is entailed.
    let mut i = 0;
    while i < ineqs.len() {
        let a = &ineqs[i];
        let neg: BTreeMap<String, Rat> = a
            .coeffs()
            .iter()
            .map(|(v, q)| (v.clone(), -q.clone()))
            .collect();
        if let Some(Some(v)) = maximize(c, &neg) {
            if -v == *a.bound() {
                let eq = a.with_rel(Rel::Eq);
                eqs.push(eq);
                ineqs.remove(i);
                continue;
            }
        }
        i += 1;
    }
    let rows = linear::echelon_by(eqs, preferred).expect("satisfiable constraint");
    let ineqs: Vec<LinAtom> = ineqs
        .into_iter()
        .filter_map(|a| {
            let mut e = LinExpr::from_atom_lhs(&a);
            for (pivot, row) in &rows {
                if let Some(k) = e.coeffs().get(pivot).cloned() {
                    e = e.add_scaled(row, &-k);
                }
            }
            match LinAtom::from_expr(e, a.rel()) {
                Truth::Atom(x) => Some(x),
                Truth::True => None,
                Truth::False => unreachable!("satisfiable constraint produced a false atom"),
            }
        })
        .collect();
    let mut kept = LinConstraint::from_atoms(ineqs).atoms().to_vec();
    // Drop redundant inequalities; iterate in canonical order for determinism.
    let mut idx = 0;
    while idx < kept.len() {
        let others: Vec<LinAtom> = kept
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != idx)
            .map(|(_, a)| a.clone())
            .collect();
        if entails_atom(&LinConstraint::from_atoms(others), &kept[idx]) {
            kept.remove(idx);
        } else {
            idx += 1;
        }
    }
    let eqs = rows
        .into_iter()
        .filter_map(|(_, r)| match LinAtom::from_expr(r, Rel::Eq) {
            Truth::Atom(a) => Some(a),
            _ => None,
        });
    LinConstraint::from_atoms(eqs.chain(kept))
}

#[cfg(test)]
mod tests;
