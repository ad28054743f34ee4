use std::collections::BTreeSet;

use num_traits::One;

use super::linear::{LinAtom, LinConstraint, LinExpr};
use super::{entails_atom, project, simplify, PolyError};
use crate::terms::Rat;

const LAMBDA: &str = "#l";

/// Closed convex hull, computed by projecting the lifted system
/// `x = y + z, A1·y ≤ λ·b1, A2·z ≤ (1−λ)·b2, 0 ≤ λ ≤ 1` onto `x`.
pub fn convex_hull(c1: &LinConstraint, c2: &LinConstraint) -> Result<LinConstraint, PolyError> {
    if c1.is_false() || c2.is_false() {
        return Err(PolyError::Domain("convex hull of FALSE"));
    }
    let s1 = simplify(c1);
    let s2 = simplify(c2);
    if s1.is_false() {
        return Ok(s2);
    }
    if s2.is_false() {
        return Ok(s1);
    }
    if s1 == s2 {
        return Ok(s1);
    }
    let vars: BTreeSet<String> = s1.vars().union(&s2.vars()).cloned().collect();
    let y = |v: &str| format!("#y{v}");
    let z = |v: &str| format!("#z{v}");
    let lambda = LinExpr::var(LAMBDA);
    let mut lifted = Vec::new();
    for v in &vars {
        lifted.push(LinAtom::eq(
            &LinExpr::var(v.clone()),
            &LinExpr::var(y(v)).add(&LinExpr::var(z(v))),
        ));
    }
    for (c, side_var, weight) in [
        (&s1, &y as &dyn Fn(&str) -> String, lambda.clone()),
        (
            &s2,
            &z as &dyn Fn(&str) -> String,
            LinExpr::constant(Rat::one()).sub(&lambda),
        ),
    ] {
        for a in c.atoms() {
            let mut lhs = LinExpr::zero();
            for (v, q) in a.coeffs() {
                lhs = lhs.add_scaled(&LinExpr::var(side_var(v)), q);
            }
            let rhs = weight.scale(a.bound());
            lifted.push(LinAtom::relate(&lhs, a.rel(), &rhs));
        }
    }
    lifted.push(LinAtom::ge(&lambda, &LinExpr::zero()));
    lifted.push(LinAtom::le(&lambda, &LinExpr::constant(Rat::one())));
    Ok(project(&LinConstraint::from_truths(lifted), &vars))
}

/// Standard widening: the atoms of `c1` (equalities as inequality pairs)
/// that `c2` entails.
pub fn widen(c1: &LinConstraint, c2: &LinConstraint) -> Result<LinConstraint, PolyError> {
    if c1.is_false() || c2.is_false() {
        return Err(PolyError::Domain("widening with FALSE"));
    }
    let s1 = simplify(c1);
    let kept: Vec<LinAtom> = s1
        .split_equalities()
        .into_iter()
        .filter(|a| entails_atom(c2, a))
        .collect();
    Ok(simplify(&LinConstraint::from_atoms(kept)))
}
