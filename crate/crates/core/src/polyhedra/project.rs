use std::collections::BTreeSet;

use num_traits::{One, Signed};

use super::linear::{LinAtom, LinConstraint, LinExpr, Rel, Truth};
use super::simplify;
use crate::terms::Rat;

/// Existential projection onto `keep` (Fourier–Motzkin over the reals).
pub fn project(c: &LinConstraint, keep: &BTreeSet<String>) -> LinConstraint {
    if c.is_false() {
        return LinConstraint::bottom();
    }
    let c = simplify(c);
    if c.is_false() {
        return c;
    }
    let mut atoms: Vec<LinAtom> = c.atoms().to_vec();
    // Equalities first: each one eliminates a variable by substitution.
    loop {
        let found = atoms.iter().enumerate().find_map(|(i, a)| {
            if a.rel() != Rel::Eq {
                return None;
            }
            a.vars()
                .find(|v| !keep.contains(*v))
                .map(|v| (i, v.clone()))
        });
        let Some((i, v)) = found else { break };
        let eq = atoms.remove(i);
        let by = solve_for(&eq, &v);
        atoms = substitute_all(&atoms, &v, &by);
    }
    loop {
        let elim: BTreeSet<&String> = atoms
            .iter()
            .flat_map(|a| a.vars())
            .filter(|v| !keep.contains(*v))
            .collect();
        let Some(v) = elim
            .iter()
            .map(|v| {
                let (p, n) =
                    atoms
                        .iter()
                        .fold((0i64, 0i64), |(p, n), a| match a.coeffs().get(*v) {
                            Some(q) if q.is_positive() => (p + 1, n),
                            Some(_) => (p, n + 1),
                            None => (p, n),
                        });
                (p * n - p - n, (*v).clone())
            })
            .min()
            .map(|(_, v)| v)
        else {
            break;
        };
        atoms = eliminate(&atoms, &v);
        atoms = simplify(&LinConstraint::from_atoms(atoms)).atoms().to_vec();
    }
    simplify(&LinConstraint::from_atoms(atoms))
}

fn solve_for(eq: &LinAtom, v: &str) -> LinExpr {
    // a·v + rest = b  ⇒  v = (b − rest)/a
    let a = eq.coeffs()[v].clone();
    let rest = LinExpr::from_atom_lhs(eq).substitute(v, &LinExpr::zero());
    rest.scale(&(-Rat::one() / a))
}

fn substitute_all(atoms: &[LinAtom], v: &str, by: &LinExpr) -> Vec<LinAtom> {
    atoms
        .iter()
        .filter_map(|a| {
            match LinAtom::from_expr(LinExpr::from_atom_lhs(a).substitute(v, by), a.rel()) {
                Truth::Atom(x) => Some(x),
                Truth::True => None,
                // The input was satisfiable, so substitution cannot yield a contradiction.
                Truth::False => unreachable!("substitution of a satisfiable system"),
            }
        })
        .collect()
}

/// One Fourier–Motzkin step on inequalities (no equality mentions `v`).
fn eliminate(atoms: &[LinAtom], v: &str) -> Vec<LinAtom> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut out = Vec::new();
    for a in atoms {
        match a.coeffs().get(v) {
            None => out.push(a.clone()),
            Some(q) => {
                debug_assert_eq!(a.rel(), Rel::Le);
                if q.is_positive() {
                    pos.push(a);
                } else {
                    neg.push(a);
                }
            }
        }
    }
    for p in &pos {
        for n in &neg {
            let alpha = p.coeffs()[v].clone();
            let beta = -n.coeffs()[v].clone();
            let e = LinExpr::from_atom_lhs(p)
                .scale(&beta)
                .add_scaled(&LinExpr::from_atom_lhs(n), &alpha);
            if let Truth::Atom(a) = LinAtom::from_expr(e, Rel::Le) {
                out.push(a);
            }
        }
    }
    out
}
