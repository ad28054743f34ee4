use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::linear::{LinAtom, LinConstraint, Rel, Truth};
use super::simplex::{Lp, LpOutcome};
use super::{project, PolyError};
use crate::terms::Rat;

/// An ordered sequence of formulas whose conjunction is unsatisfiable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathFormulas {
    pub formulas: Vec<LinConstraint>,
}

impl PathFormulas {
    pub fn new(formulas: Vec<LinConstraint>) -> Self {
        PathFormulas { formulas }
    }
}

/// Craig interpolant of an unsatisfiable pair.
///
/// A Farkas certificate `λ ≥ 0` with `Σλ·a = 0`, `Σλ·b = −1` is found by LP,
/// minimizing the multiplier mass placed on the atoms of `a`. The `a`-side
/// combination `r·x ≤ β_a` is scaled to primitive integer coefficients and
/// its bound relaxed to the largest integer still refuted by the `b` side.
pub fn binary_interpolant(
    a: &LinConstraint,
    b: &LinConstraint,
) -> Result<LinConstraint, PolyError> {
    if a.is_false() {
        return Ok(LinConstraint::bottom());
    }
    if b.is_false() {
        return Ok(LinConstraint::top());
    }
    let a_rows = a.split_equalities();
    let b_rows = b.split_equalities();
    let vars: Vec<String> = a.vars().union(&b.vars()).cloned().collect();
    let n = a_rows.len() + b_rows.len();
    let mut lp = Lp::new(vec![true; n]);
    let all: Vec<&LinAtom> = a_rows.iter().chain(b_rows.iter()).collect();
    for v in &vars {
        let row: Vec<Rat> = all
            .iter()
            .map(|r| r.coeffs().get(v).cloned().unwrap_or_else(Rat::zero))
            .collect();
        lp.add_row(row, Rel::Eq, Rat::zero());
    }
    let bounds: Vec<Rat> = all.iter().map(|r| r.bound().clone()).collect();
    lp.add_row(bounds, Rel::Eq, -Rat::one());
    let mut obj = vec![Rat::zero(); n];
    for o in obj.iter_mut().take(a_rows.len()) {
        *o = -Rat::one();
    }
    let lambda = match lp.maximize(Some(&obj)) {
        LpOutcome::Optimal { point, .. } => point,
        LpOutcome::Infeasible => {
            return Err(PolyError::Precondition(
                "interpolation of a satisfiable pair",
            ))
        }
        LpOutcome::Unbounded => unreachable!("objective is bounded above by zero"),
    };
    let mut r: BTreeMap<String, Rat> = BTreeMap::new();
    let mut beta_a = Rat::zero();
    let mut beta_b = Rat::zero();
    for (i, (row, l)) in all.iter().zip(&lambda).enumerate() {
        if l.is_zero() {
            continue;
        }
        if i < a_rows.len() {
            for (v, q) in row.coeffs() {
                *r.entry(v.clone()).or_insert_with(Rat::zero) += q * l;
            }
            beta_a += row.bound() * l;
        } else {
            beta_b += row.bound() * l;
        }
    }
    r.retain(|_, q| !q.is_zero());
    if r.is_empty() {
        return Ok(if beta_a.is_negative() {
            LinConstraint::bottom()
        } else {
            LinConstraint::top()
        });
    }
    // Scale r to primitive integer coefficients.
    let mut den = BigInt::one();
    for q in r.values() {
        den = den.lcm(q.denom());
    }
    let mut num_gcd = BigInt::zero();
    for q in r.values() {
        num_gcd = num_gcd.gcd(&(q * Rat::from_integer(den.clone())).to_integer());
    }
    let scale = Rat::new(den, num_gcd);
    let r: BTreeMap<String, Rat> = r.into_iter().map(|(v, q)| (v, q * &scale)).collect();
    let beta_a = beta_a * &scale;
    let beta_b = beta_b * &scale;
    // a ⊨ r·x ≤ β_a and b ⊨ r·x ≥ −β_b with β_a < −β_b.
    let strict_below = (-beta_b).ceil() - Rat::one();
    let k = if strict_below > beta_a {
        strict_below
    } else {
        beta_a
    };
    match LinAtom::new(r, Rel::Le, k) {
        Truth::Atom(at) => Ok(LinConstraint::from_atoms([at])),
        _ => unreachable!("nonzero combination"),
    }
}

/// Path interpolant `I_0 = TRUE, …, I_n = FALSE` with
/// `I_{i−1} ∧ F_i ⊨ I_i`.
pub fn sequence_interpolants(p: &PathFormulas) -> Result<Vec<LinConstraint>, PolyError> {
    let f = &p.formulas;
    let n = f.len();
    let mut out = vec![LinConstraint::top()];
    if n == 0 {
        return Err(PolyError::Precondition("empty formula sequence"));
    }
    // Suffix conjunctions projected onto variables shared with their prefix.
    let mut suffix = vec![LinConstraint::top(); n + 1];
    for i in (0..n).rev() {
        suffix[i] = f[i].and(&suffix[i + 1]);
    }
    if super::is_sat(&suffix[0]) {
        return Err(PolyError::Precondition("satisfiable formula sequence"));
    }
    let mut prefix_vars = std::collections::BTreeSet::new();
    for i in 1..n {
        prefix_vars.extend(f[i - 1].vars());
        let shared: std::collections::BTreeSet<String> = suffix[i]
            .vars()
            .intersection(&prefix_vars)
            .cloned()
            .collect();
        let b = project(&suffix[i], &shared);
        let a = out[i - 1].and(&f[i - 1]);
        out.push(binary_interpolant(&a, &b)?);
    }
    out.push(LinConstraint::bottom());
    Ok(out)
}
