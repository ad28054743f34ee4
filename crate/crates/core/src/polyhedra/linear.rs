use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::terms::{fmt_rat, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Eq,
    Le,
}

/// Outcome of normalizing a single relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Atom(LinAtom),
}

/// An affine expression `Σ coeff·var + constant`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinExpr {
    coeffs: BTreeMap<String, Rat>,
    constant: Rat,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(k: Rat) -> Self {
        LinExpr {
            coeffs: BTreeMap::new(),
            constant: k,
        }
    }

    pub fn var(name: impl Into<String>) -> Self {
        LinExpr {
            coeffs: BTreeMap::from([(name.into(), Rat::one())]),
            constant: Rat::zero(),
        }
    }

    pub fn from_parts(coeffs: BTreeMap<String, Rat>, constant: Rat) -> Self {
        let mut e = LinExpr { coeffs, constant };
        e.coeffs.retain(|_, q| !q.is_zero());
        e
    }

    /// `Σ a·x − b` for an atom `Σ a·x rel b`.
    pub(crate) fn from_atom_lhs(a: &LinAtom) -> Self {
        LinExpr {
            coeffs: a.coeffs.clone(),
            constant: -a.bound.clone(),
        }
    }

    pub fn coeffs(&self) -> &BTreeMap<String, Rat> {
        &self.coeffs
    }

    pub fn constant_term(&self) -> &Rat {
        &self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        self.add_scaled(other, &Rat::one())
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add_scaled(other, &-Rat::one())
    }

    pub fn scale(&self, k: &Rat) -> LinExpr {
        if k.is_zero() {
            return LinExpr::zero();
        }
        LinExpr {
            coeffs: self
                .coeffs
                .iter()
                .map(|(v, q)| (v.clone(), q * k))
                .collect(),
            constant: &self.constant * k,
        }
    }

    pub fn add_scaled(&self, other: &LinExpr, k: &Rat) -> LinExpr {
        let mut out = self.clone();
        for (v, q) in &other.coeffs {
            let e = out.coeffs.entry(v.clone()).or_insert_with(Rat::zero);
            *e += q * k;
            if e.is_zero() {
                out.coeffs.remove(v);
            }
        }
        out.constant += &other.constant * k;
        out
    }

    /// Removes the pivot of `eq` (an equality whose leading coefficient is 1)
    /// from this expression.
    pub(crate) fn eliminate_with(&self, eq: &LinAtom) -> LinExpr {
        let (pivot, _) = eq.coeffs.iter().next().expect("nonempty equality");
        match self.coeffs.get(pivot) {
            None => self.clone(),
            Some(k) => {
                let k = k.clone();
                self.add_scaled(&LinExpr::from_atom_lhs(eq), &-k)
            }
        }
    }

    pub fn substitute(&self, var: &str, by: &LinExpr) -> LinExpr {
        match self.coeffs.get(var) {
            None => self.clone(),
            Some(k) => {
                let k = k.clone();
                let mut out = self.clone();
                out.coeffs.remove(var);
                out.add_scaled(by, &k)
            }
        }
    }

    pub fn eval(&self, point: &BTreeMap<String, Rat>) -> Option<Rat> {
        let mut acc = self.constant.clone();
        for (v, q) in &self.coeffs {
            acc += q * point.get(v)?;
        }
        Some(acc)
    }
}

/// A canonical linear relation `Σ coeff·var rel bound`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinAtom {
    rel: Rel,
    coeffs: BTreeMap<String, Rat>,
    bound: Rat,
}

impl LinAtom {
    /// Normalizes `Σ coeffs·var rel bound`.
    #[allow(clippy::new_ret_no_self)]
    pub fn new(coeffs: BTreeMap<String, Rat>, rel: Rel, bound: Rat) -> Truth {
        Self::from_expr(LinExpr::from_parts(coeffs, -bound), rel)
    }

    /// Normalizes `e rel 0`.
    pub fn from_expr(e: LinExpr, rel: Rel) -> Truth {
        let LinExpr {
            mut coeffs,
            constant,
        } = e;
        coeffs.retain(|_, q| !q.is_zero());
        let bound = -constant;
        let Some(lead) = coeffs.values().next().cloned() else {
            let holds = match rel {
                Rel::Eq => bound.is_zero(),
                Rel::Le => !bound.is_negative(),
            };
            return if holds { Truth::True } else { Truth::False };
        };
        let div = match rel {
            Rel::Eq => lead,
            Rel::Le => lead.abs(),
        };
        for q in coeffs.values_mut() {
            *q /= &div;
        }
        Truth::Atom(LinAtom {
            rel,
            coeffs,
            bound: bound / div,
        })
    }

    /// `lhs rel rhs`.
    pub fn relate(lhs: &LinExpr, rel: Rel, rhs: &LinExpr) -> Truth {
        Self::from_expr(lhs.sub(rhs), rel)
    }

    pub fn le(lhs: &LinExpr, rhs: &LinExpr) -> Truth {
        Self::relate(lhs, Rel::Le, rhs)
    }

    pub fn ge(lhs: &LinExpr, rhs: &LinExpr) -> Truth {
        Self::relate(rhs, Rel::Le, lhs)
    }

    pub fn eq(lhs: &LinExpr, rhs: &LinExpr) -> Truth {
        Self::relate(lhs, Rel::Eq, rhs)
    }

    pub fn coeffs(&self) -> &BTreeMap<String, Rat> {
        &self.coeffs
    }

    pub fn rel(&self) -> Rel {
        self.rel
    }

    pub fn bound(&self) -> &Rat {
        &self.bound
    }

    pub fn vars(&self) -> impl Iterator<Item = &String> {
        self.coeffs.keys()
    }

    pub(crate) fn with_rel(&self, rel: Rel) -> LinAtom {
        match LinAtom::from_expr(LinExpr::from_atom_lhs(self), rel) {
            Truth::Atom(a) => a,
            _ => unreachable!("atom with variables stays an atom"),
        }
    }

    /// The two inequalities of an equality, or the atom itself.
    pub fn split(&self) -> Vec<LinAtom> {
        match self.rel {
            Rel::Le => vec![self.clone()],
            Rel::Eq => {
                let neg = LinExpr::from_atom_lhs(self).scale(&-Rat::one());
                let up = self.with_rel(Rel::Le);
                match LinAtom::from_expr(neg, Rel::Le) {
                    Truth::Atom(down) => vec![up, down],
                    _ => unreachable!(),
                }
            }
        }
    }

    pub fn holds_at(&self, point: &BTreeMap<String, Rat>) -> Option<bool> {
        let v = LinExpr::from_atom_lhs(self).eval(point)?;
        Some(match self.rel {
            Rel::Eq => v.is_zero(),
            Rel::Le => !v.is_positive(),
        })
    }

    pub fn rename(&self, map: &dyn Fn(&str) -> String) -> Truth {
        let mut coeffs = BTreeMap::new();
        for (v, q) in &self.coeffs {
            *coeffs.entry(map(v)).or_insert_with(Rat::zero) += q;
        }
        LinAtom::new(coeffs, self.rel, self.bound.clone())
    }

    /// Integer-scaled `(coefficients, bound)` with positive scale factor.
    pub(crate) fn integer_scaled(&self) -> (Vec<(String, num_bigint::BigInt)>, num_bigint::BigInt) {
        let mut l = self.bound.denom().clone();
        for q in self.coeffs.values() {
            l = l.lcm(q.denom());
        }
        let scale = Rat::from_integer(l);
        let coeffs = self
            .coeffs
            .iter()
            .map(|(v, q)| (v.clone(), (q * &scale).to_integer()))
            .collect();
        (coeffs, (&self.bound * &scale).to_integer())
    }
}

impl fmt::Display for LinAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (mut coeffs, mut bound) = self.integer_scaled();
        let mut op = match self.rel {
            Rel::Eq => "=",
            Rel::Le => "=<",
        };
        if self.rel == Rel::Le && coeffs[0].1.is_negative() {
            for c in coeffs.iter_mut() {
                c.1 = -c.1.clone();
            }
            bound = -bound;
            op = ">=";
        }
        for (i, (v, c)) in coeffs.iter().enumerate() {
            if c.is_negative() {
                f.write_str("-")?;
            } else if i > 0 {
                f.write_str("+")?;
            }
            let m = c.abs();
            if !m.is_one() {
                write!(f, "{m}*")?;
            }
            f.write_str(v)?;
        }
        write!(f, " {op} {bound}")
    }
}

/// A conjunction of linear atoms. The empty conjunction is TRUE; FALSE has a
/// single canonical representation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinConstraint {
    atoms: Vec<LinAtom>,
    is_false: bool,
}

impl Default for LinConstraint {
    fn default() -> Self {
        Self::top()
    }
}

impl LinConstraint {
    pub fn top() -> Self {
        LinConstraint {
            atoms: Vec::new(),
            is_false: false,
        }
    }

    pub fn bottom() -> Self {
        LinConstraint {
            atoms: Vec::new(),
            is_false: true,
        }
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = LinAtom>) -> Self {
        let mut atoms: Vec<LinAtom> = atoms.into_iter().collect();
        atoms.sort();
        atoms.dedup();
        // Two equalities over the same left-hand side with different bounds.
        for w in atoms.windows(2) {
            if w[0].rel == Rel::Eq && w[1].rel == Rel::Eq && w[0].coeffs == w[1].coeffs {
                return Self::bottom();
            }
        }
        LinConstraint {
            atoms,
            is_false: false,
        }
    }

    pub fn from_truths(items: impl IntoIterator<Item = Truth>) -> Self {
        let mut atoms = Vec::new();
        for t in items {
            match t {
                Truth::True => {}
                Truth::False => return Self::bottom(),
                Truth::Atom(a) => atoms.push(a),
            }
        }
        Self::from_atoms(atoms)
    }

    pub fn is_false(&self) -> bool {
        self.is_false
    }

    /// Syntactically TRUE (no atoms).
    pub fn is_true(&self) -> bool {
        !self.is_false && self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[LinAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn and(&self, other: &LinConstraint) -> LinConstraint {
        if self.is_false || other.is_false {
            return Self::bottom();
        }
        Self::from_atoms(self.atoms.iter().chain(&other.atoms).cloned())
    }

    pub fn and_atom(&self, atom: Truth) -> LinConstraint {
        match atom {
            Truth::True => self.clone(),
            Truth::False => Self::bottom(),
            Truth::Atom(a) => self.and(&LinConstraint::from_atoms([a])),
        }
    }

    pub fn conjoin_all<'a>(items: impl IntoIterator<Item = &'a LinConstraint>) -> LinConstraint {
        let mut atoms = Vec::new();
        for c in items {
            if c.is_false {
                return Self::bottom();
            }
            atoms.extend(c.atoms.iter().cloned());
        }
        Self::from_atoms(atoms)
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.atoms
            .iter()
            .flat_map(|a| a.coeffs.keys().cloned())
            .collect()
    }

    pub fn rename(&self, map: &dyn Fn(&str) -> String) -> LinConstraint {
        if self.is_false {
            return Self::bottom();
        }
        Self::from_truths(self.atoms.iter().map(|a| a.rename(map)))
    }

    pub fn rename_with(&self, map: &BTreeMap<String, String>) -> LinConstraint {
        self.rename(&|v: &str| map.get(v).cloned().unwrap_or_else(|| v.to_string()))
    }

    pub fn substitute(&self, var: &str, by: &LinExpr) -> LinConstraint {
        if self.is_false {
            return Self::bottom();
        }
        Self::from_truths(
            self.atoms
                .iter()
                .map(|a| LinAtom::from_expr(LinExpr::from_atom_lhs(a).substitute(var, by), a.rel)),
        )
    }

    /// All atoms hold at `point`; `None` if a variable is unassigned.
    pub fn holds_at(&self, point: &BTreeMap<String, Rat>) -> Option<bool> {
        if self.is_false {
            return Some(false);
        }
        let mut all = true;
        for a in &self.atoms {
            all &= a.holds_at(point)?;
        }
        Some(all)
    }

    /// The constraint fixing each variable of `point`.
    pub fn from_point(point: &BTreeMap<String, Rat>) -> LinConstraint {
        Self::from_truths(
            point
                .iter()
                .map(|(v, q)| LinAtom::eq(&LinExpr::var(v.clone()), &LinExpr::constant(q.clone()))),
        )
    }

    /// Inequalities only, with each equality split into two.
    pub fn split_equalities(&self) -> Vec<LinAtom> {
        self.atoms.iter().flat_map(LinAtom::split).collect()
    }
}

impl fmt::Display for LinConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_false {
            return f.write_str("false");
        }
        if self.atoms.is_empty() {
            return f.write_str("true");
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, q) in &self.coeffs {
            if q.is_negative() {
                f.write_str("-")?;
            } else if !first {
                f.write_str("+")?;
            }
            let m = q.abs();
            if !m.is_one() {
                fmt_rat(&m, f)?;
                f.write_str("*")?;
            }
            f.write_str(v)?;
            first = false;
        }
        if first || !self.constant.is_zero() {
            if !first && !self.constant.is_negative() {
                f.write_str("+")?;
            }
            fmt_rat(&self.constant, f)?;
        }
        Ok(())
    }
}

/// Reduced row echelon form of a set of equalities, pivoting on the
/// smallest-named variable first. Dependent rows are dropped; `None` if the
/// equalities are inconsistent.
pub(crate) fn echelon(eqs: Vec<LinAtom>) -> Option<Vec<LinAtom>> {
    Some(
        echelon_by(eqs, &[])?
            .into_iter()
            .filter_map(|(_, r)| match LinAtom::from_expr(r, Rel::Eq) {
                Truth::Atom(a) => Some(a),
                _ => None,
            })
            .collect(),
    )
}

/// Like [`echelon`], but pivots on the variables of `preferred` (in that
/// order) before the others, and returns each row as `(pivot, lhs)` with
/// unit pivot coefficient.
pub(crate) fn echelon_by(
    eqs: Vec<LinAtom>,
    preferred: &[String],
) -> Option<Vec<(String, LinExpr)>> {
    let mut rows: Vec<LinExpr> = eqs.iter().map(LinExpr::from_atom_lhs).collect();
    let all: BTreeSet<String> = rows.iter().flat_map(|r| r.coeffs.keys().cloned()).collect();
    let mut order: Vec<String> = preferred
        .iter()
        .filter(|v| all.contains(*v))
        .cloned()
        .collect();
    order.extend(all.into_iter().filter(|v| !preferred.contains(v)));
    let mut done: Vec<(String, LinExpr)> = Vec::new();
    for v in order {
        let Some(pos) = rows.iter().position(|r| r.coeffs.contains_key(&v)) else {
            continue;
        };
        let row = rows.remove(pos);
        let k = row.coeffs[&v].clone();
        let row = row.scale(&(Rat::one() / k));
        for r in rows.iter_mut().chain(done.iter_mut().map(|(_, r)| r)) {
            if let Some(c) = r.coeffs.get(&v).cloned() {
                *r = r.add_scaled(&row, &-c);
            }
        }
        done.push((v, row));
    }
    for r in rows {
        if LinAtom::from_expr(r, Rel::Eq) == Truth::False {
            return None;
        }
    }
    Some(done)
}
