//! Dense two-phase simplex over exact rationals with Bland's rule.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::{LinConstraint, Rel};
use crate::terms::Rat;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { value: Rat, point: Vec<Rat> },
}

/// `maximize c·x  s.t.  rows`, with each variable free or nonnegative.
#[derive(Debug, Clone)]
pub(crate) struct Lp {
    names: Vec<String>,
    nonneg: Vec<bool>,
    rows: Vec<(Vec<Rat>, Rel, Rat)>,
}

impl Lp {
    pub(crate) fn new(nonneg: Vec<bool>) -> Self {
        Lp {
            names: Vec::new(),
            nonneg,
            rows: Vec::new(),
        }
    }

    pub(crate) fn add_row(&mut self, coeffs: Vec<Rat>, rel: Rel, rhs: Rat) {
        debug_assert_eq!(coeffs.len(), self.nonneg.len());
        self.rows.push((coeffs, rel, rhs));
    }

    /// One free column per variable of `c`, in name order.
    pub(crate) fn from_constraint(c: &LinConstraint) -> Self {
        let names: Vec<String> = c.vars().into_iter().collect();
        let index: BTreeMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let mut lp = Lp::new(vec![false; names.len()]);
        for a in c.atoms() {
            let mut row = vec![Rat::zero(); names.len()];
            for (v, q) in a.coeffs() {
                row[index[v.as_str()]] = q.clone();
            }
            lp.add_row(row, a.rel(), a.bound().clone());
        }
        lp.names = names;
        lp
    }

    /// Objective vector for `expr`; `None` if `expr` mentions a variable the
    /// LP does not constrain (so the objective is unbounded when feasible).
    pub(crate) fn objective(&self, expr: &BTreeMap<String, Rat>) -> Option<Vec<Rat>> {
        let mut obj = vec![Rat::zero(); self.nonneg.len()];
        for (v, q) in expr {
            match self.names.iter().position(|n| n == v) {
                Some(i) => obj[i] = q.clone(),
                None if q.is_zero() => {}
                None => return None,
            }
        }
        Some(obj)
    }

    pub(crate) fn assignment(&self, point: &[Rat]) -> BTreeMap<String, Rat> {
        self.names
            .iter()
            .cloned()
            .zip(point.iter().cloned())
            .collect()
    }

    pub(crate) fn maximize(&self, objective: Option<&[Rat]>) -> LpOutcome {
        let mut t = Tableau::build(self);
        if t.phase_one().is_none() {
            return LpOutcome::Infeasible;
        }
        let zeros;
        let obj = match objective {
            Some(o) => o,
            None => {
                zeros = vec![Rat::zero(); self.nonneg.len()];
                &zeros
            }
        };
        let cost = t.lift_objective(obj);
        if !t.optimize(&cost) {
            return LpOutcome::Unbounded;
        }
        let point = t.original_point();
        let value = obj
            .iter()
            .zip(&point)
            .fold(Rat::zero(), |acc, (c, x)| acc + c * x);
        LpOutcome::Optimal { value, point }
    }
}

struct Tableau {
    /// m rows of width ncols + 1; the last entry is the right-hand side.
    t: Vec<Vec<Rat>>,
    basis: Vec<usize>,
    ncols: usize,
    /// Columns that may never enter the basis (artificials after phase one).
    blocked: Vec<bool>,
    artificial_start: usize,
    /// For each original variable: (positive column, optional negative column).
    var_cols: Vec<(usize, Option<usize>)>,
}

impl Tableau {
    fn build(lp: &Lp) -> Self {
        let mut var_cols = Vec::with_capacity(lp.nonneg.len());
        let mut ncols = 0;
        for &nn in &lp.nonneg {
            if nn {
                var_cols.push((ncols, None));
                ncols += 1;
            } else {
                var_cols.push((ncols, Some(ncols + 1)));
                ncols += 2;
            }
        }
        let nslack = lp.rows.iter().filter(|r| r.1 == Rel::Le).count();
        let slack_start = ncols;
        ncols += nslack;
        let artificial_start = ncols;
        // Decide which rows need an artificial.
        let mut needs_art = Vec::with_capacity(lp.rows.len());
        for (_, rel, rhs) in &lp.rows {
            needs_art.push(!(*rel == Rel::Le && !rhs.is_negative()));
        }
        let nart = needs_art.iter().filter(|b| **b).count();
        ncols += nart;
        let mut t = Vec::with_capacity(lp.rows.len());
        let mut basis = Vec::with_capacity(lp.rows.len());
        let mut slack = slack_start;
        let mut art = artificial_start;
        for (i, (coeffs, rel, rhs)) in lp.rows.iter().enumerate() {
            let mut row = vec![Rat::zero(); ncols + 1];
            for (j, q) in coeffs.iter().enumerate() {
                if q.is_zero() {
                    continue;
                }
                let (p, n) = var_cols[j];
                row[p] = q.clone();
                if let Some(n) = n {
                    row[n] = -q.clone();
                }
            }
            let mut slack_col = None;
            if *rel == Rel::Le {
                row[slack] = Rat::one();
                slack_col = Some(slack);
                slack += 1;
            }
            row[ncols] = rhs.clone();
            if rhs.is_negative() {
                for x in row.iter_mut() {
                    if !x.is_zero() {
                        *x = -x.clone();
                    }
                }
            }
            if needs_art[i] {
                row[art] = Rat::one();
                basis.push(art);
                art += 1;
            } else {
                basis.push(slack_col.expect("slack row"));
            }
            t.push(row);
        }
        Tableau {
            t,
            basis,
            ncols,
            blocked: vec![false; ncols],
            artificial_start,
            var_cols,
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.ncols + 1;
        let k = self.t[r][e].clone();
        if !k.is_one() {
            let inv = Rat::one() / k;
            for x in self.t[r].iter_mut() {
                if !x.is_zero() {
                    *x *= &inv;
                }
            }
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r || row[e].is_zero() {
                continue;
            }
            let f = row[e].clone();
            for j in 0..w {
                if !prow[j].is_zero() {
                    row[j] -= &f * &prow[j];
                }
            }
        }
        self.basis[r] = e;
    }

    /// Reduced costs for `cost` under the current basis.
    fn reduced(&self, cost: &[Rat]) -> Vec<Rat> {
        let mut d = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (j, x) in self.t[i][..self.ncols].iter().enumerate() {
                if !x.is_zero() {
                    d[j] -= cb * x;
                }
            }
        }
        d
    }

    /// Runs primal simplex to optimality; false if unbounded.
    fn optimize(&mut self, cost: &[Rat]) -> bool {
        let mut d = self.reduced(cost);
        loop {
            let Some(e) = (0..self.ncols).find(|&j| !self.blocked[j] && d[j].is_positive()) else {
                return true;
            };
            let mut best: Option<(usize, Rat)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[e].is_positive() {
                    let ratio = &row[self.ncols] / &row[e];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => {
                            ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                        }
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = best else {
                return false;
            };
            self.pivot(r, e);
            let f = d[e].clone();
            for (dj, t) in d.iter_mut().zip(&self.t[r]).take(self.ncols) {
                if !t.is_zero() {
                    *dj -= &f * t;
                }
            }
        }
    }

    /// Phase one; `None` when infeasible. Afterwards no artificial is basic
    /// and artificial columns are blocked.
    fn phase_one(&mut self) -> Option<()> {
        if self.artificial_start < self.ncols {
            let mut cost = vec![Rat::zero(); self.ncols];
            for c in cost[self.artificial_start..].iter_mut() {
                *c = -Rat::one();
            }
            let bounded = self.optimize(&cost);
            debug_assert!(bounded);
            for (i, &b) in self.basis.iter().enumerate() {
                if b >= self.artificial_start && !self.t[i][self.ncols].is_zero() {
                    return None;
                }
            }
            // Drive zero-valued artificials out of the basis.
            let mut i = 0;
            while i < self.t.len() {
                if self.basis[i] >= self.artificial_start {
                    match (0..self.artificial_start).find(|&j| !self.t[i][j].is_zero()) {
                        Some(j) => {
                            self.pivot(i, j);
                            i += 1;
                        }
                        None => {
                            self.t.remove(i);
                            self.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
            for b in self.blocked[self.artificial_start..].iter_mut() {
                *b = true;
            }
        }
        Some(())
    }

    fn lift_objective(&self, obj: &[Rat]) -> Vec<Rat> {
        let mut cost = vec![Rat::zero(); self.ncols];
        for (j, q) in obj.iter().enumerate() {
            let (p, n) = self.var_cols[j];
            cost[p] = q.clone();
            if let Some(n) = n {
                cost[n] = -q.clone();
            }
        }
        cost
    }

    fn column_value(&self, col: usize) -> Rat {
        match self.basis.iter().position(|&b| b == col) {
            Some(i) => self.t[i][self.ncols].clone(),
            None => Rat::zero(),
        }
    }

    fn original_point(&self) -> Vec<Rat> {
        self.var_cols
            .iter()
            .map(|&(p, n)| {
                let v = self.column_value(p);
                match n {
                    Some(n) => v - self.column_value(n),
                    None => v,
                }
            })
            .collect()
    }
}
