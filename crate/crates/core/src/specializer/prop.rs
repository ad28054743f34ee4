use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{
    assemble, canonical_clause, counter_after, flatten_args, fold, unfold, SpecError, Specialized,
};
use crate::chc::{ChcProgram, Clause, Head};
use crate::polyhedra::{self, LinConstraint};
use crate::terms::{Atom, FreshCounter, Term};

/// How the constraint of a new definition is generalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Generalization {
    /// One definition per predicate, widened in place.
    #[serde(rename = "M")]
    Monovariant,
    /// Several definitions per predicate: a new call context is widened
    /// against the nearest definition of the same predicate among its
    /// ancestors, up to a bound on the variants along one ancestor chain.
    #[serde(rename = "PH")]
    Polyhedral,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropConfig {
    pub generalization: Generalization,
    /// Maximum number of definitions of one predicate along an ancestor chain.
    pub polyvariance: usize,
    pub max_steps: usize,
}

impl Default for PropConfig {
    fn default() -> Self {
        PropConfig {
            generalization: Generalization::Polyhedral,
            polyvariance: 4,
            max_steps: 200_000,
        }
    }
}

/// `name(params) :- constraint, pred(params)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Definition {
    pub name: String,
    /// The predicate the definition specializes.
    pub pred: String,
    pub params: Vec<String>,
    pub constraint: LinConstraint,
    /// The definition whose unfolding introduced this one.
    pub parent: Option<usize>,
}

impl Definition {
    pub fn clause(&self) -> Clause {
        let args: Vec<Term> = self.params.iter().map(|v| Term::var(v.clone())).collect();
        Clause::new(
            Head::Atom(Atom::new(self.name.clone(), args.clone())),
            self.constraint.clone(),
            vec![Atom::new(self.pred.clone(), args)],
        )
    }
}

struct Prop<'a> {
    vc: ChcProgram,
    cfg: &'a PropConfig,
    recursive: BTreeSet<String>,
    params: BTreeMap<String, Vec<String>>,
    counter: FreshCounter,
    defs: Vec<Definition>,
    outputs: Vec<Vec<(Clause, Vec<usize>)>>,
    queue: VecDeque<usize>,
    steps: usize,
}

impl Prop<'_> {
    fn params_of(&self, pred: &str) -> Vec<String> {
        self.params
            .get(pred)
            .cloned()
            .unwrap_or_else(|| self.vc.param_names(pred))
    }

    /// Unfolds the body atom once if `mandatory`, then keeps unfolding while
    /// it belongs to a non-recursive predicate.
    fn expand(
        &mut self,
        c: Clause,
        prov: Vec<usize>,
        mandatory: bool,
    ) -> Result<Vec<(Clause, Vec<usize>)>, SpecError> {
        let mut done = Vec::new();
        let mut stack = vec![(c, prov, mandatory)];
        while let Some((c, prov, must)) = stack.pop() {
            let Some(a) = c.body.first() else {
                done.push((c, prov));
                continue;
            };
            if !must && self.recursive.contains(&a.pred) {
                done.push((c, prov));
                continue;
            }
            self.steps += 1;
            if self.steps > self.cfg.max_steps {
                return Err(SpecError::BudgetExceeded(self.cfg.max_steps));
            }
            let rs = unfold(&c, &self.vc, &|_| true, &mut self.counter).expect("body atom");
            for r in rs.into_iter().rev() {
                let mut cl = r.clause;
                let keep: BTreeSet<String> = cl.atom_vars().into_iter().collect();
                cl.constraint = polyhedra::project(&cl.constraint, &keep);
                if cl.constraint.is_false() {
                    continue;
                }
                let mut prov = prov.clone();
                prov.push(r.used);
                stack.push((cl, prov, false));
            }
        }
        Ok(done)
    }

    fn new_definition(&mut self, pred: &str, g: LinConstraint, parent: Option<usize>) -> usize {
        let d = self.defs.len();
        self.defs.push(Definition {
            name: format!("new{}", d + 1),
            pred: pred.to_string(),
            params: self.params_of(pred),
            constraint: g,
            parent,
        });
        self.outputs.push(Vec::new());
        self.queue.push_back(d);
        d
    }

    fn replace(&mut self, d: usize, g: LinConstraint) {
        self.defs[d].constraint = g;
        self.outputs[d].clear();
        if !self.queue.contains(&d) {
            self.queue.push_back(d);
        }
    }

    fn generalize(g: &LinConstraint, pi: &LinConstraint) -> LinConstraint {
        let h = polyhedra::convex_hull(g, pi).expect("satisfiable operands");
        polyhedra::widen(g, &h).expect("satisfiable operands")
    }

    /// Picks (or creates) the definition that a call of `pred` in context
    /// `pi` (over the parameters of `pred`) is folded with.
    fn choose(&mut self, pred: &str, pi: LinConstraint, parent: Option<usize>) -> usize {
        let variants: Vec<usize> = (0..self.defs.len())
            .filter(|&i| self.defs[i].pred == pred)
            .collect();
        for &v in &variants {
            if polyhedra::entails(&pi, &self.defs[v].constraint) {
                return v;
            }
        }
        match self.cfg.generalization {
            Generalization::Monovariant => match variants.first() {
                None => self.new_definition(pred, pi, parent),
                Some(&v) => {
                    let g = Self::generalize(&self.defs[v].constraint, &pi);
                    self.replace(v, g);
                    v
                }
            },
            Generalization::Polyhedral => {
                let mut chain = Vec::new();
                let mut cur = parent;
                while let Some(a) = cur {
                    if self.defs[a].pred == pred {
                        chain.push(a);
                    }
                    cur = self.defs[a].parent;
                }
                let Some(&nearest) = chain.first() else {
                    return self.new_definition(pred, pi, parent);
                };
                let g = Self::generalize(&self.defs[nearest].constraint, &pi);
                if chain.len() >= self.cfg.polyvariance {
                    self.replace(nearest, g);
                    nearest
                } else {
                    self.new_definition(pred, g, parent)
                }
            }
        }
    }

    /// Folds every expanded clause and returns the clauses of the output.
    fn close(
        &mut self,
        expanded: Vec<(Clause, Vec<usize>)>,
        parent: Option<usize>,
    ) -> Result<Vec<(Clause, Vec<usize>)>, SpecError> {
        let mut out = Vec::new();
        for (c, prov) in expanded {
            let folded = match c.body.first() {
                None => c,
                Some(a) => {
                    let args = a.distinct_var_args().ok_or(SpecError::FoldMismatch)?;
                    let keep: BTreeSet<String> = args.iter().cloned().collect();
                    let ps = self.params_of(&a.pred);
                    let map: BTreeMap<String, String> =
                        args.iter().cloned().zip(ps.iter().cloned()).collect();
                    let pi = polyhedra::project(&c.constraint, &keep).rename_with(&map);
                    let d = self.choose(&a.pred.clone(), pi, parent);
                    fold(&c, &self.defs[d])?
                }
            };
            out.push((folded, prov));
        }
        Ok(out)
    }
}

/// Propagates constraints through a linear program by unfolding and folding
/// with generalized definitions. Only predicates reachable from the goal
/// survive, renamed `new1, new2, ...` in order of introduction.
pub fn specialize_prop(vc: &ChcProgram, cfg: &PropConfig) -> Result<Specialized, SpecError> {
    let mut counter = counter_after(vc, &[]);
    let mut flat = Vec::with_capacity(vc.len());
    for (i, c) in vc.clauses().iter().enumerate() {
        if c.body.len() > 1 {
            return Err(SpecError::NonLinear(i));
        }
        flat.push(flatten_args(c, &mut counter).ok_or(SpecError::Shape(i))?);
    }
    let vc = ChcProgram::new(flat).expect("same shape as the input");
    let params = vc
        .predicates()
        .into_iter()
        .map(|q| {
            let ps = vc.param_names(&q);
            (q, ps)
        })
        .collect();
    let mut st = Prop {
        recursive: vc.recursive_predicates(),
        vc,
        cfg,
        params,
        counter,
        defs: Vec::new(),
        outputs: Vec::new(),
        queue: VecDeque::new(),
        steps: 0,
    };

    let mut goals = Vec::new();
    for g in st.vc.goal_clauses().to_vec() {
        let c = st.vc.clause(g).clone();
        let ex = st.expand(c, vec![g], false)?;
        goals.extend(st.close(ex, None)?);
    }
    while let Some(d) = st.queue.pop_front() {
        let def = st.defs[d].clone();
        let ex = st.expand(def.clause(), Vec::new(), true)?;
        let out = st.close(ex, Some(d))?;
        // A replacement made while closing requeued `d`; its clauses will be
        // rebuilt from the new constraint.
        if !st.queue.contains(&d) {
            st.outputs[d] = out;
        }
    }

    let def_params: BTreeMap<String, Vec<String>> = st
        .defs
        .iter()
        .map(|d| (d.name.clone(), d.params.clone()))
        .collect();
    let canon = |c: &Clause| canonical_clause(c, &|n| def_params[n].clone());
    let mut all: Vec<(Clause, Vec<usize>)> =
        goals.iter().map(|(c, p)| (canon(c), p.clone())).collect();
    for out in &st.outputs {
        all.extend(out.iter().map(|(c, p)| (canon(c), p.clone())));
    }
    Ok(assemble(all, st.defs))
}
