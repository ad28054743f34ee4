use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::ToPrimitive;

use super::{
    assemble, canonical_clause, counter_after, flatten_args, unfold, Definition, SpecError,
    Specialized,
};
use crate::chc::{Clause, Head};
use crate::frontend::{InterpreterEncoding, Label, INTERPRETER_PREDICATES};
use crate::polyhedra::{self, LinConstraint};
use crate::terms::{Atom, Term};

/// Past this many constraint-only variables a partial clause is projected.
const MAX_LOCALS: usize = 8;

fn label_of(t: &Term) -> Option<usize> {
    match t {
        Term::Num(q) if q.is_integer() => q.to_integer().to_usize(),
        _ => None,
    }
}

struct Remover<'a> {
    enc: &'a InterpreterEncoding,
    heads: BTreeSet<usize>,
    counter: crate::terms::FreshCounter,
    defs: Vec<Definition>,
    def_of: BTreeMap<usize, usize>,
    queue: VecDeque<usize>,
    out: Vec<(Clause, Vec<usize>)>,
    steps: usize,
    max_steps: usize,
}

impl Remover<'_> {
    fn definition_for(&mut self, label: usize) -> usize {
        if let Some(&d) = self.def_of.get(&label) {
            return d;
        }
        let d = self.defs.len();
        self.defs.push(Definition {
            name: format!("new{}", d + 1),
            pred: "reach".to_string(),
            params: self.enc.env_vars.clone(),
            constraint: LinConstraint::top(),
            parent: None,
        });
        self.def_of.insert(label, d);
        self.queue.push_back(d);
        d
    }

    fn definition_clause(&self, label: usize, d: usize) -> Clause {
        let vals: Vec<Term> = self
            .enc
            .env_vars
            .iter()
            .map(|v| Term::var(v.clone()))
            .collect();
        let cmd = self
            .enc
            .command_term(self.enc.imp.command(Label::At(label)));
        let cfg = Term::compound(
            "cf",
            vec![
                Term::compound(
                    "cmd",
                    vec![InterpreterEncoding::label_term(Label::At(label)), cmd],
                ),
                self.enc.env_term(&vals),
            ],
        );
        Clause::new(
            Head::Atom(Atom::new(self.defs[d].name.clone(), vals)),
            LinConstraint::top(),
            vec![Atom::new("reach", vec![cfg])],
        )
    }

    /// Unfolds interpreter atoms of `start` until only definition atoms
    /// remain, folding `reach` atoms at loop heads. With `own`, the first
    /// `reach` atom is unfolded even at a loop head.
    fn run(&mut self, start: Clause, prov: Vec<usize>, own: bool) -> Result<(), SpecError> {
        let interp = |q: &str| INTERPRETER_PREDICATES.contains(&q);
        let p = &self.enc.program;
        let mut stack = vec![(start, prov, own)];
        while let Some((c, prov, own)) = stack.pop() {
            let Some(pos) = c.body.iter().position(|a| interp(&a.pred)) else {
                self.finish(c, prov)?;
                continue;
            };
            let atom = &c.body[pos];
            if atom.pred == "reach" && !own {
                let parts = InterpreterEncoding::config_parts(&atom.args[0]);
                if let Some((l, _, vals)) = parts {
                    if let Some(l) = label_of(l).filter(|l| self.heads.contains(l)) {
                        let vals: Vec<Term> = vals.into_iter().cloned().collect();
                        let d = self.definition_for(l);
                        let mut body = c.body.clone();
                        body[pos] = Atom::new(self.defs[d].name.clone(), vals);
                        stack.push((
                            Clause::new(c.head.clone(), c.constraint.clone(), body),
                            prov,
                            false,
                        ));
                        continue;
                    }
                }
            }
            self.steps += 1;
            if self.steps > self.max_steps {
                return Err(SpecError::BudgetExceeded(self.max_steps));
            }
            let was_reach = atom.pred == "reach";
            let rs = unfold(&c, p, &interp, &mut self.counter).expect("selectable atom");
            for r in rs.into_iter().rev() {
                let mut cl = r.clause;
                let atom_vars: BTreeSet<String> = cl.atom_vars().into_iter().collect();
                if cl
                    .constraint
                    .vars()
                    .iter()
                    .filter(|v| !atom_vars.contains(*v))
                    .count()
                    > MAX_LOCALS
                {
                    cl.constraint = polyhedra::project(&cl.constraint, &atom_vars);
                    if cl.constraint.is_false() {
                        continue;
                    }
                }
                let mut prov = prov.clone();
                prov.push(r.used);
                stack.push((cl, prov, own && !was_reach));
            }
        }
        Ok(())
    }

    fn finish(&mut self, c: Clause, prov: Vec<usize>) -> Result<(), SpecError> {
        let flat = flatten_args(&c, &mut self.counter).ok_or(SpecError::Shape(prov[0]))?;
        let params = self.enc.env_vars.clone();
        let cl = canonical_clause(&flat, &|_| params.clone());
        if !cl.constraint.is_false() {
            self.out.push((cl, prov));
        }
        Ok(())
    }
}

/// Specializes the interpreter with respect to its program facts. Each
/// loop head `L` becomes a predicate `newk` over the program variables,
/// defined by `newk(X) :- reach(cf(cmd(L,C),Env(X)))`; every other program
/// point is unfolded away.
pub fn specialize_remove(
    enc: &InterpreterEncoding,
    max_steps: usize,
) -> Result<Specialized, SpecError> {
    let p = &enc.program;
    let mut r = Remover {
        enc,
        heads: enc.imp.loop_heads().into_iter().collect(),
        counter: counter_after(p, &enc.env_vars),
        defs: Vec::new(),
        def_of: BTreeMap::new(),
        queue: VecDeque::new(),
        out: Vec::new(),
        steps: 0,
        max_steps,
    };
    for &g in p.goal_clauses() {
        r.run(p.clause(g).clone(), vec![g], false)?;
    }
    while let Some(d) = r.queue.pop_front() {
        let label = *r
            .def_of
            .iter()
            .find(|(_, &v)| v == d)
            .map(|(l, _)| l)
            .expect("queued definitions have labels");
        let c = r.definition_clause(label, d);
        r.run(c, Vec::new(), true)?;
    }
    Ok(assemble(r.out, r.defs))
}
