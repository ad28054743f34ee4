use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::Instant;

use crate::chc::{ChcProgram, Clause};
use crate::polyhedra::{self, LinConstraint, PathFormulas, PolyError};
use crate::terms::{FreshCounter, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Root,
    /// An expanded call.
    Call,
    /// A call not expanded because its predicate already occurs often
    /// enough among its ancestors.
    Frozen,
    /// A clause whose constraint is inconsistent with the path.
    Failed,
    /// A fact whose constraint is consistent with the path.
    Answer,
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub kind: NodeKind,
    /// Called predicate; for leaves, the predicate of the clause tried.
    pub pred: Option<String>,
    /// Call arguments in the namespace of the path.
    pub args: Vec<String>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Clause whose resolution produced this node.
    pub clause: Option<usize>,
    /// Constraint of that clause, renamed into the path namespace.
    pub formula: LinConstraint,
    /// Path constraint projected onto `args`.
    pub store: LinConstraint,
    /// Path interpolants at this node, one per failed leaf below it.
    pub contributions: Vec<LinConstraint>,
}

impl TreeNode {
    /// Conjunction of the contributions.
    pub fn annotation(&self) -> LinConstraint {
        LinConstraint::conjoin_all(&self.contributions)
    }
}

/// A bounded top-down derivation tree of a linear program.
#[derive(Debug, Clone)]
pub struct DerivationTree {
    pub nodes: Vec<TreeNode>,
}

pub(crate) enum Built {
    Tree(DerivationTree),
    /// Clause positions of a derivation of the goal.
    Answer(Vec<usize>),
    OutOfTime,
    TooLarge,
}

pub(crate) struct Builder<'a> {
    pub p: &'a ChcProgram,
    pub cuts: &'a BTreeSet<String>,
    pub bound: usize,
    pub deadline: Option<Instant>,
    pub max_nodes: usize,
    pub counter: FreshCounter,
}

enum Stop {
    Answer(usize),
    OutOfTime,
    TooLarge,
}

impl Builder<'_> {
    fn rename(&mut self, c: &Clause, args: &[String]) -> Clause {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        if let Some(h) = c.head_atom() {
            for (t, a) in h.args.iter().zip(args) {
                if let Term::Var(v) = t {
                    map.insert(v.clone(), a.clone());
                }
            }
        }
        for v in c.vars() {
            map.entry(v).or_insert_with(|| self.counter.fresh());
        }
        c.rename_vars(&map)
    }

    fn occurrences(nodes: &[TreeNode], mut at: Option<usize>, pred: &str) -> usize {
        let mut n = 0;
        while let Some(i) = at {
            if nodes[i].pred.as_deref() == Some(pred) && nodes[i].kind == NodeKind::Call {
                n += 1;
            }
            at = nodes[i].parent;
        }
        n
    }

    pub fn build(mut self) -> Built {
        let mut nodes = vec![TreeNode {
            kind: NodeKind::Root,
            pred: None,
            args: vec![],
            parent: None,
            children: vec![],
            clause: None,
            formula: LinConstraint::top(),
            store: LinConstraint::top(),
            contributions: vec![],
        }];
        match self.expand(&mut nodes, 0) {
            Ok(()) => Built::Tree(DerivationTree { nodes }),
            Err(Stop::Answer(leaf)) => {
                let mut ids = Vec::new();
                let mut at = Some(leaf);
                while let Some(i) = at {
                    if let Some(c) = nodes[i].clause {
                        ids.push(c);
                    }
                    at = nodes[i].parent;
                }
                ids.reverse();
                Built::Answer(ids)
            }
            Err(Stop::OutOfTime) => Built::OutOfTime,
            Err(Stop::TooLarge) => Built::TooLarge,
        }
    }

    fn expand(&mut self, nodes: &mut Vec<TreeNode>, at: usize) -> Result<(), Stop> {
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(Stop::OutOfTime);
        }
        let ids: Vec<usize> = match &nodes[at].pred {
            None => self.p.goal_clauses().to_vec(),
            Some(q) => self.p.clauses_for(q).to_vec(),
        };
        for ci in ids {
            if nodes.len() >= self.max_nodes {
                return Err(Stop::TooLarge);
            }
            let c = self.rename(self.p.clause(ci), &nodes[at].args);
            let store = nodes[at].store.and(&c.constraint);
            let sat = polyhedra::is_sat(&store);
            let (kind, pred, args, store) = match c.body.first() {
                _ if !sat => (NodeKind::Failed, nodes[at].pred.clone(), vec![], store),
                None => (NodeKind::Answer, nodes[at].pred.clone(), vec![], store),
                Some(b) => {
                    let args: Vec<String> = b
                        .args
                        .iter()
                        .map(|t| t.as_var().expect("flattened arguments").to_string())
                        .collect();
                    let keep: BTreeSet<String> = args.iter().cloned().collect();
                    let frozen = self.cuts.contains(&b.pred)
                        && Self::occurrences(nodes, Some(at), &b.pred) >= self.bound;
                    let kind = if frozen {
                        NodeKind::Frozen
                    } else {
                        NodeKind::Call
                    };
                    (
                        kind,
                        Some(b.pred.clone()),
                        args,
                        polyhedra::project(&store, &keep),
                    )
                }
            };
            let id = nodes.len();
            nodes.push(TreeNode {
                kind,
                pred,
                args,
                parent: Some(at),
                children: vec![],
                clause: Some(ci),
                formula: c.constraint,
                store,
                contributions: vec![],
            });
            nodes[at].children.push(id);
            match kind {
                NodeKind::Answer => return Err(Stop::Answer(id)),
                NodeKind::Call => self.expand(nodes, id)?,
                _ => {}
            }
        }
        Ok(())
    }
}

impl DerivationTree {
    fn path_to(&self, leaf: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut at = Some(leaf);
        while let Some(i) = at {
            path.push(i);
            at = self.nodes[i].parent;
        }
        path.reverse();
        path
    }

    /// Attaches to every node on the path of each failed leaf the path
    /// interpolant at that node.
    pub(crate) fn annotate(&mut self, deadline: Option<Instant>) -> bool {
        let leaves: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].kind == NodeKind::Failed)
            .collect();
        for leaf in leaves {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return false;
            }
            let path = self.path_to(leaf);
            let formulas: Vec<LinConstraint> = path[1..]
                .iter()
                .map(|&i| self.nodes[i].formula.clone())
                .collect();
            let Ok(itps) = polyhedra::sequence_interpolants(&PathFormulas::new(formulas)) else {
                continue;
            };
            for (j, &node) in path.iter().enumerate().take(path.len() - 1).skip(1) {
                let itp = &itps[j];
                if !self.nodes[node].contributions.contains(itp) {
                    self.nodes[node].contributions.push(itp.clone());
                }
            }
        }
        true
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.dump_node(0, 0, &mut out);
        out
    }

    fn dump_node(&self, at: usize, depth: usize, out: &mut String) {
        let n = &self.nodes[at];
        let pad = "  ".repeat(depth);
        let head = match n.kind {
            NodeKind::Root => "goal".to_string(),
            _ => format!(
                "{}({}) via clause {}",
                n.pred.as_deref().unwrap_or("?"),
                n.args.join(","),
                n.clause.map(|c| c.to_string()).unwrap_or_default()
            ),
        };
        let tag = match n.kind {
            NodeKind::Root | NodeKind::Call => "",
            NodeKind::Frozen => " [frozen]",
            NodeKind::Failed => " [fail]",
            NodeKind::Answer => " [answer]",
        };
        let _ = write!(out, "{pad}{head}{tag}");
        if matches!(n.kind, NodeKind::Call | NodeKind::Frozen) {
            let _ = write!(out, " store {{{}}}", n.store);
        }
        if !n.contributions.is_empty() {
            let _ = write!(out, " itp {{{}}}", n.annotation());
        }
        out.push('\n');
        for &c in &n.children {
            self.dump_node(c, depth + 1, out);
        }
    }
}

/// The annotation of `node`: the conjunction of the interpolants its
/// children contribute. Fails if an answer lies below `node`.
pub fn tree_interpolant(tree: &DerivationTree, node: usize) -> Result<LinConstraint, PolyError> {
    let mut stack = vec![node];
    while let Some(i) = stack.pop() {
        if tree.nodes[i].kind == NodeKind::Answer {
            return Err(PolyError::Precondition("answer below the node"));
        }
        stack.extend(tree.nodes[i].children.iter().copied());
    }
    Ok(tree.nodes[node].annotation())
}
